"""Demand-weighted K-means placement of hydrogen hubs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .domain import GeoPoint, NodeId, NodeKind, ValidationError


@dataclass(frozen=True)
class ClusteringResult:
    centroids: tuple[GeoPoint, ...]
    assignment: Mapping[NodeId, int]
    inertia: float
    iterations: int = 0
    inertia_history: tuple[float, ...] = field(default=(), compare=False)


def _plusplus_init(xy: np.ndarray, w: np.ndarray, K: int, rng: np.random.Generator):
    n = len(xy)
    first = rng.choice(n, p=w / w.sum())
    centers = [xy[first]]
    d2 = ((xy - xy[first]) ** 2).sum(axis=1)
    for _ in range(1, K):
        score = w * d2
        if score.sum() <= 0:
            # every weighted point already coincides with a centre
            score = (d2 > 0).astype(float)
        pick = rng.choice(n, p=score / score.sum())
        centers.append(xy[pick])
        d2 = np.minimum(d2, ((xy - xy[pick]) ** 2).sum(axis=1))
    return np.array(centers, dtype=float)


def _assign(xy: np.ndarray, centers: np.ndarray):
    d2 = ((xy[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)  # ties go to the lowest hub index
    return labels, d2[np.arange(len(xy)), labels]


def kmeans_hubs(points: Sequence[tuple[GeoPoint, float]], K: int, seed: int = 0,
                max_iters: int = 100, ids: Sequence[NodeId] | None = None,
                weighted: bool = True) -> ClusteringResult:
    """Lloyd's algorithm on (lat, lon) treated as planar coordinates.

    Seeding is weighted k-means++ drawn from ``numpy.random.default_rng(seed)``.
    A cluster left without weight is reseeded at the point with the largest
    weighted squared distance to its current centre.
    """
    if K < 1:
        raise ValidationError("K must be at least 1")
    if ids is None:
        ids = [NodeId(NodeKind.DEMAND, n) for n in range(len(points))]
    if len(ids) != len(points):
        raise ValidationError("ids and points differ in length")
    xy = np.array([[p.latitude, p.longitude] for p, _ in points], dtype=float).reshape(-1, 2)
    w = np.array([wt for _, wt in points], dtype=float)
    if not weighted:
        w = np.ones_like(w)
    if np.any(w < 0):
        raise ValidationError("weights must be non-negative")
    if len(w) == 0 or w.sum() <= 0:
        raise ValidationError("weights must not all be zero")
    distinct = len({(float(a), float(b)) for a, b in xy})
    if K > distinct:
        raise ValidationError(f"K={K} exceeds the number of distinct points ({distinct})")

    rng = np.random.default_rng(seed)
    centers = _plusplus_init(xy, w, K, rng)
    labels, d2 = _assign(xy, centers)
    history = [float(np.dot(w, d2))]
    iterations = 0
    for iterations in range(1, max_iters + 1):
        for k in range(K):
            mask = labels == k
            mass = w[mask].sum()
            if mass > 0:
                centers[k] = (w[mask, None] * xy[mask]).sum(axis=0) / mass
            else:
                far = int(np.argmax(w * d2))
                centers[k] = xy[far]
                d2[far] = 0.0
        new_labels, d2 = _assign(xy, centers)
        history.append(float(np.dot(w, d2)))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    centroids = tuple(GeoPoint(float(c[0]), float(c[1])) for c in centers)
    assignment = {node: int(k) for node, k in zip(ids, labels)}
    return ClusteringResult(centroids, assignment, history[-1], iterations, tuple(history))


def assignment_to_cj(result: ClusteringResult, hub_ids: Sequence[NodeId]) -> dict[NodeId, NodeId]:
    if len(hub_ids) != len(result.centroids):
        raise ValidationError(
            f"{len(hub_ids)} hub ids given for {len(result.centroids)} centroids")
    return {j: hub_ids[k] for j, k in result.assignment.items()}
