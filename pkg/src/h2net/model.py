"""Solver-agnostic sparse MILP container and an incremental builder."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "L", "E", "G"


@dataclass(frozen=True)
class MilpModel:
    """min c.x  s.t.  A x (sense) rhs,  lb <= x <= ub,  x_j integer where flagged.

    ``index`` maps each variable family to an integer array of column ids
    shaped like the family's index space; ``col_keys`` is the inverse map.
    ``tv`` is the linear delivered-volume expression used as the ratio
    denominator, and ``cost_parts`` splits ``c`` into named cost components.
    ``offset`` is a constant added to the objective. ``implied`` flags integer
    columns whose integrality already follows from equality rows over other
    integer columns; branch-and-bound never branches on them.
    """

    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    col_keys: tuple[tuple[str, tuple[int, ...]], ...]
    row_tags: tuple[str, ...]
    row_keys: tuple[tuple[int, ...], ...]
    index: dict[str, np.ndarray]
    index_names: dict[str, tuple[str, ...]] = field(default_factory=dict)
    tv: np.ndarray | None = None
    cost_parts: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)
    name: str = "model"
    offset: float = 0.0
    implied: np.ndarray | None = None

    def __post_init__(self):
        if self.implied is None:
            object.__setattr__(self, "implied", np.zeros(len(self.c), dtype=bool))
        for arr in (self.c, self.rhs, self.lb, self.ub, self.integer, self.sense):
            arr.setflags(write=False)
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.A.data)):
            raise ValueError("model has non-finite coefficients")
        if np.any(self.lb > self.ub):
            bad = int(np.argmax(self.lb > self.ub))
            raise ValueError(f"inconsistent bounds on column {self.col_keys[bad]}")

    @property
    def n_cols(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def col_name(self, j: int) -> str:
        family, idx = self.col_keys[j]
        return "_".join([family, *map(str, idx)])

    def row_name(self, i: int) -> str:
        return "_".join([self.row_tags[i], *map(str, self.row_keys[i])])

    def rows_tagged(self, tag: str) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.row_tags) if t == tag], dtype=int)

    def family_count(self, family: str) -> int:
        return int(self.index[family].size) if family in self.index else 0

    def tag_counts(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for t in self.row_tags:
            out[t] += 1
        return dict(out)

    def with_objective(self, c: np.ndarray) -> "MilpModel":
        return _replace(self, c=np.asarray(c, dtype=float).copy())

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "MilpModel":
        return _replace(self, lb=np.asarray(lb, dtype=float).copy(),
                        ub=np.asarray(ub, dtype=float).copy())

    def relaxed(self) -> "MilpModel":
        none = np.zeros(self.n_cols, dtype=bool)
        return _replace(self, integer=none, implied=none.copy())

    @property
    def branching(self) -> np.ndarray:
        """Integer columns that branch-and-bound may branch on."""
        return self.integer & ~self.implied

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x

    def row_violation(self, x: np.ndarray) -> np.ndarray:
        act = self.A @ x
        viol = np.zeros_like(act)
        le, ge, eq = self.sense == LE, self.sense == GE, self.sense == EQ
        viol[le] = np.maximum(act[le] - self.rhs[le], 0.0)
        viol[ge] = np.maximum(self.rhs[ge] - act[ge], 0.0)
        viol[eq] = np.abs(act[eq] - self.rhs[eq])
        return viol


def _replace(model: MilpModel, **changes) -> MilpModel:
    from dataclasses import replace
    return replace(model, **changes)


class ModelBuilder:
    def __init__(self, name: str = "model"):
        self.name = name
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._implied: list[bool] = []
        self._keys: list[tuple[str, tuple[int, ...]]] = []
        self.index: dict[str, np.ndarray] = {}
        self.index_names: dict[str, tuple[str, ...]] = {}
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._tags: list[str] = []
        self._row_keys: list[tuple[int, ...]] = []
        self.cost_parts: dict[str, np.ndarray] = {}
        self.metadata: dict[str, Any] = {}

    def add_family(self, family: str, shape: tuple[int, ...], axes: tuple[str, ...],
                   lb: float = 0.0, ub: float = np.inf, integer: bool = False,
                   implied: bool = False) -> np.ndarray:
        if family in self.index:
            raise ValueError(f"family {family} already defined")
        start = len(self._lb)
        count = int(np.prod(shape)) if shape else 1
        ids = np.arange(start, start + count).reshape(shape)
        for idx in np.ndindex(*shape):
            self._keys.append((family, tuple(int(v) for v in idx)))
        self._lb.extend([lb] * count)
        self._ub.extend([ub] * count)
        self._int.extend([integer] * count)
        self._implied.extend([integer and implied] * count)
        self.index[family] = ids
        self.index_names[family] = axes
        return ids

    def set_bounds(self, col: int, lb: float | None = None, ub: float | None = None):
        if lb is not None:
            self._lb[col] = lb
        if ub is not None:
            self._ub[col] = ub

    def add_row(self, cols, vals, sense: str, rhs: float, tag: str, key: tuple[int, ...] = ()):
        i = len(self._rhs)
        merged: dict[int, float] = {}
        for c, v in zip(cols, vals):
            merged[int(c)] = merged.get(int(c), 0.0) + float(v)
        for c, v in merged.items():
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(c)
                self._vals.append(v)
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        self._tags.append(tag)
        self._row_keys.append(tuple(int(k) for k in key))
        return i

    def add_cost(self, part: str, col: int, value: float):
        n = len(self._lb)
        vec = self.cost_parts.get(part)
        if vec is None or len(vec) < n:
            grown = np.zeros(n)
            if vec is not None:
                grown[:len(vec)] = vec
            vec = grown
            self.cost_parts[part] = vec
        vec[col] += value

    def build(self, tv_cols=None) -> MilpModel:
        n = len(self._lb)
        m = len(self._rhs)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        parts = {}
        for name, vec in self.cost_parts.items():
            full = np.zeros(n)
            full[:len(vec)] = vec
            parts[name] = full
        c = np.zeros(n)
        for vec in parts.values():
            c += vec
        tv = None
        if tv_cols is not None:
            tv = np.zeros(n)
            tv[np.asarray(tv_cols, dtype=int).ravel()] = 1.0
        return MilpModel(
            c=c, A=A, sense=np.array(self._sense, dtype="<U1"), rhs=np.array(self._rhs),
            lb=np.array(self._lb, dtype=float), ub=np.array(self._ub, dtype=float),
            integer=np.array(self._int, dtype=bool), col_keys=tuple(self._keys),
            row_tags=tuple(self._tags), row_keys=tuple(self._row_keys), index=self.index,
            index_names=self.index_names, tv=tv, cost_parts=parts, metadata=self.metadata,
            name=self.name, implied=np.array(self._implied, dtype=bool))
