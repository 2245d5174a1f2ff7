"""Run orchestration: resolve, build, solve, decode, measure and persist.

Each run lives in ``<runs root>/<fingerprint>/``. The root comes from the
``H2NET_RUNS_DIR`` environment variable (default ``./runs``). A run
directory is written under a temporary name and renamed into place, so a
directory that exists is always complete; running the same scenario again
loads it instead of solving.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import shutil
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .domain import ScenarioSpec, ValidationError
from .formulation import (COST_PARTS, PlanSolution, build_model, extract_solution, plan_failures,
                          verify_plan)
from .model import MilpModel
from .report import (MetricsBundle, compute_metrics, default_bin_edges, fmt, mode_share_by_period,
                     write_metrics, write_table)
from .scenario import fingerprint, resolve_document, spec_to_document
from .solver import (DegenerateDenominatorError, MilpOptions, MilpStatus, solve_fractional,
                     solve_lp)
from .solver.simplex import LpStatus

log = logging.getLogger(__name__)

RUNS_ENV = "H2NET_RUNS_DIR"
SOLUTION_HEADER = ("family", "indices", "value")
COMPARE_HEADER = ("name", "fingerprint", "metric", "value", "relative_delta")

DEGENERATE = "degenerate"  # delivered volume was zero


def runs_root(override: str | os.PathLike | None = None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(RUNS_ENV, "runs"))


@dataclass
class RunResult:
    fingerprint: str
    status: str
    spec: ScenarioSpec
    solver_options: MilpOptions
    plan: PlanSolution | None
    metrics: MetricsBundle | None
    solver_stats: dict[str, Any] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    run_dir: Path | None = None
    reused: bool = False

    @property
    def provenance(self) -> tuple[str, ...]:
        return self.spec.provenance

    @property
    def name(self) -> str:
        return self.spec.name or self.fingerprint

    @property
    def lch2(self) -> float:
        return self.metrics.lch2 if self.metrics is not None else float("nan")

    @property
    def cost_breakdown(self) -> dict[str, float]:
        return dict(self.metrics.breakdown.components) if self.metrics is not None else {}

    @property
    def total_cost(self) -> float:
        return self.metrics.breakdown.total_cost if self.metrics is not None else float("nan")

    @property
    def delivered(self) -> float:
        return self.metrics.breakdown.delivered if self.metrics is not None else float("nan")

    @property
    def ok(self) -> bool:
        return self.status == MilpStatus.OPTIMAL.value


def _as_spec(scenario) -> tuple[ScenarioSpec, MilpOptions | None]:
    if isinstance(scenario, ScenarioSpec):
        return scenario, None
    if isinstance(scenario, Mapping):
        resolved = resolve_document(scenario)
        return resolved.spec, resolved.solver
    raise TypeError(f"expected a ScenarioSpec or scenario document, got {type(scenario).__name__}")


def diagnose(model: MilpModel, limit: int = 8) -> list[str]:
    """Constraint families that bind in the LP relaxation.

    For an infeasible relaxation these are the rows phase 1 could not
    satisfy; otherwise the families with nonzero duals.
    """
    lp = solve_lp(model.relaxed())
    tags = model.row_tags
    counts: dict[str, int] = {}
    if lp.status is LpStatus.INFEASIBLE:
        for i in lp.infeasible_rows:
            counts[tags[i]] = counts.get(tags[i], 0) + 1
        head = "LP relaxation infeasible; unsatisfied rows by family"
    else:
        for i in np.flatnonzero(np.abs(lp.duals) > 1e-9):
            counts[tags[i]] = counts.get(tags[i], 0) + 1
        head = f"LP relaxation {lp.status.value}; binding rows by family"
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]
    return [head + ": " + ", ".join(f"{tag} ({n})" for tag, n in ranked)] if ranked else [head]


def run(scenario, opts: MilpOptions | None = None, runs_dir: str | os.PathLike | None = None,
        persist: bool = True, bin_edges: Sequence[int] | None = None,
        reuse: bool = True) -> RunResult:
    """Solve a scenario (spec or document) and persist the outcome.

    Solver options come from ``opts``, else from the document, else the
    defaults. Limits and infeasibility are reported through ``status``.
    """
    spec, doc_opts = _as_spec(scenario)
    opts = opts or doc_opts or MilpOptions()
    fp = fingerprint(spec, opts)
    root = runs_root(runs_dir)
    target = root / fp
    if persist and reuse and (target / "result.json").is_file():
        log.info("reusing run directory %s", target)
        result = load_run(target, bin_edges=bin_edges)
        result.reused = True
        return result

    lines: list[str] = [f"fingerprint {fp}", f"scenario {spec.name or '-'}"]
    lines += [f"provenance: {p}" for p in spec.provenance]
    model = build_model(spec)
    warnings = list(model.metadata.get("warnings", []))
    lines += [f"warning: {w}" for w in warnings]
    lines.append(f"model: {model.n_rows} rows, {model.n_cols} columns, "
                 f"{int(model.integer.sum())} integer")

    start = time.perf_counter()
    diagnostics: list[str] = []
    x = None
    try:
        fr = solve_fractional(model, opts)
        status = fr.status.value
        x = fr.x
        stats = {"status": status, "dinkelbach_iterations": fr.iterations, "nodes": fr.nodes,
                 "ratios": list(fr.ratios), "parametric_values": list(fr.aux_values)}
        if fr.status is MilpStatus.INFEASIBLE:
            diagnostics += diagnose(model)
        elif fr.status.is_limit and x is None:
            diagnostics.append(f"solver stopped at {status} before finding a feasible plan")
    except DegenerateDenominatorError as exc:
        status = DEGENERATE
        diagnostics.append(f"TV = 0: {exc}; levelized cost undefined")
        x = exc.milp.x if exc.milp is not None else None
        stats = {"status": status, "dinkelbach_iterations": 0,
                 "nodes": exc.milp.nodes if exc.milp is not None else 0,
                 "ratios": [], "parametric_values": []}
    stats["wall_time"] = time.perf_counter() - start
    lines.append(f"solve: {status} after {stats['nodes']} nodes, "
                 f"{stats['dinkelbach_iterations']} ratio updates")

    plan = metrics = None
    if x is not None:
        plan = extract_solution(model, x)
        failures = plan_failures(verify_plan(spec, plan))
        if failures:
            diagnostics += [f"invariant: {f}" for f in failures[:20]]
        metrics = compute_metrics(spec, plan, bin_edges)
        if metrics.breakdown.identity_error > 1e-6:
            diagnostics.append("cost breakdown differs from the solver total by "
                               f"{metrics.breakdown.identity_error:.3e} (relative)")
        lines.append(f"LCH2 {fmt(metrics.lch2)} $/kg, TC {fmt(metrics.breakdown.total_cost)}, "
                     f"TV {fmt(metrics.breakdown.delivered)}")
    lines += [f"diagnostic: {d}" for d in diagnostics]

    result = RunResult(fp, status, spec, opts, plan, metrics, stats, diagnostics, warnings)
    if persist:
        result.run_dir = _persist(result, model, x, root, lines)
    return result


# -- persistence ----------------------------------------------------------

def _solution_rows(model: MilpModel, x: np.ndarray) -> list[list[str]]:
    rows = []
    for j in np.flatnonzero(x):
        family, key = model.col_keys[j]
        rows.append([family, ";".join(str(k) for k in key), fmt(x[j])])
    return rows


def _result_json(result: RunResult) -> dict:
    m = result.metrics
    out = {
        "fingerprint": result.fingerprint,
        "name": result.spec.name,
        "status": result.status,
        "solver_options": asdict(result.solver_options),
        "solver_stats": result.solver_stats,
        "diagnostics": result.diagnostics,
        "warnings": result.warnings,
        "provenance": list(result.spec.provenance),
        "has_plan": result.plan is not None,
    }
    if m is not None:
        out.update(lch2=m.lch2 if m.breakdown.defined else None,
                   total_cost=m.breakdown.total_cost, delivered=m.breakdown.delivered,
                   solver_total=m.breakdown.solver_total, cost_breakdown=m.breakdown.components)
    return out


def _persist(result: RunResult, model: MilpModel, x, root: Path, lines: list[str]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    target = root / result.fingerprint
    tmp = Path(tempfile.mkdtemp(prefix=f".{result.fingerprint}-", dir=root))
    try:
        doc = spec_to_document(result.spec, result.solver_options)
        (tmp / "scenario.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
        if x is not None:
            write_table(tmp / "solution.csv", SOLUTION_HEADER, _solution_rows(model, x))
        if result.metrics is not None:
            write_metrics(result.metrics, tmp)
        (tmp / "run.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (tmp / "result.json").write_text(
            json.dumps(_result_json(result), indent=2, sort_keys=True, default=_json_default) + "\n",
            encoding="utf-8")
        if target.exists():
            shutil.rmtree(target)
        os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return target


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def read_solution_csv(path: Path, model: MilpModel) -> np.ndarray:
    lookup = {key: j for j, key in enumerate(model.col_keys)}
    x = np.zeros(model.n_cols)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SOLUTION_HEADER:
            raise ValidationError(f"{path}: unexpected header {header}")
        for family, indices, value in reader:
            key = (family, tuple(int(k) for k in indices.split(";")) if indices else ())
            if key not in lookup:
                raise ValidationError(f"{path}: unknown variable {family}[{indices}]")
            x[lookup[key]] = float(value)
    return x


def load_run(directory: str | os.PathLike, bin_edges: Sequence[int] | None = None) -> RunResult:
    """Rebuild a RunResult from a run directory."""
    d = Path(directory)
    if not d.is_dir():
        raise ValidationError(f"run directory not found: {d}")
    for name in ("scenario.json", "result.json"):
        if not (d / name).is_file():
            raise ValidationError(f"run directory {d} is missing {name}")
    doc = json.loads((d / "scenario.json").read_text(encoding="utf-8"))
    resolved = resolve_document(doc)
    info = json.loads((d / "result.json").read_text(encoding="utf-8"))
    spec = resolved.spec
    plan = metrics = None
    if info.get("has_plan"):
        model = build_model(spec)
        x = read_solution_csv(d / "solution.csv", model)
        plan = extract_solution(model, x)
        metrics = compute_metrics(spec, plan, bin_edges)
    return RunResult(info["fingerprint"], info["status"], spec, resolved.solver, plan, metrics,
                     info.get("solver_stats", {}), info.get("diagnostics", []),
                     info.get("warnings", []), d)


# -- comparison -----------------------------------------------------------

@dataclass
class Comparison:
    names: list[str]
    fingerprints: list[str]
    metrics: list[str]
    values: np.ndarray  # (results, metrics)
    deltas: np.ndarray
    periods: int
    warnings: list[str] = field(default_factory=list)

    def rows(self) -> list[list[str]]:
        out = []
        for r, (name, fp) in enumerate(zip(self.names, self.fingerprints)):
            for k, metric in enumerate(self.metrics):
                out.append([name, fp, metric, fmt(self.values[r, k]), fmt(self.deltas[r, k])])
        return out

    def value(self, name_or_index, metric: str) -> float:
        r = name_or_index if isinstance(name_or_index, int) else self.names.index(name_or_index)
        return float(self.values[r, self.metrics.index(metric)])

    def delta(self, name_or_index, metric: str) -> float:
        r = name_or_index if isinstance(name_or_index, int) else self.names.index(name_or_index)
        return float(self.deltas[r, self.metrics.index(metric)])


def _relative(v: float, ref: float) -> float:
    if v == ref:
        return 0.0
    if ref == 0.0 or not (math.isfinite(v) and math.isfinite(ref)):
        return float("nan")
    return (v - ref) / abs(ref)


def compare(results: Sequence[RunResult]) -> Comparison:
    """Side-by-side LCH2, cost components, final coverage and final-bin mode shares.

    Deltas are relative to the first result. Results with different horizons
    are compared over their common leading periods only.
    """
    results = list(results)
    if len(results) < 2:
        raise ValidationError("compare needs at least two results")
    for r in results:
        if r.metrics is None or r.plan is None:
            raise ValidationError(f"run {r.name} has no solved plan to compare")
    horizons = {(r.spec.horizon.start_year, r.spec.periods) for r in results}
    warnings: list[str] = []
    T = min(r.spec.periods for r in results)
    if len(horizons) > 1:
        warnings.append(f"horizons differ ({sorted(horizons)}); comparing the first {T} periods")
        log.warning(warnings[-1])
    labels = sorted({m for r in results for m in r.plan.modes})
    metric_names = (["LCH2", "TC", "TV"] + list(COST_PARTS) + ["final_coverage"]
                    + [f"final_share_{m.label}" for m in labels])
    values = []
    for r in results:
        costs = {k: float(np.sum(r.metrics.costs[k][:T])) for k in COST_PARTS}
        tc = math.fsum(costs.values())
        tv = float(np.sum(r.plan.flow_by_mode()[:, :T]))
        edges = default_bin_edges(r.spec.horizon.start_year, T)
        partial = _truncate(r.plan, T)
        shares = mode_share_by_period(partial, edges)
        row = [tc / tv if tv > 0 else float("nan"), tc, tv] + [costs[k] for k in COST_PARTS]
        row.append(float(r.metrics.coverage[T - 1]))
        for m in labels:
            row.append(float(shares.share_of(m)[-1]) if m in shares.modes else 0.0)
        values.append(row)
    values = np.array(values, dtype=float)
    deltas = np.array([[_relative(v, ref) for v, ref in zip(row, values[0])] for row in values])
    return Comparison([r.name for r in results], [r.fingerprint for r in results], metric_names,
                      values, deltas, T, warnings)


def _truncate(plan: PlanSolution, T: int) -> PlanSolution:
    if plan.periods == T:
        return plan
    from dataclasses import replace
    return replace(plan, values={k: v[..., :T] for k, v in plan.values.items()})


__all__ = [
    "COMPARE_HEADER", "Comparison", "DEGENERATE", "RUNS_ENV", "RunResult", "SOLUTION_HEADER",
    "compare", "diagnose", "load_run", "read_solution_csv", "run", "runs_root",
]
