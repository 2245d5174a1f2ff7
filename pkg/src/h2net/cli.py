"""Command-line interface.

Exit status: 0 success, 1 validation or usage error, 2 solver limit reached,
3 infeasible model.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .domain import ValidationError
from .engine import COMPARE_HEADER, DEGENERATE, compare, load_run, run
from .forecast import DEFAULT_GROWTH_RATE, county_demand_series
from .formulation import build_model
from .report import metrics_tables
from .scenario import (BUILTIN_IDS, builtin_document, load_counties, resolve_document,
                       spec_to_document)
from .solver import MilpOptions, MilpStatus, export_mps

EXIT_OK, EXIT_INVALID, EXIT_LIMIT, EXIT_INFEASIBLE = 0, 1, 2, 3

FORECAST_HEADER = ("county", "year", "population", "share", "demand_kg")
CLUSTER_HEADER = ("demand_node", "latitude", "longitude", "hub", "hub_latitude", "hub_longitude")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _scenario_document(source: str, periods: int | None, seed: int | None) -> dict:
    if source.upper() in BUILTIN_IDS:
        doc = builtin_document(source, periods)
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
        if periods is not None:
            raise ValidationError("--periods only applies to builtin scenarios")
    if seed is not None and isinstance(doc, dict) and doc.get("mode") == "hub" \
            and "hub_nodes" not in doc:
        doc.setdefault("clustering", {})["seed"] = seed
    return doc


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _table_text(header, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _solver_options(args, base: MilpOptions) -> MilpOptions:
    from dataclasses import replace
    changes = {}
    if args.node_limit is not None:
        changes["node_limit"] = args.node_limit
    if args.time_limit is not None:
        changes["time_limit"] = args.time_limit
    if args.gap is not None:
        changes["relative_gap"] = args.gap
    return replace(base, **changes) if changes else base


def cmd_forecast(args) -> int:
    if args.population is not None:
        years = range(args.start_year, args.start_year + (args.periods or 26))
        series = {"county": county_demand_series(args.population, args.base_year, years,
                                                 args.growth_rate)}
    else:
        resolved = resolve_document(_scenario_document(args.scenario, args.periods, args.seed))
        series = resolved.forecast_rows
        if not series:
            raise ValidationError("scenario gives explicit demand; nothing to forecast")
    rows = [[name, r["year"], r["population"], repr(float(r["share"])), repr(float(r["demand"]))]
            for name, rs in series.items() for r in rs]
    _emit(_table_text(FORECAST_HEADER, rows, args.format), args.out)
    return EXIT_OK


def cmd_cluster(args) -> int:
    doc = _scenario_document(args.scenario, args.periods, args.seed)
    doc["mode"] = "hub"
    doc.pop("hub_nodes", None)
    doc.pop("hub_assignment", None)
    cl = doc.setdefault("clustering", {})
    if args.k is not None:
        cl["K"] = args.k
    spec = resolve_document(doc).spec
    hubs = {h.id: h for h in spec.hub_nodes}
    rows = []
    for n in spec.demand_nodes:
        h = hubs[spec.hub_assignment[n.id]]
        rows.append([n.name, repr(n.location.latitude), repr(n.location.longitude), h.name,
                     repr(h.location.latitude), repr(h.location.longitude)])
    _emit(_table_text(CLUSTER_HEADER, rows, args.format), args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    spec = resolve_document(_scenario_document(args.scenario, args.periods, args.seed)).spec
    model = build_model(spec)
    for w in model.metadata.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)
    _emit(export_mps(model), args.out)
    return EXIT_OK


def _status_exit(status: str) -> int:
    if status == MilpStatus.OPTIMAL.value:
        return EXIT_OK
    if status == DEGENERATE:
        return EXIT_INVALID
    if MilpStatus(status).is_limit:
        return EXIT_LIMIT
    return EXIT_INFEASIBLE


def cmd_solve(args) -> int:
    resolved = resolve_document(_scenario_document(args.scenario, args.periods, args.seed))
    opts = _solver_options(args, resolved.solver)
    result = run(resolved.spec, opts, runs_dir=args.out, reuse=not args.force)
    print(f"run directory: {result.run_dir}")
    print(f"status: {result.status}{' (reused)' if result.reused else ''}")
    if result.metrics is not None:
        b = result.metrics.breakdown
        print(f"LCH2: {b.lch2!r} $/kg" if b.defined else "LCH2: undefined (TV = 0)")
        print(f"TC: {b.total_cost!r}  TV: {b.delivered!r}")
    for d in result.diagnostics:
        print(f"diagnostic: {d}", file=sys.stderr)
    return _status_exit(result.status)


def cmd_report(args) -> int:
    result = load_run(args.run_dir)
    if result.metrics is None:
        raise ValidationError(f"run {args.run_dir} has no plan (status {result.status})")
    tables = metrics_tables(result.metrics)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        suffix = ".json" if args.format == "json" else ".csv"
        for name, (header, rows) in tables.items():
            (out / (Path(name).stem + suffix)).write_text(_table_text(header, rows, args.format),
                                                         encoding="utf-8")
        print(f"wrote {len(tables)} tables to {out}")
    else:
        names = [args.table + ".csv"] if args.table else list(tables)
        for name in names:
            header, rows = tables[name]
            if len(names) > 1:
                sys.stdout.write(f"# {name}\n")
            sys.stdout.write(_table_text(header, rows, args.format))
    return EXIT_OK


def cmd_compare(args) -> int:
    results = [load_run(d) for d in args.run_dirs]
    table = compare(results)
    for w in table.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(_table_text(COMPARE_HEADER, table.rows(), args.format), args.out)
    return EXIT_OK


def cmd_scenario(args) -> int:
    resolved = resolve_document(_scenario_document(args.id, args.periods, args.seed))
    doc = spec_to_document(resolved.spec, resolved.solver)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="h2net", description="Hydrogen transport network planning toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario JSON file or builtin id (S1-S5)")
        sp.add_argument("--periods", type=int, help="shorten a builtin scenario's horizon")
        sp.add_argument("--seed", type=int, help="clustering seed for hub placement")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("forecast", help="county demand tables")
    sp.add_argument("scenario", nargs="?", default="S1",
                    help="scenario file or builtin id whose populations to project")
    sp.add_argument("--population", type=float, help="project a single county instead")
    sp.add_argument("--growth-rate", type=float, default=DEFAULT_GROWTH_RATE)
    sp.add_argument("--base-year", type=int, default=load_counties()["base_year"])
    sp.add_argument("--start-year", type=int, default=2025)
    common(sp, scenario=False)
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("cluster", help="place hubs by demand-weighted K-means")
    common(sp)
    sp.add_argument("--k", type=int, help="number of hubs")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("build", help="write the model as free-format MPS")
    common(sp)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("solve", help="solve a scenario and persist the run")
    common(sp)
    sp.add_argument("--node-limit", type=int)
    sp.add_argument("--time-limit", type=float)
    sp.add_argument("--gap", type=float, help="relative optimality gap")
    sp.add_argument("--force", action="store_true", help="solve even if the run exists")
    sp.set_defaults(func=cmd_solve)
    # for solve, --out is the runs root
    sp._option_string_actions["--out"].help = "runs root directory (default $H2NET_RUNS_DIR)"

    sp = sub.add_parser("report", help="metric tables from a run directory")
    sp.add_argument("run_dir")
    sp.add_argument("--table", choices=("mode_share", "coverage", "vehicles", "costs", "summary",
                                        "topology"))
    sp.add_argument("--out", help="directory to write every table into")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("compare", help="cross-run comparison table")
    sp.add_argument("run_dirs", nargs="+")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("scenario", help="print a resolved builtin or file scenario")
    sp.add_argument("id", help="builtin id (S1-S5) or scenario file")
    common(sp, scenario=False)
    sp.set_defaults(func=cmd_scenario)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


__all__ = ["build_parser", "main", "EXIT_OK", "EXIT_INVALID", "EXIT_LIMIT", "EXIT_INFEASIBLE"]
