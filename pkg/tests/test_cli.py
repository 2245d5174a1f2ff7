from __future__ import annotations

import csv
import io
import json

import pytest

from h2net.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_LIMIT, EXIT_OK, _status_exit, main
from h2net.scenario import spec_to_document

from instances import micro_spec


@pytest.fixture
def micro_file(tmp_path):
    p = tmp_path / "micro.json"
    p.write_text(json.dumps(spec_to_document(micro_spec())))
    return p


def test_scenario_prints_resolved_builtin(capsys):
    assert main(["scenario", "S4"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["econ"]["construction_gap"] == 2


def test_solve_creates_run_directory(micro_file, tmp_path, capsys):
    runs = tmp_path / "runs"
    assert main(["solve", str(micro_file), "--out", str(runs)]) == EXIT_OK
    out = capsys.readouterr().out
    dirs = [p for p in runs.iterdir() if p.is_dir()]
    assert len(dirs) == 1 and str(dirs[0]) in out
    assert (dirs[0] / "solution.csv").is_file()
    # a second solve reuses the directory
    assert main(["solve", str(micro_file), "--out", str(runs)]) == EXIT_OK
    assert "(reused)" in capsys.readouterr().out

    assert main(["report", str(dirs[0]), "--table", "coverage"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["period", "year", "pipelines", "total_required", "coverage"]
    assert main(["report", str(dirs[0]), "--format", "json", "--out", str(tmp_path / "t")]) == 0
    assert json.loads((tmp_path / "t" / "summary.json").read_text())
    capsys.readouterr()

    assert main(["compare", str(dirs[0]), str(dirs[0])]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["name", "fingerprint", "metric", "value", "relative_delta"]
    assert all(float(r[4]) == 0.0 for r in rows[1:])


def test_report_missing_directory(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert main(["report", str(missing)]) == EXIT_INVALID
    assert str(missing) in capsys.readouterr().err


def test_unknown_flag_prints_usage(capsys):
    assert main(["solve", "S1", "--bogus"]) == EXIT_INVALID
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand():
    assert main([]) == EXIT_INVALID


def test_invalid_scenario_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"schema_version": 1}))
    assert main(["solve", str(p)]) == EXIT_INVALID
    assert "mode" in capsys.readouterr().err


def test_node_limit_exit_status(micro_file, tmp_path):
    code = main(["solve", str(micro_file), "--node-limit", "0", "--out", str(tmp_path)])
    assert code in (EXIT_LIMIT, EXIT_OK)


def test_status_mapping():
    assert _status_exit("optimal") == EXIT_OK
    assert _status_exit("node_limit") == EXIT_LIMIT
    assert _status_exit("time_limit") == EXIT_LIMIT
    assert _status_exit("infeasible") == EXIT_INFEASIBLE
    assert _status_exit("degenerate") == EXIT_INVALID


def test_build_writes_mps(micro_file, tmp_path):
    out = tmp_path / "m.mps"
    assert main(["build", str(micro_file), "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert text.startswith("NAME") and text.rstrip().endswith("ENDATA")


def test_forecast_single_county(capsys):
    assert main(["forecast", "--population", "1000000", "--periods", "3"]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["year"] for r in rows] == ["2025", "2026", "2027"]


def test_cluster_builtin(capsys):
    assert main(["cluster", "S1", "--k", "3", "--periods", "2", "--seed", "7"]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 12 and len({r["hub"] for r in rows}) == 3


def test_periods_flag_rejected_for_files(micro_file):
    assert main(["scenario", str(micro_file), "--periods", "2"]) == EXIT_INVALID
