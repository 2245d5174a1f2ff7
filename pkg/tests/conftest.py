import sys
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(autouse=True)
def _runs_dir(tmp_path, monkeypatch):
    """Keep every run directory inside the test's temporary path."""
    monkeypatch.setenv("H2NET_RUNS_DIR", str(tmp_path / "runs"))
    return tmp_path / "runs"


class _Record:
    detail = ""


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line for an acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    @contextmanager
    def check(key: str, title: str):
        rec = _Record()
        try:
            yield rec
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            store[key] = (False, title, rec.detail or msg)
            sys.stdout.write(f"criterion {key}: FAIL {title} ({store[key][2]})\n")
            raise
        store[key] = (True, title, rec.detail)
        sys.stdout.write(f"criterion {key}: PASS {title} ({rec.detail})\n")

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")

    groups: dict[int, list[str]] = {}
    for key in store:
        groups.setdefault(int("".join(ch for ch in key if ch.isdigit())), []).append(key)
    for num in sorted(groups):
        keys = sorted(groups[num])
        if keys == [str(num)]:
            ok, title, detail = store[keys[0]]
            terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}"
                                        + (f"  [{detail}]" if detail else ""))
            continue
        ok = all(store[k][0] for k in keys)
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  "
                                    f"({', '.join(keys)})")
        for k in keys:
            sub_ok, title, detail = store[k]
            terminalreporter.write_line(f"    {k}: {'PASS' if sub_ok else 'FAIL'}  {title}"
                                        + (f"  [{detail}]" if detail else ""))
