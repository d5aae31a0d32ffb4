import csv

import numpy as np
import pytest

from tipblockade import analytic, cli
from tipblockade.model import SystemParams


def load_rows(path):
    """Read a sweep CSV into dicts, converting numeric cells to float."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for k, v in raw.items():
                if v == "":
                    row[k] = None
                    continue
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            rows.append(row)
    return rows


def col(rows, name):
    return np.array([np.nan if r[name] is None else r[name] for r in rows], dtype=float)


@pytest.fixture
def operating_point():
    return SystemParams()


@pytest.fixture
def tip_restored():
    return analytic.with_decoupled_tip(SystemParams())


@pytest.fixture(scope="session")
def fig_runs(tmp_path_factory):
    """Each figure written twice by consecutive ``fig N`` invocations."""
    runs = {}
    for which in (1, 2, 3, 4):
        dirs = []
        for attempt in ("a", "b"):
            out = tmp_path_factory.mktemp(f"fig{which}{attempt}")
            assert cli.main(["fig", str(which), "--out", str(out), "-q", "--seedless"]) == 0
            dirs.append(out)
        runs[which] = dirs
    return runs


@pytest.fixture(scope="session")
def fig_rows(fig_runs):
    return {which: load_rows(dirs[0] / f"fig{which}.csv") for which, dirs in fig_runs.items()}


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record a one-line verdict for an acceptance criterion."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, ok, detail):
        store[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        terminalreporter.write_line(store[number])
