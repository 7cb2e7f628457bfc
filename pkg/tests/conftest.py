import shutil
from pathlib import Path

import pytest

from ulproof.solver import SolverConfig, SolverSession

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "benchmarks"

HAVE_Z3 = shutil.which("z3") is not None
needs_z3 = pytest.mark.skipif(not HAVE_Z3, reason="z3 not on PATH")


@pytest.fixture
def session():
    return SolverSession(SolverConfig(pool=2))


@pytest.fixture
def bench_dir():
    return BENCH


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
