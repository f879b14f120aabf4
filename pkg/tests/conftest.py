import numpy as np
import pytest
import scipy.sparse as sp

from pcritical.topology import ReservoirTopology


def make_topology(weights, excitatory=None):
    """Hand-built reservoir from a dense signed weight matrix."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.shape[0]
    if excitatory is None:
        excitatory = np.ones(n, dtype=bool)
    return ReservoirTopology(np.zeros((n, 3)), sp.csr_matrix(w), np.asarray(excitatory, bool))


@pytest.fixture
def topo_factory():
    return make_topology


# acceptance report: one line per criterion, printed after the run
ACCEPTANCE = {}


def record(criterion: int, title: str, passed: bool, detail: str = "") -> bool:
    ACCEPTANCE[criterion] = (title, bool(passed), detail)
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {title}: {detail}")
