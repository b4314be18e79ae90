import numpy as np
import pytest

from rpod.problems.synthetic import build_synthetic
from rpod.snapshots import LtiSystem

DOMINANT = [0.95, 0.9, 0.85, 0.8, 0.75]


@pytest.fixture(scope="session")
def synthetic20():
    """20 states, 5 dominant modes, tail at 1e-9."""
    return build_synthetic(20, DOMINANT, 1e-9, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_stable(n, p, q, seed, radius=0.9):
    """Random diagonalizable system with spectrum inside `radius`."""
    g = np.random.default_rng(seed)
    s = g.standard_normal((n, n)) + 3 * np.eye(n)
    lam = g.uniform(0.1, radius, n)
    a = s @ np.diag(lam) @ np.linalg.inv(s)
    return LtiSystem(a, g.standard_normal((n, p)), g.standard_normal((q, n)))


ACCEPTANCE_LOG = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LOG] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    log = request.config.stash[ACCEPTANCE_LOG]

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        log.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LOG, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
