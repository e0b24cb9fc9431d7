import numpy as np
import pytest

from queenon.optimize import a12_matrix
from queenon.queenon import QueenonError, from_matrix, kappa, uniform

# acceptance results, printed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def random_queenon(rng: np.random.Generator, N: int, spread: float = 1.5):
    """A random valid N-step queenon: a Sinkhorn-balanced log-normal matrix
    pulled toward uniform until its diagonal marginals are sub-uniform."""
    Z = np.exp(spread * rng.standard_normal((N, N)))
    for _ in range(500):
        Z *= N / Z.sum(axis=1, keepdims=True)
        Z *= N / Z.sum(axis=0, keepdims=True)
    lam = 1.0
    while lam > 1e-6:
        G = (1.0 - lam) * np.ones((N, N)) + lam * Z
        G *= N / G.sum(axis=1, keepdims=True)
        try:
            g = from_matrix(G, tol=1e-9)
        except QueenonError:
            lam *= 0.5
            continue
        if not g.clamped:
            return g
        lam *= 0.5
    return uniform(N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def a12():
    return a12_matrix()


@pytest.fixture(scope="session")
def kap():
    return kappa()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
