import numpy as np
import pytest

from pybailout.bailout import BailoutProblem
from pybailout.network import build_network
from pybailout.objectives import make_objective
from pybailout.shocks import ShockDistribution
from pybailout.spectral import is_connected


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: checks at the scale of the published experiments")


def example1_network():
    return build_network([[0.0, 1.0], [0.0, 0.0]], [0.5, 1.0], [1.5, 0.0])


def example1_problem(objective: str = "SoP", budget: float = 1.0):
    net = example1_network()
    dist = ShockDistribution.point_mass(net.c, [1.0, 0.0])
    return BailoutProblem(net, np.ones(2), budget, dist, make_objective(objective, net, strict=False))


def random_network(gen: np.random.Generator, n: int, density: float = 0.5, beta_cap: float = 0.95):
    """Random liabilities with beta_j <= beta_cap for every node."""
    P = np.where(gen.random((n, n)) < density, gen.exponential(1.0, (n, n)), 0.0)
    np.fill_diagonal(P, 0.0)
    internal = P.sum(axis=1)
    share = gen.uniform(0.2, beta_cap, n)
    b = np.where(internal > 0, internal * (1.0 - share) / share, 1.0)
    c = gen.exponential(1.0, n) * (1.0 + internal)
    return build_network(P, b, c)


def symmetric_network(gen: np.random.Generator, n: int, density: float = 0.6):
    """Connected network with symmetric relative liabilities (equal total liabilities)."""
    while True:
        upper = np.triu(gen.random((n, n)) < density, k=1)
        W = np.where(upper | upper.T, gen.uniform(0.5, 1.5, (n, n)), 0.0)
        W = np.triu(W, k=1)
        W = W + W.T
        if np.all(W.sum(axis=1) > 0) and is_connected(W):
            break
    total = 1.2 * W.sum(axis=1).max()
    return build_network(W, total - W.sum(axis=1), gen.uniform(0.5, 2.0, n))


def random_problem(gen: np.random.Generator, n: int, k: int = 2, objective: str = "SoP", beta_cap: float = 0.95):
    net = random_network(gen, n, beta_cap=beta_cap)
    L = np.full(n, float(np.median(net.p)))
    return BailoutProblem(net, L, k * L[0], ShockDistribution.uniform(net.c), make_objective(objective, net))


@pytest.fixture
def example1():
    return example1_problem()


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)
