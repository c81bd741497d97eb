"""
Seeded generators for the constructed instances: the extremal examples of
the bailout problem, the hardness gadgets, and Erdos-Renyi random networks.
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .exceptions import GeneratorError
from .fairness import synthetic_property
from .network import build_network
from .shocks import SeededRng, ShockDistribution
from .storage import InstanceData

KINDS = (
    "star-pof",
    "two-clique",
    "complete-gap",
    "path-threshold",
    "set-cover-gadget",
    "layered-gadget",
    "random-er",
)

DEFAULT_SETS = ((0, 1, 2), (1, 2, 3))

PURPOSE = {
    "star-pof": "star network whose discrete price of fairness is infinite at g = 0 while the fractional one stays finite",
    "two-clique": "two cliques of size n/2 joined by random cross edges (stochastic block model), price of fairness versus density",
    "complete-gap": "complete network with a uniform shock where fractional bailouts beat every integral one",
    "path-threshold": "directed path behind a zero-wealth node: the wealth policy picks the wrong node",
    "set-cover-gadget": "3-set-cover reduction: a cover of size k makes every item node solvent",
    "layered-gadget": "set-cover reduction with fully connected item layers amplifying the solvency gap",
    "random-er": "Erdos-Renyi liabilities with exponential weights, assets from degree times Exp(1), b = 0.9 c",
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeneratorError(f"unknown generator {self.kind!r}, expected one of {KINDS}")


@dataclass(frozen=True, eq=False)
class GeneratedInstance(InstanceData):
    spec: Optional[GeneratorSpec] = None


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise GeneratorError(message)


def _star_pof(n: int = 5):
    _check(n >= 2, "star-pof needs n >= 2")
    P = np.zeros((n, n))
    P[0, 1:] = 1.0
    c = np.zeros(n)
    c[0] = n
    return P, np.ones(n), c, np.full(n, float(n)), float(n), ShockDistribution.point_mass(c, c), None


def _two_clique(gen: np.random.Generator, n: int = 20, r: float = 0.5, shock: float = 1.0, k: float = 2.0):
    _check(n >= 4 and n % 2 == 0, "two-clique needs an even n >= 4")
    _check(0 < r <= 1, "two-clique needs r in (0, 1]")
    _check(0 <= shock <= n, "two-clique shock must lie in [0, n]")
    half = n // 2
    group = np.arange(n) < half
    same = group[:, None] == group[None, :]
    upper = np.triu(gen.random((n, n)) < r, k=1)
    cross = upper | upper.T
    P = np.where(same | cross, 1.0, 0.0)
    np.fill_diagonal(P, 0.0)
    c = np.full(n, float(n))
    x0 = np.where(group, float(shock), 0.0)
    L = np.full(n, n / 2.0)
    return P, np.ones(n), c, L, k * n / 2.0, ShockDistribution.point_mass(c, x0), group.astype(float)


def _complete_gap(n: int = 10, k: int = 2, eps: float = 0.5):
    _check(0 < eps < 1, "complete-gap needs eps in (0, 1)")
    _check(1 <= k < n, "complete-gap needs 1 <= k < n")
    P = np.ones((n, n)) - np.eye(n)
    c = np.ones(n)
    L = np.full(n, n * eps / k)
    return P, np.ones(n), c, L, n * eps, ShockDistribution.point_mass(c, np.full(n, eps)), None


def _path_threshold(n: int = 10, eps: Optional[float] = None):
    _check(n >= 3, "path-threshold needs n >= 3")
    eps = 1.0 / (2.0 * (n - 1)) if eps is None else eps
    _check(0 < eps < 1.0 / (n - 1), "path-threshold needs 0 < eps < 1/(n-1)")
    P = np.zeros((n, n))
    b = np.full(n, eps / 2.0)
    c = np.zeros(n)
    # node 0 stands alone with zero wealth; nodes 1..n-1 form the path
    b[0] = c[0] = 1.0
    c[1] = 1.0
    for i in range(1, n - 1):
        P[i, i + 1] = 1.0 - i * eps
    b[n - 1] = 1.0 - (n - 1) * eps + eps / 2.0
    return P, b, c, np.ones(n), 1.0, ShockDistribution.point_mass(c, c), None


def _layered(sets: Sequence[Sequence[int]], n_items: int, k: int, alpha: float, layers: int):
    _check(0 < alpha < 3, "gadgets need alpha in (0, 3)")
    _check(layers >= 1, "layered gadget needs at least one layer")
    _check(len(sets) >= 1 and n_items >= 1 and k >= 1, "gadget needs sets, items and k >= 1")
    for s in sets:
        _check(len(set(s)) == 3 and all(0 <= u < n_items for u in s), f"set {list(s)} is not a 3-subset of the items")

    m = len(sets)
    n = m + layers * n_items
    keep = 1.0 - alpha / 3.0
    P = np.zeros((n, n))
    b = np.zeros(n)
    c = np.zeros(n)
    c[:m] = 3.0
    b[:m] = alpha
    for j, s in enumerate(sets):
        P[j, [m + u for u in s]] = keep

    for layer in range(1, layers + 1):
        nodes = m + (layer - 1) * n_items + np.arange(n_items)
        if layer < layers:
            following = nodes + n_items
            P[np.ix_(nodes, following)] = keep ** (layer + 1) / n_items
            b[nodes] = (alpha / 3.0) * keep ** layer
        else:
            b[nodes] = keep ** layer

    x0 = np.where(np.arange(n) < m, 3.0, 0.0)
    return P, b, c, np.full(n, 3.0), 3.0 * k, ShockDistribution.point_mass(c, x0), None


def _random_er(gen: np.random.Generator, n: int = 100, p: float = 0.05, ell: float = 1.0, k: float = 1.0, property: bool = False):
    _check(n >= 2 and 0 < p <= 1, "random-er needs n >= 2 and p in (0, 1]")
    _check(ell > 0 and k >= 0, "random-er needs ell > 0 and k >= 0")
    edges = gen.random((n, n)) < p
    np.fill_diagonal(edges, False)
    P = np.where(edges, gen.exponential(1.0, size=(n, n)), 0.0)
    degree = edges.sum(axis=0) + edges.sum(axis=1)
    c = np.maximum(degree, 1) * gen.exponential(1.0, size=n)
    q = synthetic_property(n, SeededRng(int(gen.integers(2**63)))) if property else None
    return P, 0.9 * c, c, np.full(n, float(ell)), ell * k, ShockDistribution.uniform(c), q


def describe(spec: GeneratorSpec) -> str:
    """Human-readable provenance record embedded into instance files."""
    params = json.dumps(spec.params, sort_keys=True, default=str)
    return f"generator={spec.kind}; params={params}; seed={spec.seed}; construction: {PURPOSE[spec.kind]}"


def generate(spec: GeneratorSpec, rng: Optional[SeededRng] = None) -> GeneratedInstance:
    """Build the instance named by spec; identical (kind, params, seed) give identical instances."""
    gen = (rng or SeededRng(spec.seed)).generator()
    params = dict(spec.params)
    try:
        if spec.kind == "star-pof":
            data = _star_pof(**params)
        elif spec.kind == "two-clique":
            data = _two_clique(gen, **params)
        elif spec.kind == "complete-gap":
            data = _complete_gap(**params)
        elif spec.kind == "path-threshold":
            data = _path_threshold(**params)
        elif spec.kind == "set-cover-gadget":
            data = _layered(
                params.get("sets", DEFAULT_SETS), params.get("n_items", 4), params.get("k", 2), params.get("alpha", 1.0), 1
            )
        elif spec.kind == "layered-gadget":
            data = _layered(
                params.get("sets", DEFAULT_SETS),
                params.get("n_items", 4),
                params.get("k", 2),
                params.get("alpha", 1.0),
                params.get("layers", 2),
            )
        else:
            data = _random_er(gen, **params)
    except TypeError as e:
        raise GeneratorError(f"bad parameters for {spec.kind}: {e}") from e

    P, b, c, L, budget, shock, q = data
    return GeneratedInstance(
        net=build_network(P, b, c),
        L=np.asarray(L, dtype=float),
        budget=float(budget),
        shock=shock,
        q=q,
        provenance=describe(spec),
        spec=spec,
    )


def cover_allocation(instance: GeneratedInstance, chosen_sets: List[int]) -> np.ndarray:
    """0/1 bailout vector of the given set nodes of a gadget instance."""
    z = np.zeros(instance.net.n)
    z[list(chosen_sets)] = 1.0
    return z
