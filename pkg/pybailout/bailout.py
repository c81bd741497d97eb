import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .config import Config
from .exceptions import BruteForceCapError
from .lp import LinearProgram, solve_lp
from .network import FinancialNetwork, clear_batch
from .objectives import Objective, solver_objective
from .shocks import ShockDistribution
from .telemetry import tracer
from .utls import mean_std

logger = logging.getLogger(__name__)

BUDGET_RTOL = 1e-9
# Cap on n * columns per batch clearing in the enumerating solvers.
BATCH_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class BailoutProblem:
    net: FinancialNetwork
    L: np.ndarray
    budget: float
    dist: ShockDistribution
    obj: Objective

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float).ravel()
        if L.shape != (self.net.n,):
            raise ValueError(f"L has {L.size} entries, network has {self.net.n} nodes")
        if np.any(L <= 0) or not np.all(np.isfinite(L)):
            raise ValueError("bailout sizes L must be finite and positive")
        if self.budget < 0 or not math.isfinite(self.budget):
            raise ValueError("budget must be finite and non-negative")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def n(self) -> int:
        return self.net.n

    def with_budget(self, budget: float) -> "BailoutProblem":
        return replace(self, budget=budget)

    def for_solver(self, eps: Optional[float] = None) -> "BailoutProblem":
        """The problem LP-based solvers work on; absolute solvency becomes its epsilon-augmentation."""
        return replace(self, obj=solver_objective(self.obj, self.budget, self.net.beta_max, eps))

    def affordable(self, spent: float) -> bool:
        return spent <= self.budget * (1 + BUDGET_RTOL) + 1e-12

    def default_shock(self) -> np.ndarray:
        """The shock of a deterministic distribution."""
        if self.dist.kind == "point-mass":
            return np.array(self.dist.x0)
        if self.dist.kind == "zero":
            return np.zeros(self.n)
        raise ValueError("a shock vector is required for a random shock distribution")

    def cash(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.L * z if z.ndim == 1 else self.L[:, None] * z


@dataclass(frozen=True, eq=False)
class Allocation:
    """A bailout decision z, binary or fractional, with its cost L^T z."""

    z: np.ndarray
    spent: float
    feasible: bool
    discrete: bool
    overspend: float = 0.0
    warning: str = ""

    @classmethod
    def from_vector(cls, z, prob: BailoutProblem, discrete: bool, overspend: float = 0.0, warning: str = "") -> "Allocation":
        z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
        if discrete:
            z = np.round(z)
        spent = float(prob.L @ z)
        return cls(
            z=z,
            spent=spent,
            feasible=prob.affordable(spent - overspend),
            discrete=discrete,
            overspend=overspend,
            warning=warning,
        )

    @classmethod
    def from_nodes(cls, nodes: Sequence[int], prob: BailoutProblem, overspend: float = 0.0) -> "Allocation":
        z = np.zeros(prob.n)
        z[list(nodes)] = 1.0
        return cls.from_vector(z, prob, discrete=True, overspend=overspend)

    @classmethod
    def empty(cls, prob: BailoutProblem, warning: str = "") -> "Allocation":
        return cls.from_vector(np.zeros(prob.n), prob, discrete=True, warning=warning)

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.z > 0.5) if self.discrete else np.flatnonzero(self.z > 0)


@dataclass
class SolverReport:
    values: np.ndarray
    mean: float
    std: float
    allocation: Optional[Allocation] = None
    allocations: Tuple[Allocation, ...] = ()
    opt_r: Optional[float] = None
    wall_time: float = 0.0
    seed: Optional[int] = None
    algorithm: str = ""
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, values, **kwargs) -> "SolverReport":
        values = np.asarray(values, dtype=float)
        mean, std = mean_std(values)
        return cls(values=values, mean=mean, std=std, **kwargs)


class Relaxation(NamedTuple):
    allocation: Allocation
    opt_r: float
    ptilde: np.ndarray


def as_matrix(samples, n: int) -> np.ndarray:
    """Shock batch (list of vectors or n x m matrix) as an n x m matrix."""
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        return samples
    if isinstance(samples, np.ndarray) and samples.ndim == 1:
        return samples[:, None]
    samples = list(samples)
    if not samples:
        return np.zeros((n, 0))
    return np.column_stack([np.asarray(x, dtype=float) for x in samples])


def clear_allocations(prob: BailoutProblem, Z: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Clearing vectors of every (allocation column of Z, shock column of X) pair, shape n x k x m."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    k, m = Z.shape[1], X.shape[1]
    if k == 0 or m == 0:
        return np.zeros((prob.n, k, m))
    cash = np.repeat(prob.cash(Z), m, axis=1)
    shocks = np.tile(X, (1, k))
    return clear_batch(prob.net, shocks, cash).pbar.reshape(prob.n, k, m)


def allocation_values(prob: BailoutProblem, Z: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Objective of every allocation column of Z under every shock column of X (k x m)."""
    pbar = clear_allocations(prob, Z, X)
    n, k, m = pbar.shape
    if k == 0 or m == 0:
        return np.zeros((k, m))
    return np.asarray(prob.obj.values(prob.net, pbar.reshape(n, k * m))).reshape(k, m)


def relaxation_program(prob: BailoutProblem, x, extra_vars: int = 0) -> LinearProgram:
    """
    LP over (ptilde, ztilde, extra): maximize v^T ptilde subject to
    (I - A^T) ptilde - L * ztilde <= c - x, L^T ztilde <= budget,
    0 <= ptilde <= p, 0 <= ztilde <= 1, extra >= 0.
    """
    n = prob.n
    net = prob.net
    x = np.zeros(n) if x is None else np.asarray(x, dtype=float)
    objective = np.concatenate([prob.obj.lp_coefficients(n), np.zeros(n + extra_vars)])
    lower = np.zeros(2 * n + extra_vars)
    upper = np.concatenate([net.p, np.ones(n), np.full(extra_vars, np.inf)])
    lp = LinearProgram(objective=objective, lower=lower, upper=upper)

    flow = sparse.hstack([
        sparse.identity(n, format="csr") - sparse.csr_matrix(net.AT),
        -sparse.diags(prob.L),
    ])
    lp.add_block(flow, net.c - np.clip(x, 0.0, net.c))
    lp.add_triples(np.zeros(n), np.arange(n, 2 * n), prob.L, [prob.budget])
    return lp


def relaxation_from_solution(prob: BailoutProblem, solution) -> Relaxation:
    n = prob.n
    ptilde = np.clip(solution.x[:n], 0.0, prob.net.p)
    allocation = Allocation.from_vector(solution.x[n:2 * n], prob, discrete=False)
    # the LP only sees the payment term of an augmented objective
    opt_r = solution.objective if prob.obj.is_linear else float(prob.obj.values(prob.net, ptilde))
    return Relaxation(allocation, opt_r, ptilde)


def solve_relaxation(prob: BailoutProblem, x=None) -> Relaxation:
    """Fractional optimum of the bailout problem conditioned on the shock x."""
    with tracer.start_as_current_span("solve_relaxation"):
        solution = solve_lp(relaxation_program(prob, x), name="relaxation")
    return relaxation_from_solution(prob, solution)


def evaluate_allocation(prob: BailoutProblem, z, samples, seed: Optional[int] = None, algorithm: str = "") -> SolverReport:
    """Clear the network under every shock with cash L * z and aggregate the objective."""
    start_time = time.time()
    allocation = z if isinstance(z, Allocation) else Allocation.from_vector(z, prob, discrete=bool(np.all(np.isin(z, (0, 1)))))
    X = as_matrix(samples, prob.n)
    values = allocation_values(prob, allocation.z, X)[0]
    return SolverReport.from_values(
        values,
        allocation=allocation,
        wall_time=time.time() - start_time,
        seed=seed,
        algorithm=algorithm,
    )


def feasible_subsets(prob: BailoutProblem, cap: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """Budget-feasible node subsets by size, then lexicographically; raises past the cap."""
    cap = Config.BRUTE_FORCE_CAP if cap is None else cap
    order = np.sort(prob.L)
    count = 0
    for size in range(prob.n + 1):
        if not prob.affordable(float(order[:size].sum())):
            break
        for combo in itertools.combinations(range(prob.n), size):
            if not prob.affordable(float(prob.L[list(combo)].sum())):
                continue
            count += 1
            if count > cap:
                raise BruteForceCapError(f"more than {cap} feasible subsets")
            yield combo


def brute_force(
    prob: BailoutProblem,
    samples,
    constraint: Optional[Callable[[np.ndarray], bool]] = None,
    cap: Optional[int] = None,
) -> Tuple[Allocation, float]:
    """
    Exact maximizer of the sample-average objective over budget-feasible sets.

    constraint, when given, filters candidate 0/1 vectors (used for fairness
    constrained optima). Returns (empty allocation, -inf) when nothing passes.
    """
    X = as_matrix(samples, prob.n)
    chunk = max(1, BATCH_ELEMENTS // max(1, prob.n * max(1, X.shape[1])))
    best_nodes: Optional[Tuple[int, ...]] = None
    best_value = -math.inf

    def flush(batch):
        nonlocal best_nodes, best_value
        if not batch:
            return
        Z = np.zeros((prob.n, len(batch)))
        for col, combo in enumerate(batch):
            Z[list(combo), col] = 1.0
        means = allocation_values(prob, Z, X).mean(axis=1)
        for combo, value in zip(batch, means):
            if value > best_value + 1e-12 * max(1.0, abs(best_value)):
                best_nodes, best_value = combo, float(value)

    with tracer.start_as_current_span("brute_force"):
        batch = []
        for combo in feasible_subsets(prob, cap):
            if constraint is not None:
                z = np.zeros(prob.n)
                z[list(combo)] = 1.0
                if not constraint(z):
                    continue
            batch.append(combo)
            if len(batch) >= chunk:
                flush(batch)
                batch = []
        flush(batch)

    if best_nodes is None:
        return Allocation.empty(prob, warning="no subset satisfies the constraint"), -math.inf
    return Allocation.from_nodes(best_nodes, prob), best_value


def gain_upper_bound_holds(prob: BailoutProblem, S: Sequence[int], T: Sequence[int], x=None, tol: float = 1e-8) -> bool:
    """For S within T: f(T) - f(S) <= v_max * sum_{T minus S} L_j / (1 - beta_max)."""
    S, T = set(S), set(T)
    if not S <= T:
        raise ValueError("S must be a subset of T")
    X = np.zeros((prob.n, 1)) if x is None else np.asarray(x, dtype=float).reshape(-1, 1)
    Z = np.zeros((prob.n, 2))
    Z[list(S), 0] = 1.0
    Z[list(T), 1] = 1.0
    f_S, f_T = allocation_values(prob, Z, X)[:, 0]
    bound = prob.obj.v_max * prob.L[list(T - S)].sum() / (1.0 - prob.net.beta_max)
    return bool(f_T - f_S <= bound + tol)
