import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .bailout import BailoutProblem, Relaxation, as_matrix, brute_force, relaxation_from_solution, relaxation_program, solve_relaxation
from .config import Config
from .exceptions import DegenerateFairnessError
from .lp import solve_lp
from .network import FinancialNetwork
from .shocks import SeededRng
from .telemetry import tracer

logger = logging.getLogger(__name__)

KINDS = ("GC", "PGC", "SGC")


@dataclass(frozen=True, eq=False)
class FairnessSpec:
    """Upper bound g on one Gini-type coefficient of the bailouts L * z."""

    kind: str
    g: float
    q: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fairness kind {self.kind!r}, expected one of {KINDS}")
        if not self.g >= 0:
            raise ValueError("fairness bound g must be non-negative")
        if self.kind == "PGC":
            if self.q is None:
                raise ValueError("PGC needs a property vector q")
            q = np.asarray(self.q, dtype=float)
            if np.any(q < 0) or np.any(q > 1):
                raise ValueError("property vector q must lie in [0, 1]")
            if not 0 < q.sum() < q.size:
                raise ValueError("PGC needs 0 < sum(q) < n")
            object.__setattr__(self, "q", q)

    def with_bound(self, g: float) -> "FairnessSpec":
        return FairnessSpec(self.kind, g, self.q)


def _theta(z, L) -> np.ndarray:
    return np.asarray(L, dtype=float) * np.asarray(z, dtype=float)


def _pairwise(theta: np.ndarray) -> np.ndarray:
    return np.abs(theta[:, None] - theta[None, :])


def gini(z, L) -> float:
    """sum_{i,j} |L_i z_i - L_j z_j| / (2 n sum_j L_j z_j)."""
    theta = _theta(z, L)
    total = theta.sum()
    if total <= 0:
        raise DegenerateFairnessError("Gini coefficient of a zero allocation is undefined")
    ordered = np.sort(theta)
    n = theta.size
    ranks = 2 * np.arange(n) - n + 1
    return float(2.0 * (ranks @ ordered) / (2.0 * n * total))


def property_gini(z, L, q) -> float:
    """Gini coefficient between nodes with and without a (fractional) property q."""
    theta = _theta(z, L)
    q = np.asarray(q, dtype=float)
    denominator = 2.0 * (q.size - q.sum()) * (q @ theta)
    if denominator <= 0:
        raise DegenerateFairnessError("property Gini denominator is zero (no bailouts reach the property group)")
    weights = q[:, None] * (1.0 - q[None, :])
    return float(np.sum(weights * _pairwise(theta)) / denominator)


def spatial_gini(z, L, net: FinancialNetwork) -> float:
    """Edge-weighted Gini sum_{(j,i)} a_ji |theta_j - theta_i| / (2 sum_j beta_j theta_j)."""
    theta = _theta(z, L)
    denominator = 2.0 * (net.beta @ theta)
    if denominator <= 0:
        raise DegenerateFairnessError("spatial Gini denominator is zero")
    A = sparse.coo_matrix(net.A)
    return float(np.sum(A.data * np.abs(theta[A.row] - theta[A.col])) / denominator)


def coefficient(spec: FairnessSpec, z, L, net: Optional[FinancialNetwork] = None) -> float:
    if spec.kind == "GC":
        return gini(z, L)
    if spec.kind == "PGC":
        return property_gini(z, L, spec.q)
    return spatial_gini(z, L, net)


def _pairs(spec: FairnessSpec, n: int, net: FinancialNetwork) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unordered pairs {i, j} with the total weight of |theta_i - theta_j| in the coefficient numerator."""
    if spec.kind == "SGC":
        A = sparse.csr_matrix(net.A)
        sym = sparse.triu(A + A.T, k=1).tocoo()
        keep = sym.data > 0
        return sym.row[keep], sym.col[keep], sym.data[keep]
    I, J = np.triu_indices(n, k=1)
    if spec.kind == "GC":
        return I, J, np.full(I.size, 2.0)
    q = spec.q
    weights = q[I] * (1 - q[J]) + q[J] * (1 - q[I])
    keep = weights > 0
    return I[keep], J[keep], weights[keep]


def _denominator_coefficients(spec: FairnessSpec, L: np.ndarray, net: FinancialNetwork) -> np.ndarray:
    """c such that the cross-multiplied bound reads numerator <= g * c^T z."""
    n = L.size
    if spec.kind == "GC":
        return 2.0 * n * L
    if spec.kind == "PGC":
        return 2.0 * (n - spec.q.sum()) * spec.q * L
    return 2.0 * net.beta * L


def fairness_satisfied(z, L, spec: FairnessSpec, net: Optional[FinancialNetwork] = None, tol: Optional[float] = None) -> bool:
    """Cross-multiplied form numerator <= g * denominator; a zero allocation passes."""
    tol = Config.FAIR_TOL if tol is None else tol
    L = np.asarray(L, dtype=float)
    theta = _theta(z, L)
    I, J, weights = _pairs(spec, L.size, net)
    numerator = float(weights @ np.abs(theta[I] - theta[J]))
    bound = spec.g * float(_denominator_coefficients(spec, L, net) @ np.asarray(z, dtype=float))
    return numerator <= bound * (1 + tol) + 1e-12


def solve_fair_relaxation(prob: BailoutProblem, spec: FairnessSpec, x=None) -> Relaxation:
    """
    Relaxation with one deviation variable w_k >= |L_i z_i - L_j z_j| per
    weighted pair and the linear constraint sum_k weight_k w_k <= g * c^T z.
    """
    n = prob.n
    if spec.kind in ("GC", "PGC") and n > Config.FAIR_LP_MAX_N:
        raise ValueError(f"{spec.kind} relaxation limited to {Config.FAIR_LP_MAX_N} nodes, got {n}")

    I, J, weights = _pairs(spec, n, prob.net)
    K = I.size
    lp = relaxation_program(prob, x, extra_vars=K)
    pair = np.arange(K)
    z_i = n + I
    z_j = n + J
    w_k = 2 * n + pair

    rows = np.repeat(pair, 3)
    cols = np.column_stack([z_i, z_j, w_k]).ravel()
    plus = np.column_stack([prob.L[I], -prob.L[J], -np.ones(K)]).ravel()
    lp.add_triples(rows, cols, plus, np.zeros(K))
    minus = np.column_stack([-prob.L[I], prob.L[J], -np.ones(K)]).ravel()
    lp.add_triples(rows, cols, minus, np.zeros(K))

    denominator = _denominator_coefficients(spec, prob.L, prob.net)
    lp.add_triples(
        np.zeros(K + n, dtype=np.int64),
        np.concatenate([w_k, np.arange(n, 2 * n)]),
        np.concatenate([weights, -spec.g * denominator]),
        [0.0],
    )

    with tracer.start_as_current_span("solve_fair_relaxation") as span:
        span.set_attribute("fairness.kind", spec.kind)
        span.set_attribute("fairness.g", spec.g)
        solution = solve_lp(lp, name=f"fair-{spec.kind}")

    return relaxation_from_solution(prob, solution)


def _shock_columns(prob: BailoutProblem, x, samples) -> np.ndarray:
    if samples is not None:
        return as_matrix(samples, prob.n)
    return as_matrix([prob.default_shock() if x is None else x], prob.n)


def price_of_fairness(prob: BailoutProblem, spec: FairnessSpec, x=None, samples=None, discrete: bool = False) -> float:
    """
    Unconstrained optimum over g-constrained optimum, both averaged over the
    shocks. Fractional optima come from the relaxations; discrete ones from
    the brute-force oracle. A zero constrained optimum gives math.inf.
    """
    X = _shock_columns(prob, x, samples)
    if discrete:
        _, unconstrained = brute_force(prob, X)
        _, constrained = brute_force(
            prob, X, constraint=lambda z: fairness_satisfied(z, prob.L, spec, prob.net)
        )
    else:
        unconstrained = float(np.mean([solve_relaxation(prob, X[:, s]).opt_r for s in range(X.shape[1])]))
        constrained = float(np.mean([solve_fair_relaxation(prob, spec, X[:, s]).opt_r for s in range(X.shape[1])]))

    if constrained <= 1e-12 * max(1.0, abs(unconstrained)):
        logger.warning("%s-constrained optimum is zero at g=%s: price of fairness is infinite", spec.kind, spec.g)
        return math.inf
    return unconstrained / constrained


def within_between_fairness_check(z, L, q, g_between: float, g_within: float) -> bool:
    """
    Between-group fairness via the property Gini of q and within-group
    fairness via the Gini of z * q and of z * (1 - q), both over all nodes.
    """
    z = np.asarray(z, dtype=float)
    L = np.asarray(L, dtype=float)
    q = np.asarray(q, dtype=float)
    with_q, without_q = z * q, z * (1.0 - q)
    if not np.any(L * with_q > 0) or not np.any(L * without_q > 0):
        raise DegenerateFairnessError("within-group fairness needs a nonzero allocation on both sides of q")
    between = property_gini(z, L, q)
    within_q = gini(with_q, L)
    within_rest = gini(without_q, L)
    return bool(between <= g_between and within_q <= g_within and within_rest <= g_within)


def synthetic_property(n: int, rng: SeededRng, a: float = 2.0, b: float = 5.0) -> np.ndarray:
    """Property vector q with i.i.d. Beta(a, b) entries."""
    return rng.generator().beta(a, b, size=n)
