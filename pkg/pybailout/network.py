import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from .config import Config
from .exceptions import ConvergenceError, NetworkValidationError, ObjectiveError, ShockError
from .lp import LinearProgram, solve_lp
from .telemetry import clearing_counter, tracer

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sparse.spmatrix]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FinancialNetwork:
    """
    Interbank liabilities with external assets and liabilities.

    P[j, i] is what node j owes node i. Derived quantities are computed once
    by build_network and the object is never mutated afterwards, so it can
    be shared freely between worker processes and threads.
    """

    P: Matrix
    b: np.ndarray
    c: np.ndarray
    p: np.ndarray
    A: Matrix
    AT: Matrix
    beta: np.ndarray

    @property
    def n(self) -> int:
        return int(self.b.size)

    @property
    def beta_max(self) -> float:
        return float(self.beta.max())

    @property
    def beta_min(self) -> float:
        return float(self.beta.min())

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.P)

    def dense_P(self) -> np.ndarray:
        return self.P.toarray() if self.is_sparse else np.array(self.P)

    def dense_A(self) -> np.ndarray:
        return self.A.toarray() if self.is_sparse else np.array(self.A)

    def incoming(self) -> np.ndarray:
        """Total nominal claims of each node on the others, sum_i P[i, j]."""
        return np.asarray(self.P.sum(axis=0), dtype=float).ravel()

    def edges(self) -> List[Tuple[int, int, float]]:
        coo = sparse.coo_matrix(self.P)
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order if coo.data[k] > 0]

    def tol_abs(self) -> np.ndarray:
        return Config.CLASSIFY_RTOL * np.maximum(1.0, self.p)


@dataclass(frozen=True, eq=False)
class ClearingResult:
    pbar: np.ndarray
    defaults: np.ndarray
    solvents: np.ndarray
    iterations: int
    residual: float

    @property
    def n_solvent(self) -> int:
        return int(self.solvents.size)


@dataclass(frozen=True, eq=False)
class EquityVector:
    w: np.ndarray


class BatchClearing(NamedTuple):
    pbar: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class ComparisonWitness:
    holds: bool
    node: Optional[int] = None
    violation: str = ""
    gap: float = 0.0

    def __bool__(self) -> bool:
        return self.holds


def build_network(P, b, c, sparse_format: Optional[bool] = None) -> FinancialNetwork:
    """
    Validate liability data and derive p, A and beta.

    Parameters:
        P (array or scipy sparse matrix): n x n internal liabilities, P[j, i] owed by j to i.
        b (array): External liabilities, >= 0.
        c (array): External assets, >= 0.
        sparse_format (bool, Optional): Force the sparse (True) or dense (False) representation.
            Default picks sparse above Config.DENSE_LIMIT nodes or when P is already sparse.

    Returns:
        FinancialNetwork: The validated network.
    """
    b = np.array(b, dtype=float).ravel()
    c = np.array(c, dtype=float).ravel()
    n = b.size

    if sparse_format is None:
        sparse_format = sparse.issparse(P) or n > Config.DENSE_LIMIT
    P = sparse.csr_matrix(P, dtype=float) if sparse_format else (
        P.toarray().astype(float) if sparse.issparse(P) else np.array(P, dtype=float)
    )

    if P.ndim != 2 or P.shape != (n, n) or c.size != n:
        raise NetworkValidationError(
            f"dimension mismatch: P {P.shape}, b ({b.size},), c ({c.size},)"
        )
    values = P.data if sparse_format else P
    for name, arr in (("P", values), ("b", b), ("c", c)):
        if not np.all(np.isfinite(arr)):
            raise NetworkValidationError(f"non-finite entry in {name}")
        if np.any(arr < 0):
            raise NetworkValidationError(f"negative entry in {name}")

    diagonal = P.diagonal()
    if np.any(diagonal != 0):
        raise NetworkValidationError("self-liabilities on the diagonal", np.flatnonzero(diagonal))

    internal = np.asarray(P.sum(axis=1), dtype=float).ravel()
    p = b + internal
    isolated = np.flatnonzero(p <= 0)
    if isolated.size:
        raise NetworkValidationError(f"isolated node(s) with zero total liabilities: {isolated.tolist()}", isolated)

    beta = internal / p
    connected = np.flatnonzero(beta >= 1.0)
    if connected.size:
        raise NetworkValidationError(
            f"beta_max >= 1 (no external liabilities) at node(s) {connected.tolist()}", connected
        )

    if sparse_format:
        A = sparse.diags(1.0 / p) @ P
        A = sparse.csr_matrix(A)
        AT = A.T.tocsr()
    else:
        A = P / p[:, None]
        AT = np.ascontiguousarray(A.T)
        _readonly(P)
        _readonly(A)
        _readonly(AT)

    return FinancialNetwork(
        P=P, b=_readonly(b), c=_readonly(c), p=_readonly(p), A=A, AT=AT, beta=_readonly(beta)
    )


def default_max_iter(net: FinancialNetwork, tol: float) -> int:
    if net.beta_max <= 0:
        return Config.MAX_ITER_FLOOR
    estimate = 10 * math.ceil(math.log(max(net.p.sum() / tol, 2.0)) / math.log(1.0 / net.beta_max))
    return max(Config.MAX_ITER_FLOOR, estimate)


def _check_shock(net: FinancialNetwork, x: np.ndarray) -> np.ndarray:
    c = net.c if x.ndim == 1 else net.c[:, None]
    slack = 1e-12 * np.maximum(1.0, c)
    if x.shape[0] != net.n:
        raise ShockError(f"shock has {x.shape[0]} rows, network has {net.n} nodes")
    if np.any(x < -slack) or np.any(x > c + slack):
        raise ShockError("shock outside [0, c]")
    return np.clip(x, 0.0, c)


def _check_cash(net: FinancialNetwork, cash: np.ndarray) -> np.ndarray:
    if cash.shape[0] != net.n:
        raise ValueError(f"cash has {cash.shape[0]} rows, network has {net.n} nodes")
    if np.any(cash < 0):
        raise ValueError("negative cash injection")
    return cash


def _prepare(net: FinancialNetwork, x, cash) -> np.ndarray:
    x = np.zeros(net.n) if x is None else np.asarray(x, dtype=float)
    cash = np.zeros(net.n) if cash is None else np.asarray(cash, dtype=float)
    return net.c - _check_shock(net, x) + _check_cash(net, cash)


def _iterate(net: FinancialNetwork, base: np.ndarray, tol: float, max_iter: int):
    p = net.p if base.ndim == 1 else net.p[:, None]
    pbar = np.broadcast_to(p, base.shape).copy()
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        update = np.minimum(p, net.AT @ pbar + base)
        residual = float(np.max(np.abs(update - pbar))) if update.size else 0.0
        if residual <= tol:
            return update, iteration, residual
        pbar = update

    raise ConvergenceError(
        f"clearing did not converge in {max_iter} iterations (residual {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def classify(net: FinancialNetwork, pbar: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split nodes into defaults (pbar_j < p_j - tol_abs) and solvents."""
    default_mask = pbar < net.p - net.tol_abs()
    return np.flatnonzero(default_mask), np.flatnonzero(~default_mask)


def clear_fixed_point(
    net: FinancialNetwork,
    x=None,
    cash=None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> ClearingResult:
    """Clearing vector by iterating pbar <- p ^ (A^T pbar + c - x + cash) from pbar = p."""
    tol = Config.CLEAR_TOL if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    max_iter = max_iter or default_max_iter(net, tol)
    base = _prepare(net, x, cash)
    pbar, iterations, residual = _iterate(net, base, tol, max_iter)
    clearing_counter.add(1, {"method": "fixed-point"})
    defaults, solvents = classify(net, pbar)
    return ClearingResult(pbar=pbar, defaults=defaults, solvents=solvents, iterations=iterations, residual=residual)


def clear_batch(
    net: FinancialNetwork,
    X=None,
    cash=None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> BatchClearing:
    """
    Clear many (shock, cash) pairs at once.

    X and cash are n x m matrices (or n-vectors broadcast over the other's
    columns); column k of the result is the clearing vector of pair k.
    """
    tol = Config.CLEAR_TOL if tol is None else tol
    max_iter = max_iter or default_max_iter(net, tol)
    X = np.zeros((net.n, 1)) if X is None else np.asarray(X, dtype=float)
    cash = np.zeros((net.n, 1)) if cash is None else np.asarray(cash, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if cash.ndim == 1:
        cash = cash[:, None]
    X = _check_shock(net, X)
    cash = _check_cash(net, cash)
    base = net.c[:, None] - X + cash
    if base.shape[1] == 0:
        return BatchClearing(np.zeros((net.n, 0)), 0, 0.0)
    pbar, iterations, residual = _iterate(net, base, tol, max_iter)
    clearing_counter.add(base.shape[1], {"method": "batch"})
    return BatchClearing(pbar, iterations, residual)


def clear_lp(net: FinancialNetwork, x=None, cash=None, v=None) -> ClearingResult:
    """Clearing vector as the maximizer of v^T pbar over the Eisenberg-Noe polytope."""
    v = np.ones(net.n) if v is None else np.asarray(v, dtype=float)
    if v.shape != (net.n,) or np.any(v <= 0):
        raise ObjectiveError("LP clearing needs a strictly positive coefficient vector")
    base = _prepare(net, x, cash)

    with tracer.start_as_current_span("clear_lp"):
        lp = LinearProgram(objective=v, lower=np.zeros(net.n), upper=np.array(net.p))
        lp.add_block(sparse.identity(net.n, format="csr") - sparse.csr_matrix(net.AT), base)
        solution = solve_lp(lp, name="clearing")

    pbar = np.clip(solution.x, 0.0, net.p)
    residual = float(np.max(np.abs(np.minimum(net.p, net.AT @ pbar + base) - pbar)))
    clearing_counter.add(1, {"method": "lp"})
    defaults, solvents = classify(net, pbar)
    return ClearingResult(
        pbar=pbar, defaults=defaults, solvents=solvents, iterations=solution.iterations, residual=residual
    )


def equity(net: FinancialNetwork) -> EquityVector:
    """Pre-shock equity w_j = c_j + sum_i P[i, j] - p_j."""
    return EquityVector(w=net.c + net.incoming() - net.p)


def comparison_check(net: FinancialNetwork, x, cash_lo, cash_hi, tol: float = 1e-8) -> ComparisonWitness:
    """
    Check that more cash never lowers payments, and that every node still
    in default after the larger injection passes its extra cash on in full.
    """
    cash_lo = np.asarray(cash_lo, dtype=float)
    cash_hi = np.asarray(cash_hi, dtype=float)
    if np.any(cash_hi < cash_lo):
        raise ValueError("cash_hi must dominate cash_lo componentwise")

    lo = clear_fixed_point(net, x, cash_lo)
    hi = clear_fixed_point(net, x, cash_hi)

    drop = lo.pbar - hi.pbar
    if np.any(drop > tol):
        node = int(np.argmax(drop))
        return ComparisonWitness(False, node, "monotonicity", float(drop[node]))

    passed_on = np.zeros(net.n)
    passed_on[hi.defaults] = (cash_hi - cash_lo)[hi.defaults]
    shortfall = passed_on - (hi.pbar - lo.pbar)
    if np.any(shortfall > tol):
        node = int(np.argmax(shortfall))
        return ComparisonWitness(False, node, "default pass-through", float(shortfall[node]))

    return ComparisonWitness(True)
