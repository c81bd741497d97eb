import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .config import Config
from .exceptions import DisconnectedGraphError
from .fairness import spatial_gini
from .network import FinancialNetwork

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("volume", "cardinality")
# Rows of the cut-indicator matrix evaluated per vectorized block.
CUT_BLOCK = 1 << 16


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """
    Conductance and Laplacian spectrum of a symmetric weight matrix.

    phi is None when n exceeds the enumeration cap; the Cheeger interval is
    reported in every case. With volume normalization the interval brackets
    phi through the normalized Laplacian (phi^2 / 2 <= nu2 <= 2 phi); with
    cardinality normalization through the unnormalized one
    (phi^2 / (2 d_max) <= lambda2 <= 2 phi).
    """

    phi: Optional[float]
    lambda2: float
    normalized_lambda2: float
    cut: Tuple[int, ...]
    normalization: str
    cheeger_lower: float
    cheeger_upper: float
    exact: bool

    @property
    def cheeger_holds(self) -> bool:
        if self.phi is None:
            return True
        slack = 1e-9 * max(1.0, self.phi)
        return self.cheeger_lower - slack <= self.phi <= self.cheeger_upper + slack


def _dense_symmetric(W) -> np.ndarray:
    W = W.toarray() if sparse.issparse(W) else np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("weight matrix must be square")
    if np.any(W < 0):
        raise ValueError("weights must be non-negative")
    if not np.allclose(W, W.T, rtol=1e-10, atol=1e-12):
        raise ValueError("weight matrix must be symmetric")
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    return W


def is_connected(W) -> bool:
    count, _ = csgraph.connected_components(sparse.csr_matrix(W > 0), directed=False)
    return count == 1


def hadamard_power(A, k: int):
    """A^(0) = I, A^(1) = A and A^(k) = A^(k-1) * A elementwise."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        n = A.shape[0]
        return sparse.identity(n, format="csr") if sparse.issparse(A) else np.eye(n)
    return A.power(k) if sparse.issparse(A) else np.power(np.asarray(A, dtype=float), k)


def _enumerate_cuts(W: np.ndarray, normalization: str) -> Tuple[float, Tuple[int, ...]]:
    n = W.shape[0]
    degrees = W.sum(axis=1)
    total = degrees.sum() if normalization == "volume" else float(n)
    weights = degrees if normalization == "volume" else np.ones(n)
    best = math.inf
    best_mask = 0
    # node n-1 always sits outside S, so each cut is seen once
    masks_total = 1 << (n - 1)
    bits = np.arange(n - 1)
    for start in range(1, masks_total, CUT_BLOCK):
        masks = np.arange(start, min(start + CUT_BLOCK, masks_total), dtype=np.int64)
        S = ((masks[:, None] >> bits[None, :]) & 1).astype(float)
        S = np.hstack([S, np.zeros((S.shape[0], 1))])
        crossing = np.sum((S @ W) * (1.0 - S), axis=1)
        size = S @ weights
        ratio = crossing / np.minimum(size, total - size)
        k = int(np.argmin(ratio))
        if ratio[k] < best - 1e-15:
            best, best_mask = float(ratio[k]), int(masks[k])

    S = [j for j in range(n - 1) if best_mask >> j & 1]
    rest = [j for j in range(n) if j not in S]
    if weights[rest].sum() < weights[S].sum():
        S = rest
    return best, tuple(S)


def conductance(W, normalization: str = "volume", cap: Optional[int] = None) -> SpectralReport:
    """
    Exact conductance min_S w(S, S^c) / min(|S|, |S^c|) by cut enumeration.

    |S| is the volume sum_{i in S} d_i (d_i = sum_j w_ij) by default, or the
    node count with normalization="cardinality". The returned cut is the
    side with the smaller size.

    cheeger_holds checks lambda2 / 2 <= phi <= sqrt(2 d_max lambda2) for the
    cardinality form, i.e. lambda2 >= phi^2 / (2 d_max). For a relative
    liability matrix d_max is beta_max, so this is lambda2 >= phi^2 / (2 beta_max).
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    cap = Config.CONDUCTANCE_CAP if cap is None else cap
    W = _dense_symmetric(W)
    n = W.shape[0]
    if n < 2 or not is_connected(W):
        raise DisconnectedGraphError("conductance needs a connected graph with at least two nodes")

    laplacian = csgraph.laplacian(W)
    lambda2 = float(np.linalg.eigvalsh(laplacian)[1])
    normalized_lambda2 = float(np.linalg.eigvalsh(csgraph.laplacian(W, normed=True))[1])

    if normalization == "volume":
        lower, upper = normalized_lambda2 / 2.0, math.sqrt(2.0 * normalized_lambda2)
    else:
        lower, upper = lambda2 / 2.0, math.sqrt(2.0 * W.sum(axis=1).max() * lambda2)

    if n > cap:
        logger.warning("n=%s above the cut enumeration cap %s: reporting the Cheeger interval only", n, cap)
        return SpectralReport(None, lambda2, normalized_lambda2, (), normalization, lower, upper, False)

    phi, cut = _enumerate_cuts(W, normalization)
    return SpectralReport(phi, lambda2, normalized_lambda2, cut, normalization, lower, upper, True)


def psi(x, W, normalization: str = "volume") -> float:
    """sum over edges of w_ij |x_i - x_j|, over sum_i d_i |x_i| (or sum_i |x_i|)."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("psi is undefined at the zero vector")
    W = _dense_symmetric(W)
    I, J = np.triu_indices(W.shape[0], k=1)
    numerator = float(W[I, J] @ np.abs(x[I] - x[J]))
    weights = W.sum(axis=1) if normalization == "volume" else np.ones(x.size)
    return numerator / float(weights @ np.abs(x))


def indicator_vector(report: SpectralReport, n: int) -> np.ndarray:
    """1/phi on the conductance-achieving side, 0 elsewhere."""
    if report.phi is None or report.phi <= 0:
        raise ValueError("needs an exact, positive conductance")
    x = np.zeros(n)
    x[list(report.cut)] = 1.0 / report.phi
    return x


def median_center(x, weights=None) -> np.ndarray:
    """Shift x so that its (weighted) median is zero."""
    x = np.asarray(x, dtype=float)
    if weights is None:
        return x - np.median(x)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(x, kind="stable")
    cumulative = np.cumsum(weights[order])
    k = int(np.searchsorted(cumulative, cumulative[-1] / 2.0))
    return x - x[order[k]]


def sgc_conductance_check(z, L, net: FinancialNetwork) -> Optional[bool]:
    """
    phi(A) / 2 <= SGC(z) on a symmetric connected network, with phi the exact
    volume-normalized conductance of A. No eigenvalue inequality is involved;
    the Cheeger pair of A is checked by conductance().

    Returns None (not applicable) when SGC is zero or undefined, or when the
    bailed-out nodes hold more than half of the total connectivity, where
    the bound is not guaranteed.
    """
    A = net.dense_A()
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise ValueError("sgc_conductance_check needs a symmetric relative liability matrix")
    theta = np.asarray(L, dtype=float) * np.asarray(z, dtype=float)
    support = theta > 0
    if not support.any() or np.allclose(theta, theta[0]):
        logger.debug("SGC is zero or undefined for this allocation, check skipped")
        return None
    if net.beta[support].sum() > net.beta.sum() / 2.0:
        logger.debug("allocation support holds more than half the volume, check skipped")
        return None
    phi = conductance(A).phi
    if phi is None:
        return None
    return bool(phi / 2.0 <= spatial_gini(z, L, net) + 1e-12)
