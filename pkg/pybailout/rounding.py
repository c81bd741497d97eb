import logging
import math
from typing import Optional, Union

import numpy as np

from .bailout import Allocation, BailoutProblem, allocation_values
from .config import Config
from .shocks import SeededRng
from .utls import argmax_lowest

logger = logging.getLogger(__name__)

Rng = Union[np.random.Generator, SeededRng]
# Bernoulli draws cleared per batch when estimating expected rounded value.
DRAW_CHUNK = 4096


def _generator(rng: Rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, SeededRng) else rng


def default_trials(n: int, eps: Optional[float] = None) -> int:
    """T = ceil(4 ln n / eps^2) rounding repetitions."""
    eps = Config.ROUNDING_EPS if eps is None else eps
    return max(1, math.ceil(4.0 * math.log(max(n, 1)) / eps ** 2))


def default_overspend(prob: BailoutProblem, delta: Optional[float] = None) -> float:
    """sqrt(3 budget ||L||_inf ln(4 / delta)), capped at the budget."""
    delta = Config.OVERSPEND_DELTA if delta is None else delta
    allowance = math.sqrt(3.0 * prob.budget * float(prob.L.max()) * math.log(4.0 / delta))
    return min(prob.budget, allowance)


def best_of_trials(prob: BailoutProblem, x, draws: np.ndarray, overspend: float) -> Allocation:
    """
    Best-objective column of the 0/1 draw matrix among those spending at most
    budget + overspend; over-budget draws are discarded.
    """
    spent = prob.L @ draws
    within = spent <= (prob.budget + overspend) * (1 + 1e-9) + 1e-12
    if not np.any(within):
        logger.warning("all %s rounding trials exceeded budget %.6g + %.6g", draws.shape[1], prob.budget, overspend)
        return Allocation.empty(prob, warning="all rounding trials exceeded the budget")

    candidates = draws[:, within]
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    values = allocation_values(prob, candidates, x)[:, 0]
    best = argmax_lowest(values)
    logger.debug("best of %s feasible trials: %.6g", candidates.shape[1], values[best])
    return Allocation.from_vector(candidates[:, best], prob, discrete=True, overspend=overspend)


def independent_draws(z: np.ndarray, gen: np.random.Generator, T: int) -> np.ndarray:
    """n x T matrix of independent Bernoulli(z_j) draws."""
    return (gen.random((z.size, T)) < z[:, None]).astype(float)


def round_independent(
    relaxed: Allocation,
    prob: BailoutProblem,
    rng: Rng,
    T: Optional[int] = None,
    overspend: Optional[float] = None,
    x=None,
) -> Allocation:
    """
    Round a fractional allocation with independent coin flips.

    Parameters:
        relaxed (Allocation): Fractional solution of the relaxation.
        prob (BailoutProblem): The problem the allocation belongs to.
        rng (Generator or SeededRng): Source of the coin flips.
        T (int, Optional): Number of trials. Default is ceil(4 ln n / eps^2).
        overspend (float, Optional): Allowed spending above the budget. Default is
            default_overspend(prob); pass 0 for the strict mode.
        x (array, Optional): Shock used to rank the trials. Required unless the
            problem's shock distribution is deterministic.

    Returns:
        Allocation: The best trial within budget + overspend, or an empty allocation
            flagged with a warning when every trial is over budget.
    """
    T = default_trials(prob.n) if T is None else T
    overspend = default_overspend(prob) if overspend is None else overspend
    x = prob.default_shock() if x is None else x
    draws = independent_draws(np.asarray(relaxed.z, dtype=float), _generator(rng), T)
    return best_of_trials(prob, x, draws, overspend)


def sample_rounded_values(relaxed: Allocation, prob: BailoutProblem, x, rng: Rng, draws: int) -> np.ndarray:
    """Objective of `draws` raw Bernoulli roundings, with no budget filtering."""
    gen = _generator(rng)
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    z = np.asarray(relaxed.z, dtype=float)
    values = []
    for start in range(0, draws, DRAW_CHUNK):
        Z = independent_draws(z, gen, min(DRAW_CHUNK, draws - start))
        values.append(allocation_values(prob, Z, x)[:, 0])
    return np.concatenate(values) if values else np.zeros(0)


def dependent_marginals(z: np.ndarray, L: np.ndarray) -> np.ndarray:
    """
    Marginals of the complement variables U = 1 - Z, scaled by L_j / ||L||_inf,
    plus one slack entry that tops the total weight up to an integer, so that
    pipage never leaves a fractional entry behind.
    """
    scale = float(L.max())
    pi = (L / scale) * (1.0 - np.clip(z, 0.0, 1.0))
    total = float(pi.sum())
    slack = math.ceil(total - 1e-9) - total
    return np.append(pi, min(1.0, max(0.0, slack)))


def pipage(pi: np.ndarray, gen: np.random.Generator, atol: float = 1e-12) -> np.ndarray:
    """
    Dependent rounding of a [0, 1] vector: pairs of fractional entries trade
    mass until one of them is integral, preserving every marginal and the sum.
    """
    pi = np.clip(np.array(pi, dtype=float), 0.0, 1.0)
    pending = [j for j in range(pi.size) if atol < pi[j] < 1 - atol]

    while len(pending) >= 2:
        i = pending.pop()
        j = pending.pop()
        up = min(1.0 - pi[i], pi[j])
        down = min(pi[i], 1.0 - pi[j])
        if gen.random() < down / (up + down):
            pi[i] += up
            pi[j] -= up
        else:
            pi[i] -= down
            pi[j] += down
        for k in (i, j):
            if atol < pi[k] < 1 - atol:
                pending.append(k)

    if pending:
        k = pending[0]
        pi[k] = 1.0 if gen.random() < pi[k] else 0.0
    return np.round(pi)


def dependent_draws(z: np.ndarray, prob: BailoutProblem, gen: np.random.Generator, T: int) -> np.ndarray:
    pi = dependent_marginals(np.asarray(z, dtype=float), prob.L)
    draws = np.empty((prob.n, T))
    for t in range(T):
        draws[:, t] = 1.0 - pipage(pi, gen)[:prob.n]
    return draws


def round_dependent(relaxed: Allocation, prob: BailoutProblem, rng: Rng, overspend: Optional[float] = None) -> Allocation:
    """One dependent rounding Z = 1 - U; E[Z_j] >= z_j with L^T Z concentrated around its mean."""
    overspend = default_overspend(prob) if overspend is None else overspend
    draw = dependent_draws(relaxed.z, prob, _generator(rng), 1)[:, 0]
    return Allocation.from_vector(draw, prob, discrete=True, overspend=overspend)


def round_dependent_best(
    relaxed: Allocation,
    prob: BailoutProblem,
    rng: Rng,
    T: Optional[int] = None,
    overspend: Optional[float] = None,
    x=None,
) -> Allocation:
    """Best of T dependent roundings, ranked and filtered like round_independent."""
    T = default_trials(prob.n) if T is None else T
    overspend = default_overspend(prob) if overspend is None else overspend
    x = prob.default_shock() if x is None else x
    draws = dependent_draws(relaxed.z, prob, _generator(rng), T)
    return best_of_trials(prob, x, draws, overspend)
