import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .bailout import BATCH_ELEMENTS, Allocation, BailoutProblem, allocation_values, as_matrix, clear_allocations
from .telemetry import tracer
from .utls import argmax_lowest

logger = logging.getLogger(__name__)


@dataclass
class GreedyTrace:
    """Selections of one greedy run, in order, with the sample-average value after each step."""

    allocation: Allocation
    selected: List[int] = field(default_factory=list)
    gains: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    baseline: float = 0.0

    @property
    def value(self) -> float:
        return self.values[-1] if self.values else self.baseline


def greedy_trace(prob: BailoutProblem, samples) -> GreedyTrace:
    """
    Hill-climb on the sample-average objective: repeatedly add the affordable
    node with the largest marginal gain, ties to the lowest index, until no
    node fits in the remaining budget.
    """
    X = as_matrix(samples, prob.n)
    if X.shape[1] == 0:
        raise ValueError("greedy needs at least one shock sample")
    current = np.zeros(prob.n)
    spent = 0.0
    baseline = float(allocation_values(prob, current, X).mean())
    value = baseline
    selected: List[int] = []
    gains: List[float] = []
    values: List[float] = []
    chunk = max(1, BATCH_ELEMENTS // max(1, prob.n * max(1, X.shape[1])))

    with tracer.start_as_current_span("greedy") as span:
        while True:
            candidates = [
                u for u in range(prob.n)
                if current[u] == 0 and prob.affordable(spent + prob.L[u])
            ]
            if not candidates:
                break

            means = []
            for start in range(0, len(candidates), chunk):
                block = candidates[start:start + chunk]
                Z = np.repeat(current[:, None], len(block), axis=1)
                Z[block, np.arange(len(block))] = 1.0
                means.append(allocation_values(prob, Z, X).mean(axis=1))
            means = np.concatenate(means)

            pick = argmax_lowest(means)
            node = candidates[pick]
            current[node] = 1.0
            spent += prob.L[node]
            gains.append(float(means[pick] - value))
            value = float(means[pick])
            selected.append(node)
            values.append(value)
            logger.debug("greedy step %s: node %s gain %.6g", len(selected), node, gains[-1])

        span.set_attribute("greedy.selected", len(selected))

    return GreedyTrace(
        allocation=Allocation.from_nodes(selected, prob),
        selected=selected,
        gains=gains,
        values=values,
        baseline=baseline,
    )


def greedy(prob: BailoutProblem, samples) -> Allocation:
    return greedy_trace(prob, samples).allocation


def check_small_bailout_regime(prob: BailoutProblem, samples, trace: GreedyTrace) -> bool:
    """
    True iff every greedily selected node is still in default right after its
    own bailout (pbar_u < p_u - tol_abs), under every sample.
    """
    if not trace.selected:
        return True
    X = as_matrix(samples, prob.n)
    k = len(trace.selected)
    prefixes = np.zeros((prob.n, k))
    for t in range(k):
        prefixes[trace.selected[:t + 1], t] = 1.0
    pbar = clear_allocations(prob, prefixes, X)
    threshold = prob.net.p - prob.net.tol_abs()
    for t, node in enumerate(trace.selected):
        if np.any(pbar[node, t, :] >= threshold[node]):
            logger.debug("node %s saturates at greedy step %s", node, t + 1)
            return False
    return True
