import logging
from typing import Optional, Union

import networkx as nx
import numpy as np
from scipy import sparse

from .bailout import Allocation, BailoutProblem
from .config import Config
from .network import FinancialNetwork, equity
from .shocks import SeededRng
from .utls import descending_order

logger = logging.getLogger(__name__)

HEURISTICS = ("wealth-asc", "outdegree", "pagerank", "eigencentrality", "random-perm")


def liability_graph(net: FinancialNetwork) -> nx.DiGraph:
    """Directed graph with an edge j -> i weighted by what j owes i."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(net.n))
    graph.add_weighted_edges_from(net.edges())
    return graph


def undirected_graph(W) -> nx.Graph:
    """Undirected graph of a weight matrix, ignoring edge direction (weights w_ij + w_ji)."""
    W = sparse.csr_matrix(W)
    sym = sparse.triu(W + W.T, k=1).tocoo()
    graph = nx.Graph()
    graph.add_nodes_from(range(W.shape[0]))
    graph.add_weighted_edges_from(
        (int(i), int(j), float(w)) for i, j, w in zip(sym.row, sym.col, sym.data) if w > 0
    )
    return graph


def eigenvector_scores(net: FinancialNetwork) -> np.ndarray:
    graph = undirected_graph(net.P)
    try:
        scores = nx.eigenvector_centrality(graph, max_iter=Config.CENTRALITY_MAX_ITER, weight="weight")
        return np.array([scores[j] for j in range(net.n)])
    except (nx.PowerIterationFailedConvergence, nx.NetworkXException) as e:
        logger.warning("(%s) [%s], falling back to a dense eigensolver", e.__class__.__name__, e)
        W = nx.to_numpy_array(graph, nodelist=range(net.n), weight="weight")
        _, vectors = np.linalg.eigh(W)
        return np.abs(vectors[:, -1])


def heuristic_order(kind: str, prob: BailoutProblem, rng: Optional[Union[np.random.Generator, SeededRng]] = None) -> np.ndarray:
    """Node priority of a heuristic; computed from pre-shock data only."""
    net = prob.net
    if kind == "wealth-asc":
        return np.argsort(np.round(equity(net).w, 12), kind="stable")
    if kind == "outdegree":
        degree = np.asarray((sparse.csr_matrix(net.P) > 0).sum(axis=1)).ravel()
        return descending_order(degree)
    if kind == "pagerank":
        scores = nx.pagerank(liability_graph(net), weight="weight")
        return descending_order([scores[j] for j in range(net.n)])
    if kind == "eigencentrality":
        return descending_order(eigenvector_scores(net))
    if kind == "random-perm":
        if rng is None:
            raise ValueError("random-perm needs a random generator")
        gen = rng.generator() if isinstance(rng, SeededRng) else rng
        return gen.permutation(net.n)
    raise ValueError(f"unknown heuristic {kind!r}, expected one of {HEURISTICS}")


def fill_in_order(prob: BailoutProblem, order) -> Allocation:
    """Walk the order and take every node that still fits in the budget."""
    chosen = []
    spent = 0.0
    for node in order:
        node = int(node)
        if prob.affordable(spent + prob.L[node]):
            chosen.append(node)
            spent += prob.L[node]
    return Allocation.from_nodes(chosen, prob)


def heuristic(kind: str, prob: BailoutProblem, rng=None) -> Allocation:
    return fill_in_order(prob, heuristic_order(kind, prob, rng))
