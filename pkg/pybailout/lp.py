import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .config import Config
from .exceptions import LPSolverError
from .telemetry import lp_counter, lp_duration_histogram, tracer

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sparse.spmatrix]


@dataclass
class LinearProgram:
    """
    maximize objective @ x  subject to  A x <= rhs,  lower <= x <= upper.

    Constraints are held as sparse (row, col, value) triples so that the
    quadratic-size fairness programs never materialize a dense matrix.
    """

    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rows: List[np.ndarray] = field(default_factory=list)
    cols: List[np.ndarray] = field(default_factory=list)
    vals: List[np.ndarray] = field(default_factory=list)
    rhs: List[np.ndarray] = field(default_factory=list)
    n_rows: int = 0

    @property
    def n_vars(self) -> int:
        return int(self.objective.size)

    def add_triples(self, rows: Sequence[int], cols: Sequence[int], vals: Sequence[float], rhs: Sequence[float]) -> None:
        """Append constraints given as triples with row ids local to this block."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self.rows.append(np.asarray(rows, dtype=np.int64) + self.n_rows)
        self.cols.append(np.asarray(cols, dtype=np.int64))
        self.vals.append(np.asarray(vals, dtype=float))
        self.rhs.append(rhs)
        self.n_rows += rhs.size

    def add_block(self, block: Matrix, rhs: Sequence[float], col_offset: int = 0) -> None:
        coo = sparse.coo_matrix(block)
        self.add_triples(coo.row, coo.col + col_offset, coo.data, rhs)

    def matrix(self) -> Optional[sparse.csr_matrix]:
        if not self.n_rows:
            return None
        return sparse.csr_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n_rows, self.n_vars),
        )

    def bounds(self) -> List[tuple]:
        return list(zip(self.lower.tolist(), self.upper.tolist()))


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: int
    iterations: int
    message: str


def solve_lp(lp: LinearProgram, method: Optional[str] = None, name: str = "lp") -> LPSolution:
    """Solve a maximization LP with scipy's HiGHS interface."""
    method = method or Config.LP_METHOD
    with tracer.start_as_current_span("solve_lp") as span:
        span.set_attribute("lp.name", name)
        span.set_attribute("lp.vars", lp.n_vars)
        span.set_attribute("lp.rows", lp.n_rows)
        start_time = time.time()
        A_ub = lp.matrix()
        res = linprog(
            -lp.objective,
            A_ub=A_ub,
            b_ub=np.concatenate(lp.rhs) if lp.n_rows else None,
            bounds=lp.bounds(),
            method=method,
            options={
                "primal_feasibility_tolerance": Config.LP_TOL,
                "dual_feasibility_tolerance": Config.LP_TOL,
            },
        )
        duration = time.time() - start_time
        lp_duration_histogram.record(duration, {"name": name})
        lp_counter.add(1, {"name": name, "status": int(res.status)})

        if res.status != 0:
            logger.error("LP %s failed with status %s: %s", name, res.status, res.message)
            raise LPSolverError(f"LP {name} failed: {res.message}", status=int(res.status))

        logger.debug("LP %s solved in %.4fs (%s iterations)", name, duration, res.nit)
        return LPSolution(
            x=np.asarray(res.x, dtype=float),
            objective=float(-res.fun),
            status=int(res.status),
            iterations=int(res.nit),
            message=str(res.message),
        )
