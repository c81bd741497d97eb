from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .config import Config
from .exceptions import ObjectiveError
from .network import ClearingResult, FinancialNetwork

LINEAR_KINDS = ("SoP", "SoIP", "SoT", "FS")
NAMES = LINEAR_KINDS + ("AS", "custom")


@dataclass(frozen=True, eq=False)
class Objective:
    """
    Welfare functional of a clearing vector.

    kind is "linear" (v^T pbar), "absolute-solvency" (number of solvent
    nodes) or "augmented" (solvency count plus coef * 1^T pbar).
    """

    kind: str
    v: Optional[np.ndarray] = None
    name: str = "custom"
    coef: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "absolute-solvency", "augmented"):
            raise ObjectiveError(f"unknown objective kind {self.kind!r}")
        if self.kind == "linear":
            if self.v is None:
                raise ObjectiveError("linear objective needs coefficients")
            v = np.asarray(self.v, dtype=float)
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ObjectiveError("objective coefficients must be finite and non-negative")
            object.__setattr__(self, "v", v)

    @classmethod
    def linear(cls, v, name: str = "custom") -> "Objective":
        return cls("linear", v=v, name=name)

    @classmethod
    def absolute_solvency(cls) -> "Objective":
        return cls("absolute-solvency", name="AS")

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    @property
    def strictly_positive(self) -> bool:
        return self.is_linear and bool(np.all(self.v > 0))

    @property
    def zeta(self) -> float:
        """Conditioning v_max / v_min; 1 for the non-linear kinds."""
        if not self.is_linear:
            return 1.0
        if self.v.min() <= 0:
            return float("inf")
        return float(self.v.max() / self.v.min())

    @property
    def v_max(self) -> float:
        return float(self.v.max()) if self.is_linear else 1.0

    def lp_coefficients(self, n: int) -> np.ndarray:
        """Coefficients driving LP-based solvers (the linear part for augmented objectives)."""
        if self.kind == "linear":
            if not self.strictly_positive:
                raise ObjectiveError(f"{self.name} has a zero coefficient and cannot drive an LP")
            return self.v
        if self.kind == "augmented":
            return np.full(n, self.coef)
        raise ObjectiveError("absolute solvency must be epsilon-augmented before LP solving")

    def values(self, net: FinancialNetwork, pbar: np.ndarray) -> Union[float, np.ndarray]:
        """Objective of a clearing vector, or of every column of an n x m matrix."""
        pbar = np.asarray(pbar, dtype=float)
        if self.kind == "linear":
            return self.v @ pbar
        p = net.p if pbar.ndim == 1 else net.p[:, None]
        tol = net.tol_abs() if pbar.ndim == 1 else net.tol_abs()[:, None]
        solvent = np.sum(pbar >= p - tol, axis=0).astype(float)
        if self.kind == "augmented":
            return solvent + self.coef * pbar.sum(axis=0)
        return solvent


def linear_coefficients(kind: str, net: FinancialNetwork, strict: bool = True) -> np.ndarray:
    """
    Coefficient vector of the named linear objective.

    strict rejects zero coefficients (needed when the objective drives an
    LP); evaluation-only callers pass strict=False.
    """
    if kind == "SoP":
        v = np.ones(net.n)
    elif kind == "SoIP":
        v = np.array(net.beta)
    elif kind == "SoT":
        v = 1.0 - net.beta
    elif kind == "FS":
        v = 1.0 / net.p
    else:
        raise ObjectiveError(f"unknown linear objective {kind!r}, expected one of {LINEAR_KINDS}")

    if strict and np.any(v <= 0):
        zero = np.flatnonzero(v <= 0).tolist()
        raise ObjectiveError(f"{kind} has zero coefficients at nodes {zero}")
    return v


def make_objective(name: str, net: FinancialNetwork, v=None, strict: bool = True) -> Objective:
    if name == "AS":
        return Objective.absolute_solvency()
    if name == "custom":
        if v is None:
            raise ObjectiveError("custom objective needs a coefficient vector")
        objective = Objective.linear(v, name="custom")
        if strict and not objective.strictly_positive:
            raise ObjectiveError("custom coefficients must be strictly positive")
        return objective
    return Objective.linear(linear_coefficients(name, net, strict=strict), name=name)


def evaluate(obj: Objective, result: ClearingResult, net: FinancialNetwork) -> float:
    return float(obj.values(net, result.pbar))


def epsilon_augment(obj: Objective, eps: float, budget: float, beta_max: float) -> Objective:
    """AS + eps (1 - beta_max) / (2 budget) * 1^T pbar, which is strictly increasing."""
    if obj.kind != "absolute-solvency":
        raise ObjectiveError("only the absolute solvency objective is augmented")
    if eps <= 0:
        raise ObjectiveError("eps must be positive")
    if budget <= 0:
        raise ObjectiveError("budget must be positive")
    coef = eps * (1.0 - beta_max) / (2.0 * budget)
    return Objective("augmented", name=f"AS+{eps:g}", coef=coef)


def solver_objective(obj: Objective, budget: float, beta_max: float, eps: Optional[float] = None) -> Objective:
    """The objective LP-based solvers maximize: absolute solvency is epsilon-augmented, the rest pass through."""
    if obj.kind != "absolute-solvency":
        return obj
    eps = Config.AS_EPS if eps is None else eps
    # a zero budget admits only the empty allocation, any positive scale works
    return epsilon_augment(obj, eps, budget if budget > 0 else 1.0, beta_max)
