from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import stats

from .exceptions import ShockError

KINDS = ("uniform", "beta", "point-mass", "zero")


@dataclass(frozen=True, eq=False)
class ShockDistribution:
    """
    Distribution of the disruption x of external assets, supported on [0, c].

    Uniform and beta kinds draw every coordinate independently and scale a
    [0, 1] variate by c_j; point-mass always returns x0.
    """

    kind: str
    c: np.ndarray
    a: float = 0.5
    b: float = 0.5
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ShockError(f"unknown shock kind {self.kind!r}, expected one of {KINDS}")
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.kind == "beta" and (self.a <= 0 or self.b <= 0):
            raise ShockError("beta shock parameters must be positive")
        if self.kind == "point-mass":
            if self.x0 is None:
                raise ShockError("point-mass shock needs x0")
            x0 = np.asarray(self.x0, dtype=float)
            if x0.shape != self.c.shape or np.any(x0 < 0) or np.any(x0 > self.c * (1 + 1e-12)):
                raise ShockError("point-mass x0 must lie in [0, c]")
            object.__setattr__(self, "x0", np.minimum(x0, self.c))

    @classmethod
    def uniform(cls, c) -> "ShockDistribution":
        return cls("uniform", c)

    @classmethod
    def scaled_beta(cls, c, a: float, b: float) -> "ShockDistribution":
        return cls("beta", c, a=a, b=b)

    @classmethod
    def point_mass(cls, c, x0) -> "ShockDistribution":
        return cls("point-mass", c, x0=x0)

    @classmethod
    def zero(cls, c) -> "ShockDistribution":
        return cls("zero", c)

    @property
    def n(self) -> int:
        return int(self.c.size)

    @property
    def deterministic(self) -> bool:
        return self.kind in ("point-mass", "zero")

    def to_dict(self) -> Dict[str, Any]:
        spec: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "beta":
            spec.update(a=float(self.a), b=float(self.b))
        if self.kind == "point-mass":
            spec["x0"] = [float(v) for v in self.x0]
        return spec

    @classmethod
    def from_dict(cls, spec: Dict[str, Any], c) -> "ShockDistribution":
        kind = spec.get("kind")
        if kind == "beta":
            return cls.scaled_beta(c, float(spec.get("a", 0.5)), float(spec.get("b", 0.5)))
        if kind == "point-mass":
            return cls.point_mass(c, spec.get("x0"))
        return cls(kind, c)


@dataclass(frozen=True)
class SeededRng:
    """A (seed, stream) pair naming an independent counter-based random stream."""

    seed: int
    stream: int = 0
    _tags: tuple = field(default=(), repr=False)

    def generator(self, *key: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self._tags, *key))
        return np.random.Generator(np.random.Philox(sequence))

    def child(self, *key: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream, self._tags + tuple(int(k) for k in key))


def _draw(dist: ShockDistribution, gen: np.random.Generator) -> np.ndarray:
    if dist.kind == "zero":
        return np.zeros(dist.n)
    if dist.kind == "point-mass":
        return np.array(dist.x0)
    u = gen.random(dist.n)
    if dist.kind == "beta":
        u = stats.beta.ppf(u, dist.a, dist.b)
    return np.clip(u, 0.0, 1.0) * dist.c


def sample(dist: ShockDistribution, rng: SeededRng) -> np.ndarray:
    return _draw(dist, rng.generator())


def sample_batch(dist: ShockDistribution, rng: SeededRng, m: int) -> List[np.ndarray]:
    """m shocks; sample i comes from its own sub-stream, so any subset can be regenerated alone."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return [_draw(dist, rng.generator(i)) for i in range(m)]


def batch_matrix(dist: ShockDistribution, rng: SeededRng, m: int) -> np.ndarray:
    """sample_batch stacked as the columns of an n x m matrix."""
    samples = sample_batch(dist, rng, m)
    if not samples:
        return np.zeros((dist.n, 0))
    return np.column_stack(samples)
