"""Finite-dimensional l^r norms used as test Banach spaces.

Every other module carries a :class:`NormSpec` around and measures vectors
with it.  Vectors themselves are plain numpy arrays whose last axis is the
coordinate axis; containers (time families, grid functions, state functions)
hold one shared space for all their vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NormSpec:
    """An l^r norm on R^dim (or C^dim, coordinatewise modulus first).

    r = math.inf selects the max norm.  Cotype experiments exclude r = inf.
    """

    r: float
    dim: int

    def __post_init__(self):
        if not (self.r >= 1.0):
            raise ValueError(f"norm exponent must satisfy r >= 1, got {self.r}")
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")

    def norm(self, v: np.ndarray) -> float:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ValueError(f"expected vector of shape ({self.dim},), got {v.shape}")
        return float(self.norms(v[None, :])[0])

    def norms(self, arr: np.ndarray) -> np.ndarray:
        """Norms along the last axis of ``arr`` (shape (..., dim))."""
        arr = np.asarray(arr)
        if arr.shape[-1] != self.dim:
            raise ValueError(f"last axis must have length {self.dim}, got {arr.shape[-1]}")
        a = np.abs(arr)
        if math.isinf(self.r):
            return a.max(axis=-1)
        if self.r == 1.0:
            return a.sum(axis=-1)
        if self.r == 2.0:
            return np.sqrt((a * a).sum(axis=-1))
        return (a ** self.r).sum(axis=-1) ** (1.0 / self.r)


def cotype_exponent(space: NormSpec) -> float:
    """Martingale-cotype exponent of l^r: max(2, r), infinite for r = inf."""
    if math.isinf(space.r):
        return math.inf
    return max(2.0, space.r)


def seq_lq(values, q: float) -> float:
    """l^q aggregation of a list of nonnegative reals; empty list gives 0."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    if np.any(v < 0):
        raise ValueError("seq_lq expects nonnegative values")
    if not (q >= 1.0):
        raise ValueError(f"exponent must satisfy q >= 1, got {q}")
    if math.isinf(q):
        return float(v.max())
    return float((v ** q).sum() ** (1.0 / q))
