"""Seeded corpus generators shared by the experiment harness and the tests.

Everything takes an explicit numpy Generator; regenerating a corpus from
the recorded seed is part of the reproducibility contract.
"""

from __future__ import annotations

import math

import numpy as np

from .ergodic import MarkovOperator, StateFn
from .martingale import DyadicGrid, GridFn
from .spaces import NormSpec

GENERATOR_KINDS = ("random-gaussian", "spike", "rademacher-martingale", "lacunary")


def gaussian_grid_fn(rng: np.random.Generator, grid: DyadicGrid, space: NormSpec,
                     scale: float = 1.0) -> GridFn:
    return GridFn(grid, space, scale * rng.standard_normal(grid.shape + (space.dim,)))


def spike_grid_fn(rng: np.random.Generator, grid: DyadicGrid, space: NormSpec,
                  height: float = 1.0) -> GridFn:
    values = np.zeros(grid.shape + (space.dim,))
    point = tuple(int(i) for i in rng.integers(0, grid.side, size=grid.d))
    direction = rng.standard_normal(space.dim)
    direction /= max(np.abs(direction).max(), 1e-12)
    values[point] = height * direction
    return GridFn(grid, space, values)


def rademacher_martingale_grid_fn(rng: np.random.Generator, grid: DyadicGrid,
                                  space: NormSpec, scale: float = 1.0) -> GridFn:
    """Sum of genuine dyadic martingale increments with random coefficients.

    At level ell the increment is a Haar-type sign pattern (+1 on one half
    of each level-ell cube along the first axis, -1 on the other) times a
    random vector drawn per cube, so E_ell of the increment vanishes.
    """
    values = np.zeros(grid.shape + (space.dim,))
    values[...] = rng.standard_normal(space.dim) * scale     # coarse head
    N = grid.side
    coords0 = np.arange(N)
    for level in range(1, grid.J + 1):
        s = 2 ** level
        haar = np.where(coords0 % s < s // 2, 1.0, -1.0)
        haar = haar.reshape((N,) + (1,) * (grid.d - 1))
        haar = np.broadcast_to(haar, grid.shape)
        ncubes_axis = N // s
        coeff = rng.standard_normal((ncubes_axis,) * grid.d + (space.dim,)) * scale
        coeff_full = coeff
        for axis in range(grid.d):
            coeff_full = np.repeat(coeff_full, s, axis=axis)
        values = values + haar[..., None] * coeff_full
    return GridFn(grid, space, values)


def grid_fn_of_kind(kind: str, rng: np.random.Generator, grid: DyadicGrid,
                    space: NormSpec) -> GridFn:
    if kind == "random-gaussian":
        return gaussian_grid_fn(rng, grid, space)
    if kind == "spike":
        return spike_grid_fn(rng, grid, space)
    if kind == "rademacher-martingale":
        return rademacher_martingale_grid_fn(rng, grid, space)
    raise ValueError(f"unknown grid corpus kind {kind!r}")


def gaussian_state_fn(rng: np.random.Generator, K: int, space: NormSpec) -> StateFn:
    return StateFn(rng.standard_normal((K, space.dim)), space)


def random_markov(rng: np.random.Generator, K: int) -> MarkovOperator:
    M = rng.random((K, K)) + 0.05
    return MarkovOperator(M / M.sum(axis=1, keepdims=True))


def random_symmetric_stochastic(rng: np.random.Generator, K: int,
                                max_iter: int = 500) -> MarkovOperator:
    """Symmetric doubly stochastic matrix by symmetric Sinkhorn scaling."""
    B = rng.random((K, K)) + 0.1
    B = (B + B.T) / 2.0
    for _ in range(max_iter):
        d = B.sum(axis=1)
        B = B / np.sqrt(d)[:, None] / np.sqrt(d)[None, :]
        if np.abs(B.sum(axis=1) - 1.0).max() < 1e-14:
            break
    B = (B + B.T) / 2.0
    # absorb the last normalization defect into the diagonal
    B[np.diag_indices(K)] += 1.0 - B.sum(axis=1)
    return MarkovOperator(B)


def lazy_cycle_walk(K: int, hold: float = 0.5) -> MarkovOperator:
    """Lazy symmetric random walk on a K-cycle; spectral gap ~ (pi/K)^2."""
    if not (0 < hold < 1):
        raise ValueError("holding probability must lie in (0, 1)")
    M = np.zeros((K, K))
    step = (1.0 - hold) / 2.0
    for i in range(K):
        M[i, i] = hold
        M[i, (i + 1) % K] += step
        M[i, (i - 1) % K] += step
    return MarkovOperator(M)


def two_state_chain(p: float) -> MarkovOperator:
    """Symmetric two-state chain with flip probability p (gap 2p)."""
    if not (0 < p <= 0.5):
        raise ValueError("flip probability must lie in (0, 1/2]")
    return MarkovOperator(np.array([[1 - p, p], [p, 1 - p]]))


def random_signs(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.choice([-1.0, 1.0], size=n)


def random_increasing_indices(rng: np.random.Generator, length: int,
                              max_step: int = 8) -> list[int]:
    """Strictly increasing integers starting at 1, for the a/b/c splitting."""
    out = [1]
    for _ in range(length - 1):
        out.append(out[-1] + int(rng.integers(1, max_step + 1)))
    return out


def space_from_r(r, dim: int) -> NormSpec:
    r = math.inf if r in ("inf", math.inf) else float(r)
    return NormSpec(r=r, dim=dim)
