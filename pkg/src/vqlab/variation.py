"""q-variation seminorms, lambda-jump counts and dyadic interval splitting.

The exact variation norm is computed by an O(n^2) dynamic program; both it
and the greedy jump counter come with deliberately naive brute-force oracles
used throughout the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spaces import NormSpec

BRUTEFORCE_VQ_LIMIT = 18
BRUTEFORCE_JUMP_LIMIT = 14


@dataclass
class TimeFamily:
    """A finite family (t_i, a_i) with strictly increasing positive times.

    ``values`` has shape (n, space.dim); row i is the vector observed at
    ``times[i]``.
    """

    times: np.ndarray
    values: np.ndarray
    space: NormSpec

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("need at least one (time, vector) entry")
        if np.any(self.times <= 0):
            raise ValueError("times must be positive")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.values.shape != (self.times.size, self.space.dim):
            raise ValueError(
                f"values must have shape ({self.times.size}, {self.space.dim}), "
                f"got {self.values.shape}"
            )

    def __len__(self) -> int:
        return int(self.times.size)

    @classmethod
    def from_scalars(cls, values, times=None) -> "TimeFamily":
        values = np.asarray(values, dtype=float).reshape(-1, 1)
        if times is None:
            times = np.arange(1, len(values) + 1, dtype=float)
        return cls(times=np.asarray(times, dtype=float), values=values,
                   space=NormSpec(r=2.0, dim=1))


def variation_power_dp(values: np.ndarray, space: NormSpec, q: float,
                       head: bool = True) -> np.ndarray:
    """Best q-th-power variation sum over increasing subsequences, batched.

    Parameters
    ----------
    values : array of shape (..., n, dim)
        One vector sequence per batch entry.
    q : exponent in [1, inf)
    head : include the ``|a_{i_0}|^q`` term of the first chosen element.
        With ``head=False`` only successive differences are summed (the
        per-block short-variation convention).

    Returns
    -------
    array of shape (...,) holding max over nonempty increasing subsequences
    of head^q + sum of gap^q (in power space, no final 1/q root).
    """
    if not (1.0 <= q < math.inf):
        raise ValueError(f"variation exponent must satisfy 1 <= q < inf, got {q}")
    values = np.asarray(values, dtype=float)
    n = values.shape[-2]
    batch_shape = values.shape[:-2]
    flat = values.reshape((-1, n, space.dim))
    if head:
        headq = space.norms(flat) ** q
    else:
        headq = np.zeros(flat.shape[:2])
    best = np.empty_like(headq)
    best[:, 0] = headq[:, 0]
    for j in range(1, n):
        gapq = space.norms(flat[:, :j, :] - flat[:, j : j + 1, :]) ** q
        cand = (best[:, :j] + gapq).max(axis=1)
        best[:, j] = np.maximum(headq[:, j], cand)
    return best.max(axis=1).reshape(batch_shape)


def vq_norm_exact(fam: TimeFamily, q: float) -> float:
    """Exact q-variation norm of a time family via dynamic programming."""
    power = variation_power_dp(fam.values[None, :, :], fam.space, q)[0]
    return float(power ** (1.0 / q))


def vq_norm_bruteforce(fam: TimeFamily, q: float) -> float:
    """Oracle: exhaustive maximum over all 2^n - 1 nonempty subsequences."""
    n = len(fam)
    if n > BRUTEFORCE_VQ_LIMIT:
        raise ValueError(f"brute force limited to {BRUTEFORCE_VQ_LIMIT} entries, got {n}")
    if not (1.0 <= q < math.inf):
        raise ValueError(f"variation exponent must satisfy 1 <= q < inf, got {q}")
    headq = (fam.space.norms(fam.values) ** q).tolist()
    diff = fam.values[None, :, :] - fam.values[:, None, :]
    gapq = (fam.space.norms(diff) ** q).tolist()
    best = 0.0
    # depth-first walk over all increasing subsequences, one node each
    stack = [(i, headq[i]) for i in range(n)]
    while stack:
        last, acc = stack.pop()
        if acc > best:
            best = acc
        for j in range(last + 1, n):
            stack.append((j, acc + gapq[last][j]))
    return best ** (1.0 / q)


def _gap_norm_matrix(fam: TimeFamily) -> np.ndarray:
    diff = fam.values[None, :, :] - fam.values[:, None, :]
    return fam.space.norms(diff)


def jump_count(fam: TimeFamily, lam: float) -> int:
    """Greedy lambda-jump count N(a, lambda).

    Counts the longest chain s_1 < t_1 <= s_2 < t_2 <= ... with
    |a_{t_k} - a_{s_k}| > lambda (strict), by repeatedly taking the pair
    with the earliest completion index.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    dist = _gap_norm_matrix(fam)
    n = len(fam)
    start = 0
    count = 0
    while True:
        hit = -1
        for t in range(start + 1, n):
            if dist[start:t, t].max() > lam:
                hit = t
                break
        if hit < 0:
            break
        count += 1
        start = hit
    return count


def jump_count_bruteforce(fam: TimeFamily, lam: float) -> int:
    """Oracle: exhaustive recursion over every chained pair system."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    n = len(fam)
    if n > BRUTEFORCE_JUMP_LIMIT:
        raise ValueError(f"brute force limited to {BRUTEFORCE_JUMP_LIMIT} entries, got {n}")
    dist = _gap_norm_matrix(fam)
    memo: dict[int, int] = {}

    def best_from(start: int) -> int:
        if start in memo:
            return memo[start]
        best = 0
        for s in range(start, n):
            for t in range(s + 1, n):
                if dist[s, t] > lam:
                    best = max(best, 1 + best_from(t))
        memo[start] = best
        return best

    return best_from(0)


def jump_variation_gap(fam: TimeFamily, lam: float, q: float) -> float:
    """v_q(a)^q - lambda^q N(a, lambda); nonnegative for every family."""
    return vq_norm_exact(fam, q) ** q - lam ** q * jump_count(fam, lam)


@dataclass
class IntervalSplit:
    """Partition intervals sorted into short (dyadic-block) and long pieces.

    ``short_by_block[k]`` holds the half-open pieces (u, v] contained in the
    dyadic block (2^k, 2^{k+1}]; ``long`` holds pieces whose endpoints are
    exact powers of two, stored as (2^m, 2^n] with the exponents alongside.
    """

    short_by_block: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    long: list[tuple[float, float]] = field(default_factory=list)
    long_exponents: list[tuple[int, int]] = field(default_factory=list)

    def all_intervals(self) -> list[tuple[float, float]]:
        out: list[tuple[float, float]] = []
        for pieces in self.short_by_block.values():
            out.extend(pieces)
        out.extend(self.long)
        return sorted(out)


def _powers_of_two_in(a: float, b: float) -> list[int]:
    """Integers k with a < 2^k <= b."""
    lo = math.floor(math.log2(a)) - 1
    hi = math.floor(math.log2(b)) + 1
    return [k for k in range(lo, hi + 1) if a < 2.0 ** k <= b]


def _block_of(a: float) -> int:
    """Largest k with 2^k <= a."""
    k = math.floor(math.log2(a))
    while 2.0 ** (k + 1) <= a:
        k += 1
    while 2.0 ** k > a:
        k -= 1
    return k


def split_intervals(times) -> IntervalSplit:
    """Split the partition (t_i, t_{i+1}] into short and long families.

    An interval containing no power of two is short and lives inside a
    single dyadic block.  Otherwise it is cut at the extreme powers of two
    it contains: the two outer pieces are short, the middle (when the
    extreme powers differ) is a long interval with power-of-two endpoints.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two times")
    if np.any(times <= 0):
        raise ValueError("times must be positive")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")

    split = IntervalSplit()

    def add_short(u: float, v: float):
        if u == v:
            return
        k = _block_of(u)
        split.short_by_block.setdefault(k, []).append((u, v))

    for a, b in zip(times[:-1], times[1:]):
        powers = _powers_of_two_in(a, b)
        if not powers:
            add_short(a, b)
            continue
        m_i, n_i = powers[0], powers[-1]
        add_short(a, 2.0 ** m_i)
        add_short(2.0 ** n_i, b)
        if m_i < n_i:
            split.long.append((2.0 ** m_i, 2.0 ** n_i))
            split.long_exponents.append((m_i, n_i))
    return split
