"""Ball and cube averaging operators on the periodic grid.

A_t averages a grid function over the lattice offsets y with |y| < t (strict,
Euclidean for balls, max-norm for cubes), taken modulo the torus.  A_t is
piecewise constant in t, so the full variation over all real radii is
realized exactly on the finite set of change points.  On top of A_t live the
pointwise q-variation, the short/long variation splitting, the master
decomposition residual and the weak-type / BMO / pointwise probes.
"""

from __future__ import annotations

import math

import numpy as np

from .martingale import GridFn, cond_expect, dyadic_bmo_norm, mart_diff, mart_variation
from .spaces import seq_lq
from .variation import TimeFamily, jump_count, variation_power_dp

SHAPES = ("ball", "cube")


def _check_shape(shape: str) -> str:
    if shape not in SHAPES:
        raise ValueError(f"kernel shape must be one of {SHAPES}, got {shape!r}")
    return shape


def _offsets_mask(grid, t: float, shape: str) -> np.ndarray:
    """Indicator of {y : |y| < t} on the torus, origin at index 0."""
    N = grid.side
    axis = np.arange(N, dtype=float)
    axis = np.minimum(axis, N - axis)       # distance to 0 along one axis
    if grid.d == 1:
        dist = axis
    else:
        grids = np.meshgrid(*([axis] * grid.d), indexing="ij")
        stacked = np.stack(grids, axis=0)
        if shape == "cube":
            dist = stacked.max(axis=0)
        else:
            dist = np.sqrt((stacked ** 2).sum(axis=0))
    return dist < t


def average_field(field: np.ndarray, grid, t: float, shape: str = "ball") -> np.ndarray:
    """A_t applied to a plain array whose leading axes are the grid axes."""
    _check_shape(shape)
    if not (0 < t <= grid.side / 2):
        raise ValueError(f"radius must lie in (0, {grid.side / 2}], got {t}")
    if grid.d == 1:
        k = math.ceil(t) - 1
        if k == 0:
            return field.copy()
        N = grid.side
        tail = field.shape[1:]
        padded = np.concatenate([field[-k:], field, field[:k]], axis=0)
        csum = np.cumsum(padded, axis=0, dtype=float)
        zero = np.zeros((1,) + tail)
        csum = np.concatenate([zero, csum], axis=0)
        window = csum[2 * k + 1 :] - csum[: N]
        return window / (2 * k + 1)
    mask = _offsets_mask(grid, t, shape)
    count = int(mask.sum())
    if count == 1:
        return field.copy()
    axes = tuple(range(grid.d))
    mh = np.conj(np.fft.fftn(mask.astype(float), axes=axes))
    tail_axes = field.ndim - grid.d
    fh = np.fft.fftn(field, axes=axes)
    mh_b = mh.reshape(mh.shape + (1,) * tail_axes)
    out = np.fft.ifftn(fh * mh_b, axes=axes).real
    return out / count


def ball_average(f: GridFn, t: float, shape: str = "ball") -> GridFn:
    """A_t f, the mean of f over the discrete ball/cube of radius t."""
    return GridFn(f.grid, f.space, average_field(f.values, f.grid, t, shape))


def full_radii(grid, shape: str = "ball") -> np.ndarray:
    """All change points of t -> A_t up to the torus half-side.

    In one dimension these are the integers 1..N/2; in higher dimensions the
    distinct offset lengths, each shifted up to the next distance so the
    corresponding ball is actually realized by a radius <= N/2.
    """
    _check_shape(shape)
    cap = grid.side / 2
    if grid.d == 1:
        return np.arange(1, int(cap) + 1, dtype=float)
    N = grid.side
    axis = np.arange(N, dtype=float)
    axis = np.minimum(axis, N - axis)
    grids = np.meshgrid(*([axis] * grid.d), indexing="ij")
    stacked = np.stack(grids, axis=0)
    dist = stacked.max(axis=0) if shape == "cube" else np.sqrt((stacked ** 2).sum(axis=0))
    levels = np.unique(dist)
    radii = []
    for lo, hi in zip(levels[:-1], levels[1:]):
        t = (lo + hi) / 2.0
        if t <= cap:
            radii.append(t)
    if levels[-1] < cap:
        radii.append(cap)
    return np.asarray(radii)


def averages_stack(f: GridFn, radii, shape: str = "ball") -> np.ndarray:
    """Stack of A_t f over t in radii; shape (n_radii,) + grid + (dim,)."""
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("need at least one radius")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    return np.stack([average_field(f.values, f.grid, float(t), shape) for t in radii])


def _pointwise_variation(stack: np.ndarray, f: GridFn, q: float, head: bool,
                         chunk: int = 4096) -> np.ndarray:
    """Per-point variation power of a (n_t,)+grid+(dim,) stack of averages."""
    n_t = stack.shape[0]
    npts = f.grid.npoints
    flat = np.moveaxis(stack.reshape(n_t, npts, f.space.dim), 0, 1)
    out = np.empty(npts)
    for lo in range(0, npts, chunk):
        hi = min(npts, lo + chunk)
        out[lo:hi] = variation_power_dp(flat[lo:hi], f.space, q, head=head)
    return out.reshape(f.grid.shape)


def vq_of_averages(f: GridFn, q: float, radii, shape: str = "ball") -> np.ndarray:
    """Pointwise q-variation of (A_t f(x))_{t in radii}, head term included.

    Over the full change-point radii this is exactly the discrete variation
    operator of the averaging family.
    """
    if not q > 1:
        raise ValueError(f"variation exponent must exceed 1, got {q}")
    stack = averages_stack(f, radii, shape)
    return _pointwise_variation(stack, f, q, head=True) ** (1.0 / q)


def short_variation(f: GridFn, q0: float, radii, shape: str = "ball") -> np.ndarray:
    """Pointwise short variation: per-block difference variation, l^q0-summed.

    Inside each dyadic block (2^k, 2^{k+1}] the supremum runs over chains of
    radii in the closed block [2^k, 2^{k+1}]; the block endpoints are always
    offered as chain elements (the continuous supremum allows them), capped
    at the admissible radius N/2.
    """
    if q0 < 2:
        raise ValueError(f"short variation exponent must satisfy q0 >= 2, got {q0}")
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("need at least one radius")
    cap = f.grid.side / 2
    k_lo = math.floor(math.log2(radii.min())) - 1
    k_hi = math.ceil(math.log2(radii.max())) + 1
    total = np.zeros(f.grid.shape)
    for k in range(k_lo, k_hi + 1):
        lo, hi = 2.0 ** k, 2.0 ** (k + 1)
        cand = [t for t in radii if lo <= t <= hi]
        for endpoint in (lo, hi):
            if endpoint <= cap:
                cand.append(endpoint)
        cand = sorted(set(cand))
        if len(cand) < 2:
            continue
        stack = averages_stack(f, np.asarray(cand), shape)
        total += _pointwise_variation(stack, f, q0, head=False)
    return total ** (1.0 / q0)


def long_variation(f: GridFn, q0: float, shape: str = "ball") -> np.ndarray:
    """Pointwise l^q0 sum of |A_{2^k} f - E_k f| over k = 0..J-1.

    The dyadic radius 2^k is paired with the filtration level whose cubes
    have side 2^k grid points.
    """
    if q0 < 2:
        raise ValueError(f"long variation exponent must satisfy q0 >= 2, got {q0}")
    total = np.zeros(f.grid.shape)
    for k in range(f.grid.J):
        a = average_field(f.values, f.grid, 2.0 ** k, shape)
        e = cond_expect(f, k).values
        total += f.space.norms(a - e) ** q0
    return total ** (1.0 / q0)


def master_decomposition_check(f: GridFn, q: float, q0: float, radii,
                               shape: str = "ball") -> np.ndarray:
    """Pointwise residual max(0, V_q - 3 (SV_q0 + LV_q0 + martingale V_q)).

    Zero everywhere: every variation chain splits into short pieces, long
    power-of-two pieces and a martingale chain, with at most a factor 3.
    """
    if not q > q0:
        raise ValueError(f"need q > q0, got q={q}, q0={q0}")
    v = vq_of_averages(f, q, radii, shape)
    sv = short_variation(f, q0, radii, shape)
    lv = long_variation(f, q0, shape)
    mv = mart_variation(f, q)
    return np.maximum(0.0, v - 3.0 * (sv + lv + mv))


def probe_pointwise_LV(f: GridFn, k: int, n: int, q0: float) -> float:
    """Empirical constant for |A_{2^k} d_n|^q0 <= C 2^{n-k} A_{2^k}(|d_n|^q0).

    Returns the sup over grid points of the left/right ratio, with 0/0 read
    as 0.  Requires 1 <= n <= k <= J-1.
    """
    if not (1 <= n <= k <= f.grid.J - 1):
        raise ValueError(f"need 1 <= n <= k <= J-1, got n={n}, k={k}, J={f.grid.J}")
    d_n = mart_diff(f, n)
    num = f.space.norms(average_field(d_n.values, f.grid, 2.0 ** k, "ball")) ** q0
    den = 2.0 ** (n - k) * average_field(d_n.norms() ** q0, f.grid, 2.0 ** k, "ball")
    ratio = np.zeros_like(num)
    nz = den > 0
    ratio[nz] = num[nz] / den[nz]
    return float(ratio.max())


def weak11_ratio(f: GridFn, q: float, radii, shape: str, lam: float) -> float:
    """lambda |{V_q(A) f > lambda}| / mean |f| with normalized measure."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    v = vq_of_averages(f, q, radii, shape)
    measure = float((v > lam).mean())
    denom = float(f.norms().mean())
    if denom == 0:
        raise ValueError("zero function")
    return lam * measure / denom


def bmo_ratio(f: GridFn, q: float, radii, shape: str = "ball") -> float:
    """Dyadic BMO norm of the variation function over the sup norm of f."""
    sup = float(f.norms().max())
    if sup == 0:
        raise ValueError("zero function")
    v = vq_of_averages(f, q, radii, shape)
    return dyadic_bmo_norm(v) / sup


def one_sided_avg(f: GridFn, n: int) -> GridFn:
    """One-sided average (1/(n+1)) sum_{k=0..n} f(j - k) on a 1-d torus."""
    if f.grid.d != 1:
        raise ValueError("one-sided averages are defined in one dimension")
    N = f.grid.side
    if not (0 <= n < N):
        raise ValueError(f"window length must lie in [0, {N - 1}], got {n}")
    if n == 0:
        return f.copy()
    padded = np.concatenate([f.values[-n:], f.values], axis=0)
    csum = np.cumsum(padded, axis=0, dtype=float)
    zero = np.zeros((1, f.space.dim))
    csum = np.concatenate([zero, csum], axis=0)
    window = csum[n + 1 :] - csum[: N]
    return GridFn(f.grid, f.space, window / (n + 1))


def young_convolution_residual(sigma, b, q0: float) -> float:
    """|sigma|_1 |b|_q0 - |sigma * b|_q0, nonnegative by Young's inequality."""
    sigma = np.asarray(sigma, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(sigma < 0) or np.any(b < 0):
        raise ValueError("sequences must be nonnegative")
    if sigma.size == 0 or b.size == 0:
        return 0.0
    conv = np.convolve(sigma, b)
    return seq_lq(sigma, 1.0) * seq_lq(b, q0) - seq_lq(conv, q0)


def jump_count_field(f: GridFn, radii, lam: float, shape: str = "ball") -> np.ndarray:
    """Pointwise lambda-jump count of (A_t f(x))_{t in radii}."""
    radii = np.asarray(radii, dtype=float)
    stack = averages_stack(f, radii, shape)
    npts = f.grid.npoints
    flat = np.moveaxis(stack.reshape(len(radii), npts, f.space.dim), 0, 1)
    out = np.empty(npts, dtype=int)
    for p in range(npts):
        fam = TimeFamily(radii, flat[p], f.space)
        out[p] = jump_count(fam, lam)
    return out.reshape(f.grid.shape)
