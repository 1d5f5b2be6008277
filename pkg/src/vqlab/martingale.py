"""Dyadic martingales on a periodic grid.

The unit torus [0,1)^d is sampled at 2^J points per axis.  Level ell of the
filtration averages over dyadic cubes of side 2^ell grid points, so ell = 0
is the identity and ell = J the global mean.  On top of the conditional
expectations live the martingale cotype functional, the pointwise
martingale q-variation, the dyadic BMO norm and the Calderon-Zygmund
decomposition.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .spaces import NormSpec
from .variation import variation_power_dp


@dataclass(frozen=True)
class DyadicGrid:
    d: int
    J: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.J < 1:
            raise ValueError(f"depth must be >= 1, got {self.J}")

    @property
    def side(self) -> int:
        return 2 ** self.J

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def npoints(self) -> int:
        return self.side ** self.d


@dataclass
class GridFn:
    """B-valued function on a dyadic grid; values shape (N,)*d + (dim,)."""

    grid: DyadicGrid
    space: NormSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.shape + (self.space.dim,)
        if self.values.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {self.values.shape}")

    def norms(self) -> np.ndarray:
        """Pointwise B-norm field, shape (N,)*d."""
        return self.space.norms(self.values)

    def copy(self) -> "GridFn":
        return GridFn(self.grid, self.space, self.values.copy())


def _cube_mean(arr: np.ndarray, d: int, s: int) -> np.ndarray:
    """Mean over dyadic cubes of side s; arr shape (N,)*d (+ trailing axes)."""
    if s == 1:
        return arr
    N = arr.shape[0]
    tail = arr.shape[d:]
    newshape = []
    for _ in range(d):
        newshape.extend([N // s, s])
    v = arr.reshape(tuple(newshape) + tail)
    axes = tuple(2 * i + 1 for i in range(d))
    return v.mean(axis=axes)


def _cube_expand(arr: np.ndarray, d: int, s: int) -> np.ndarray:
    if s == 1:
        return arr
    out = arr
    for axis in range(d):
        out = np.repeat(out, s, axis=axis)
    return out


def cond_expect(f: GridFn, level: int) -> GridFn:
    """Conditional expectation onto dyadic cubes of side 2^level points."""
    if not (0 <= level <= f.grid.J):
        raise ValueError(f"level must lie in [0, {f.grid.J}], got {level}")
    s = 2 ** level
    avg = _cube_mean(f.values, f.grid.d, s)
    return GridFn(f.grid, f.space, _cube_expand(avg, f.grid.d, s))


def mart_diff(f: GridFn, level: int) -> GridFn:
    """Martingale difference E_{level-1} f - E_level f (level >= 1)."""
    if not (1 <= level <= f.grid.J):
        raise ValueError(f"level must lie in [1, {f.grid.J}], got {level}")
    fine = cond_expect(f, level - 1)
    coarse = cond_expect(f, level)
    return GridFn(f.grid, f.space, fine.values - coarse.values)


def cotype_functional(f: GridFn, q0: float) -> tuple[float, float]:
    """Martingale cotype functional (LHS, RHS) at exponent q0.

    LHS = mean |E_J f|^q0 + sum_ell mean |d_ell f|^q0, RHS = mean |f|^q0.
    In l^2 with q0 = 2 the two sides agree exactly (orthogonality of the
    martingale decomposition).
    """
    if q0 < 2:
        raise ValueError(f"cotype exponent must satisfy q0 >= 2, got {q0}")
    lhs = float((cond_expect(f, f.grid.J).norms() ** q0).mean())
    for level in range(1, f.grid.J + 1):
        lhs += float((mart_diff(f, level).norms() ** q0).mean())
    rhs = float((f.norms() ** q0).mean())
    return lhs, rhs


def martingale_sequence(f: GridFn) -> np.ndarray:
    """Stack (E_J f, E_{J-1} f, ..., E_0 f) with shape (J+1,)+grid+(dim,)."""
    levels = [cond_expect(f, level).values for level in range(f.grid.J, -1, -1)]
    return np.stack(levels, axis=0)


def mart_variation(f: GridFn, q: float) -> np.ndarray:
    """Pointwise q-variation of the martingale (E_J f(x), ..., E_0 f(x))."""
    seq = martingale_sequence(f)                      # (J+1, *grid, dim)
    npts = f.grid.npoints
    batch = np.moveaxis(seq.reshape(f.grid.J + 1, npts, f.space.dim), 0, 1)
    power = variation_power_dp(batch, f.space, q)
    return (power ** (1.0 / q)).reshape(f.grid.shape)


def _scalar_field(g) -> tuple[np.ndarray, int]:
    """Accept a scalar ndarray or a dim-1 GridFn; return (field, d)."""
    if isinstance(g, GridFn):
        if g.space.dim != 1:
            raise ValueError("dyadic BMO norm is defined for scalar functions")
        return g.values[..., 0], g.grid.d
    arr = np.asarray(g, dtype=float)
    return arr, arr.ndim


def _cubes_view(field: np.ndarray, d: int, s: int) -> np.ndarray:
    """Reshape a (N,)*d field into (ncubes, s^d) rows, one per dyadic cube."""
    N = field.shape[0]
    newshape = []
    for _ in range(d):
        newshape.extend([N // s, s])
    v = field.reshape(newshape)
    order = [2 * i for i in range(d)] + [2 * i + 1 for i in range(d)]
    v = np.transpose(v, order)
    return v.reshape((N // s) ** d, s ** d)


def dyadic_bmo_norm(g) -> float:
    """sup over dyadic cubes of the minimal mean absolute deviation.

    The inner infimum over constants is attained at a median; ties are
    broken toward the lower value so the result is deterministic.
    """
    field, d = _scalar_field(g)
    N = field.shape[0]
    J = int(round(math.log2(N)))
    best = 0.0
    for level in range(1, J + 1):
        s = 2 ** level
        rows = _cubes_view(field, d, s)
        cnt = rows.shape[1]
        srt = np.sort(rows, axis=1)
        med = srt[:, (cnt - 1) // 2]
        dev = np.abs(rows - med[:, None]).mean(axis=1)
        best = max(best, float(dev.max()))
    return best


def cube_maximal(field: np.ndarray) -> np.ndarray:
    """Uncentered maximal function over all axis-aligned cubes in the box.

    Cubes do not wrap; every side length 1..N and every position inside the
    fundamental domain is considered.  Used to check the stopping-time
    decomposition against the maximal-function sandwich.
    """
    field = np.asarray(field, dtype=float)
    d = field.ndim
    N = field.shape[0]
    out = field.copy()
    for s in range(2, N + 1):
        means = field
        for axis in range(d):
            means = _window_sums(np.cumsum(means, axis=axis), s, axis)
        means = means / float(s ** d)
        m = means
        for axis in range(d):
            m = _sliding_max(m, s, N, axis)
        out = np.maximum(out, m)
    return out


def _window_sums(cumsum: np.ndarray, s: int, axis: int) -> np.ndarray:
    """Sums over length-s windows from a cumulative sum along one axis."""
    L = cumsum.shape[axis]
    upper = np.take(cumsum, range(s - 1, L), axis=axis)
    lower = np.take(cumsum, range(0, L - s + 1), axis=axis)
    first = np.take(upper, [0], axis=axis)
    rest = np.take(upper, range(1, upper.shape[axis]), axis=axis) - \
        np.take(lower, range(0, lower.shape[axis] - 1), axis=axis)
    return np.concatenate([first, rest], axis=axis)


def _sliding_max(arr: np.ndarray, w: int, out_len: int, axis: int) -> np.ndarray:
    """out[x] = max over c in [x-w+1, x] (clipped to valid corners) of arr[c].

    Standard two-pass prefix/suffix block maxima, vectorized along ``axis``;
    corners beyond the array are treated as -inf.
    """
    arr = np.moveaxis(arr, axis, -1)
    L = arr.shape[-1]
    pad_shape = arr.shape[:-1]
    neg = np.full(pad_shape + (w - 1,), -np.inf)
    raw = w - 1 + L
    needed = max(raw, out_len + w - 1)
    tail_len = needed - raw + (-needed) % w
    tail = np.full(pad_shape + (tail_len,), -np.inf)
    p = np.concatenate([neg, arr, tail], axis=-1)
    nblocks = p.shape[-1] // w
    blocks = p.reshape(pad_shape + (nblocks, w))
    prefix = np.maximum.accumulate(blocks, axis=-1).reshape(pad_shape + (nblocks * w,))
    suffix = np.maximum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1]
    suffix = suffix.reshape(pad_shape + (nblocks * w,))
    idx = np.arange(out_len)
    res = np.maximum(suffix[..., idx], prefix[..., idx + w - 1])
    return np.moveaxis(res, -1, axis)


@dataclass
class CZParts:
    """Output of the stopping-time decomposition f = good + sum(bad)."""

    lam: float
    cubes: list[tuple[int, tuple[int, ...]]]
    good: GridFn
    bad: list[GridFn]

    @property
    def omega_mask(self) -> np.ndarray:
        mask = np.zeros(self.good.grid.shape, dtype=bool)
        for level, corner in self.cubes:
            s = 2 ** level
            sl = tuple(slice(c, c + s) for c in corner)
            mask[sl] = True
        return mask


def cz_decompose(f: GridFn, lam: float) -> CZParts:
    """Calderon-Zygmund decomposition of f at threshold lam.

    Descends the dyadic tree from the root and selects a maximal cube the
    first time the average of |f| exceeds lam.  Requires lam >= the root
    average so the root itself is never selected (otherwise the selected
    cubes would have no parent to bound their averages).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    d, J = f.grid.d, f.grid.J
    normf = f.norms()
    root_avg = float(normf.mean())
    if root_avg > lam:
        raise ValueError(
            f"threshold {lam} is below the root average {root_avg}; "
            "the stopping time would select the whole grid"
        )

    anc_max = np.full(f.grid.shape, root_avg)
    cubes: list[tuple[int, tuple[int, ...]]] = []
    for level in range(J - 1, -1, -1):
        s = 2 ** level
        avg = _cube_expand(_cube_mean(normf, d, s), d, s)
        selected = (avg > lam) & (anc_max <= lam)
        if selected.any():
            corners = np.argwhere(selected)
            corners = corners[(corners % s == 0).all(axis=1)]
            cubes.extend((level, tuple(int(c) for c in corner)) for corner in corners)
        anc_max = np.maximum(anc_max, avg)

    good_values = f.values.copy()
    bad: list[GridFn] = []
    for level, corner in cubes:
        s = 2 ** level
        sl = tuple(slice(c, c + s) for c in corner)
        cube_avg = f.values[sl].mean(axis=tuple(range(d)))
        good_values[sl] = cube_avg
        b_values = np.zeros_like(f.values)
        b_values[sl] = f.values[sl] - cube_avg
        bad.append(GridFn(f.grid, f.space, b_values))
    return CZParts(lam=lam, cubes=cubes, good=GridFn(f.grid, f.space, good_values), bad=bad)


def cz_check_properties(f: GridFn, parts: CZParts, p_values=(1.0, 2.0, 4.0),
                        tol: float = 1e-12) -> dict[str, bool]:
    """Check the six decomposition properties at machine tolerance.

    (i)   |f| <= lam off Omega;
    (ii)  lam < avg_Q |f| <= 2^d lam on every selected cube;
    (iii) Omega inside {M|f| > lam} and {M|f| > 4^d lam} inside Omega*,
          for the uncentered cube maximal function;
    (iv)  f = g + sum b_i;
    (v)   |g| <= 2^d lam and mean |g|^p <= 2^{d(p-1)} lam^{p-1} mean |f|;
    (vi)  each b_i has zero mean and avg_{Q_i} |b_i| <= 2^{d+1} lam.
    """
    d = f.grid.d
    lam = parts.lam
    normf = f.norms()
    scale = max(float(normf.max()), 1.0)
    om = parts.omega_mask
    out: dict[str, bool] = {}
    out["i"] = bool((normf[~om] <= lam + tol * scale).all()) if (~om).any() else True
    ok_ii = True
    ok_vi = True
    for (level, corner), b in zip(parts.cubes, parts.bad):
        s = 2 ** level
        sl = tuple(slice(c, c + s) for c in corner)
        avg = float(normf[sl].mean())
        ok_ii &= lam < avg <= 2 ** d * lam + tol * scale
        ok_vi &= float(np.abs(b.values.mean(axis=tuple(range(d)))).max()) <= tol * scale
        ok_vi &= float(b.norms()[sl].mean()) <= 2 ** (d + 1) * lam + tol * scale
    out["ii"] = ok_ii
    maximal = cube_maximal(normf)
    first = bool((maximal[om] > lam).all()) if om.any() else True
    high = maximal > 4 ** d * lam
    second = bool(dilated_mask(parts)[high].all()) if high.any() else True
    out["iii"] = first and second
    recon = parts.good.values + (sum(b.values for b in parts.bad) if parts.bad else 0.0)
    out["iv"] = bool(np.abs(recon - f.values).max() <= tol * scale)
    ok_v = bool((parts.good.norms() <= 2 ** d * lam + tol * scale).all())
    for p in p_values:
        lhs = float((parts.good.norms() ** p).mean())
        rhs = 2.0 ** (d * (p - 1)) * lam ** (p - 1) * float(normf.mean())
        ok_v &= lhs <= rhs * (1 + tol) + tol
    out["v"] = ok_v
    out["vi"] = ok_vi
    return out


def dilated_mask(parts: CZParts) -> np.ndarray:
    """Union of the concentric 3x dilations of the selected cubes (torus)."""
    grid = parts.good.grid
    mask = np.zeros(grid.shape, dtype=bool)
    N = grid.side
    for level, corner in parts.cubes:
        s = 2 ** level
        idx = [ (np.arange(c - s, c + 2 * s) % N) for c in corner ]
        mask[np.ix_(*idx)] = True
    return mask


def save_grid_fn(f: GridFn, path) -> None:
    """Text fixture: header "d J m r", then one row-major line per point."""
    with open(path, "w") as fh:
        fh.write(dump_grid_fn(f))


def dump_grid_fn(f: GridFn) -> str:
    buf = io.StringIO()
    r = "inf" if math.isinf(f.space.r) else repr(f.space.r)
    buf.write(f"{f.grid.d} {f.grid.J} {f.space.dim} {r}\n")
    flat = f.values.reshape(-1, f.space.dim)
    for row in flat:
        buf.write(" ".join(repr(float(x)) for x in row))
        buf.write("\n")
    return buf.getvalue()


def load_grid_fn(source) -> GridFn:
    """Inverse of :func:`save_grid_fn`; accepts a path or fixture text."""
    if isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source) as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"malformed header {lines[0]!r}; expected 'd J m r'")
    d, J, m = int(head[0]), int(head[1]), int(head[2])
    r = math.inf if head[3] == "inf" else float(head[3])
    grid = DyadicGrid(d=d, J=J)
    space = NormSpec(r=r, dim=m)
    rows = lines[1:]
    if len(rows) != grid.npoints:
        raise ValueError(f"expected {grid.npoints} value lines, got {len(rows)}")
    vals = np.array([[float(x) for x in ln.split()] for ln in rows])
    if vals.shape[1] != m:
        raise ValueError(f"expected {m} coordinates per line")
    return GridFn(grid, space, vals.reshape(grid.shape + (m,)))
