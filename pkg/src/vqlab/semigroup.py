"""Symmetric diffusion semigroups from reversible chains, and Poisson kernels.

e^{tL} for L = Q - I (Q symmetric doubly stochastic) is evaluated through
the cached eigendecomposition of L, which keeps the semigroup law, the
derivative families t^m d^m/dt^m T_t and the continuous ergodic averages
exact up to roundoff.  The module also hosts the Poisson kernels on the
line and the circle, their summation identity, and the lacunary experiment
exhibiting the cotype obstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ergodic import MarkovOperator, StateFn
from .spaces import NormSpec, seq_lq
from .variation import TimeFamily, jump_count, variation_power_dp

GENERATOR_TOL = 1e-12


@dataclass
class DiffusionSemigroup:
    """Semigroup e^{tL} for a symmetric generator with zero row sums.

    L = Q - I for a symmetric stochastic Q keeps e^{tL} symmetric,
    entrywise nonnegative and row-stochastic for every t >= 0.
    """

    generator: np.ndarray
    eigenvalues: np.ndarray = field(init=False)
    eigenvectors: np.ndarray = field(init=False)

    def __post_init__(self):
        L = np.asarray(self.generator, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError(f"generator must be square, got {L.shape}")
        if np.abs(L - L.T).max() > GENERATOR_TOL:
            raise ValueError("generator must be symmetric")
        if np.abs(L.sum(axis=1)).max() > GENERATOR_TOL:
            raise ValueError("generator rows must sum to zero")
        off = L - np.diag(np.diag(L))
        if off.min() < -GENERATOR_TOL:
            raise ValueError("off-diagonal generator entries must be nonnegative")
        self.generator = L
        w, V = np.linalg.eigh(L)
        self.eigenvalues = w
        self.eigenvectors = V

    @classmethod
    def from_stochastic(cls, Q: MarkovOperator) -> "DiffusionSemigroup":
        if not Q.is_symmetric:
            raise ValueError("need a symmetric stochastic matrix")
        return cls(Q.matrix - np.eye(Q.K))

    @property
    def K(self) -> int:
        return self.generator.shape[0]

    @property
    def spectral_gap(self) -> float:
        """|largest nonzero eigenvalue| of L."""
        w = self.eigenvalues
        nonzero = w[np.abs(w) > 1e-10]
        return float(-nonzero.max()) if nonzero.size else 0.0

    def _propagate(self, factors: np.ndarray, values: np.ndarray) -> np.ndarray:
        V = self.eigenvectors
        return V @ (factors[:, None] * (V.T @ values))

    def matrix_at(self, t: float) -> np.ndarray:
        """Dense e^{tL}."""
        V = self.eigenvectors
        return (V * np.exp(t * self.eigenvalues)) @ V.T


def semigroup_apply(S: DiffusionSemigroup, t: float, f: StateFn) -> StateFn:
    """T_t f = e^{tL} f; t = 0 returns f."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if t == 0:
        return StateFn(f.values.copy(), f.space)
    return StateFn(S._propagate(np.exp(t * S.eigenvalues), f.values), f.space)


def derivative_family(S: DiffusionSemigroup, m: int, t: float, f: StateFn) -> StateFn:
    """t^m (d/dt)^m T_t f = t^m L^m e^{tL} f via eigenfactors."""
    if m < 0:
        raise ValueError(f"order must be nonnegative, got {m}")
    if m == 0:
        return semigroup_apply(S, t, f)
    if t <= 0:
        raise ValueError(f"derivative families need t > 0, got {t}")
    w = S.eigenvalues
    factors = (t * w) ** m * np.exp(t * w)
    return StateFn(S._propagate(factors, f.values), f.space)


def semigroup_stack(S: DiffusionSemigroup, times, f: StateFn) -> np.ndarray:
    """Stack (T_t f)_{t in times}, shape (n_t, K, dim)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("need at least one time")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    out = np.empty((times.size,) + f.values.shape)
    for i, t in enumerate(times):
        out[i] = semigroup_apply(S, float(t), f).values
    return out


def semigroup_variation(S: DiffusionSemigroup, f: StateFn, q: float, times) -> np.ndarray:
    """Per-state q-variation of (T_t f)_{t in times} (head term included)."""
    if not q > 2:
        raise ValueError(f"need q > 2, got {q}")
    stack = semigroup_stack(S, times, f)
    batch = np.moveaxis(stack, 0, 1)
    power = variation_power_dp(batch, f.space, q)
    return power ** (1.0 / q)


def jump_count_states(S: DiffusionSemigroup, f: StateFn, lam: float, times) -> np.ndarray:
    """Per-state lambda-jump count of t -> T_t f(w) along the time grid."""
    times = np.asarray(times, dtype=float)
    stack = semigroup_stack(S, times, f)
    out = np.empty(f.K, dtype=int)
    for w in range(f.K):
        fam = TimeFamily(times, stack[:, w, :], f.space)
        out[w] = jump_count(fam, lam)
    return out


def _pnorm(values: np.ndarray, p: float) -> float:
    return float((np.abs(values) ** p).mean() ** (1.0 / p))


def jump_estimate_ratio(S: DiffusionSemigroup, f: StateFn, q: float, p: float,
                        lam: float, times) -> float:
    """lambda |N(T_. f, lambda)^{1/q}|_p / |f|_p (normalized state measure)."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not q > 2:
        raise ValueError(f"need q > 2, got {q}")
    counts = jump_count_states(S, f, lam, times)
    denom = _pnorm(f.norms(), p)
    if denom == 0:
        raise ValueError("zero function")
    return lam * _pnorm(counts.astype(float) ** (1.0 / q), p) / denom


def mean_projection(S: DiffusionSemigroup, f: StateFn) -> StateFn:
    """Projection onto the null space of L; the t -> infinity limit of T_t f."""
    w = S.eigenvalues
    factors = (np.abs(w) <= 1e-10).astype(float)
    return StateFn(S._propagate(factors, f.values), f.space)


def convergence_rate_profile(S: DiffusionSemigroup, f: StateFn, p: float,
                             deltas, grid_points: int = 256) -> list[float]:
    """|sup_{t <= delta} |T_t f - f||_p for each delta, on a shared t-grid.

    The same global grid serves every delta, so the profile is monotone
    under shrinking delta by construction.
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0):
        raise ValueError("deltas must be positive")
    t_hi = float(deltas.max())
    t_lo = min(float(deltas.min()) / 64.0, t_hi / 1024.0)
    grid = np.unique(np.concatenate([
        np.geomspace(t_lo, t_hi, grid_points), deltas,
    ]))
    dev = np.empty((grid.size, f.K))
    for i, t in enumerate(grid):
        dev[i] = f.space.norms(semigroup_apply(S, float(t), f).values - f.values)
    out = []
    for d in deltas:
        sel = grid <= d
        out.append(_pnorm(dev[sel].max(axis=0), p))
    return out


def poisson_line(t: float, x: float) -> float:
    """Scaled Cauchy kernel P_t(x) = (1/t) (1/pi) (1 + (x/t)^2)^{-1}."""
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    return (1.0 / t) * (1.0 / math.pi) / (1.0 + (x / t) ** 2)


def poisson_circle(t: float, theta: float) -> float:
    """Circle Poisson kernel sum_n e^{-t|n|} e^{2 pi i n theta}, closed form."""
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    e = math.exp(-t)
    return (1.0 - e * e) / (1.0 - 2.0 * e * math.cos(2.0 * math.pi * theta) + e * e)


def poisson_circle_series(t: float, theta: float, N: int) -> float:
    """Truncated series sum_{|n| <= N} e^{-t|n|} e^{2 pi i n theta}."""
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    if N < 1:
        raise ValueError(f"need N >= 1, got {N}")
    n = np.arange(1, N + 1, dtype=float)
    return float(1.0 + 2.0 * (np.exp(-t * n) * np.cos(2.0 * math.pi * n * theta)).sum())


def poisson_summation_residual(t: float, x: float, N: int) -> float:
    """|P_circle(2 pi t, x) - sum_{|n| <= N} P_t(x + n)|.

    The Fourier transform of the scaled Cauchy kernel is e^{-2 pi t |xi|},
    so periodization of P_t matches the circle kernel at decay rate 2 pi t;
    the truncation tail decays like 1/N.
    """
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    if N < 1:
        raise ValueError(f"need N >= 1, got {N}")
    n = np.arange(-N, N + 1, dtype=float)
    partial = float(((1.0 / t) / math.pi / (1.0 + ((x + n) / t) ** 2)).sum())
    return abs(poisson_circle(2.0 * math.pi * t, x) - partial)


def lacunary_gap(i: int) -> float:
    """|e^{-t_i 2^i} - e^{-t_{i+1} 2^i}| for t_i = ln(1 + 1/(2^i - 1)).

    Both factors are powers of exact dyadic rationals: the gap equals
    (1 - 2^{-i-1})^{2^i} - (1 - 2^{-i})^{2^i} and converges (from above) to
    e^{-1/2} - e^{-1} = 0.23865121854...; at i = 1 it is exactly 0.3125.
    """
    if i < 1:
        raise ValueError(f"need i >= 1, got {i}")
    lo = ((2 ** i - 1) / 2 ** i) ** (2 ** i)
    hi = ((2 ** (i + 1) - 1) / 2 ** (i + 1)) ** (2 ** i)
    return abs(lo - hi)


LACUNARY_LIMIT = math.exp(-0.5) - math.exp(-1.0)


def cotype_necessity_ratio(space: NormSpec, q: float, K: int, signs) -> float:
    """Lacunary cotype ratio (sum_k |x_k|^q)^{1/q} / |f|_{L^q[0,1]}.

    f(theta) = sum_k signs_k e^{2 pi i 2^k theta} x_k with x_k the k-th
    standard basis vector; coordinatewise moduli feed the l^r norm, and the
    L^q norm is a Riemann sum on 2^{K+3} points (8x the top frequency).
    The ratio grows like K^{1/q - 1/r}, so it stays bounded exactly when
    the space has cotype q.
    """
    if not q >= 1:
        raise ValueError(f"need q >= 1, got {q}")
    signs = np.asarray(signs, dtype=float)
    if signs.shape != (K,) or not np.all(np.abs(signs) == 1.0):
        raise ValueError(f"need {K} signs of modulus one")
    if K > space.dim:
        raise ValueError(f"need K <= dim, got K={K}, dim={space.dim}")
    if K < 1:
        raise ValueError(f"need K >= 1, got {K}")
    M = 2 ** (K + 3)
    theta = np.arange(M) / M
    vals = np.zeros((M, space.dim), dtype=complex)
    for k in range(1, K + 1):
        vals[:, k - 1] = signs[k - 1] * np.exp(2j * math.pi * (2 ** k) * theta)
    norms = space.norms(vals)
    lq_mean = float((norms ** q).mean() ** (1.0 / q))
    numer = seq_lq(np.ones(K), q)
    return numer / lq_mean


def geometric_times(t_min: float, t_max: float, per_octave: int = 1) -> np.ndarray:
    """Geometric time grid covering [t_min, t_max] with 2^(1/per_octave) steps."""
    if not (0 < t_min < t_max):
        raise ValueError("need 0 < t_min < t_max")
    if per_octave < 1:
        raise ValueError("need at least one point per octave")
    n_octaves = math.log2(t_max / t_min)
    count = int(math.ceil(n_octaves * per_octave)) + 1
    return np.geomspace(t_min, t_max, count)
