"""Ergodic and fractional averages of finite Markov operators.

Contractively regular operators are modeled by row-stochastic matrices on a
finite state space with normalized counting measure.  The module provides
m-fold difference operators, Cesaro-type fractional averages, the exact
decomposition identities behind the variation estimates for powers, the
Lambda_j combinatorics and the Littlewood-Paley square function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .spaces import NormSpec
from .variation import TimeFamily, variation_power_dp, vq_norm_exact

STOCHASTIC_TOL = 1e-12


@dataclass
class MarkovOperator:
    """Row-stochastic nonnegative matrix acting on functions of K states."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"matrix must be square, got shape {self.matrix.shape}")
        if np.any(self.matrix < -STOCHASTIC_TOL):
            raise ValueError("matrix entries must be nonnegative")
        rows = self.matrix.sum(axis=1)
        if np.abs(rows - 1.0).max() > STOCHASTIC_TOL:
            raise ValueError(f"rows must sum to 1 within {STOCHASTIC_TOL}")

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_symmetric(self) -> bool:
        return bool(np.abs(self.matrix - self.matrix.T).max() <= STOCHASTIC_TOL)

    @property
    def is_doubly_stochastic(self) -> bool:
        return bool(np.abs(self.matrix.sum(axis=0) - 1.0).max() <= STOCHASTIC_TOL)


@dataclass
class StateFn:
    """B-valued function on the K states; values shape (K, dim)."""

    values: np.ndarray
    space: NormSpec

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2 or self.values.shape[1] != self.space.dim:
            raise ValueError(f"values must have shape (K, {self.space.dim})")

    @property
    def K(self) -> int:
        return self.values.shape[0]

    def norms(self) -> np.ndarray:
        return self.space.norms(self.values)


def save_markov(T: MarkovOperator, path) -> None:
    """Fixture: header "K flags" then K rows of K decimals."""
    flags = []
    if T.is_symmetric:
        flags.append("symmetric")
    if T.is_doubly_stochastic:
        flags.append("doubly_stochastic")
    with open(path, "w") as fh:
        fh.write(f"{T.K} {','.join(flags) if flags else '-'}\n")
        for row in T.matrix:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_markov(path) -> MarkovOperator:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"malformed header {lines[0]!r}; expected 'K flags'")
    K = int(head[0])
    declared = set() if head[1] == "-" else set(head[1].split(","))
    unknown = declared - {"symmetric", "doubly_stochastic"}
    if unknown:
        raise ValueError(f"unknown flags {sorted(unknown)}")
    rows = [[float(x) for x in ln.split()] for ln in lines[1 : K + 1]]
    if len(rows) != K or any(len(r) != K for r in rows):
        raise ValueError(f"expected {K} rows of {K} entries")
    T = MarkovOperator(np.array(rows))
    if "symmetric" in declared and not T.is_symmetric:
        raise ValueError("matrix does not satisfy its declared symmetric flag")
    if "doubly_stochastic" in declared and not T.is_doubly_stochastic:
        raise ValueError("matrix does not satisfy its declared doubly_stochastic flag")
    return T


def apply(T: MarkovOperator, f: StateFn) -> StateFn:
    if f.K != T.K:
        raise ValueError(f"state count mismatch: operator {T.K}, function {f.K}")
    return StateFn(T.matrix @ f.values, f.space)


def orbit(T: MarkovOperator, values: np.ndarray, n_max: int) -> np.ndarray:
    """Stack (T^j v)_{j=0..n_max}, built by iterated application."""
    out = np.empty((n_max + 1,) + values.shape, dtype=values.dtype)
    out[0] = values
    cur = values
    for j in range(1, n_max + 1):
        cur = T.matrix @ cur
        out[j] = cur
    return out


def ergodic_avg(T: MarkovOperator, n: int, f: StateFn) -> StateFn:
    """M_n(T) f = (1/(n+1)) sum_{k=0..n} T^k f."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    acc = f.values.copy()
    cur = f.values
    for _ in range(n):
        cur = T.matrix @ cur
        acc += cur
    return StateFn(acc / (n + 1), f.space)


def ergodic_avg_continuous(Q: MarkovOperator, t: float, f: StateFn) -> StateFn:
    """M_t f = (1/t) int_0^t e^{rL} f dr for the generator L = Q - I.

    Evaluated exactly through the eigendecomposition of the symmetric L:
    the eigencomponent at mu scales by (e^{t mu} - 1)/(t mu), by 1 at mu = 0.
    """
    if not Q.is_symmetric:
        raise ValueError("continuous averages require a symmetric generator")
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    L = Q.matrix - np.eye(Q.K)
    w, V = np.linalg.eigh(L)
    coeff = V.T @ f.values
    factors = np.ones_like(w)
    nz = np.abs(w) > 1e-14
    factors[nz] = (np.exp(t * w[nz]) - 1.0) / (t * w[nz])
    return StateFn(V @ (factors[:, None] * coeff), f.space)


def delta_mn(T: MarkovOperator, m: int, n: int, f: StateFn) -> StateFn:
    """The m-fold difference T^n (T - I)^m f, by iterated differencing."""
    if m < 0 or n < 0:
        raise ValueError("orders must be nonnegative")
    g = f.values
    for _ in range(m):
        g = T.matrix @ g - g
    for _ in range(n):
        g = T.matrix @ g
    return StateFn(g, f.space)


def frac_coeff(alpha, n: int):
    """Cesaro coefficient A^alpha_n = (alpha+1)...(alpha+n)/n! by recurrence."""
    if n < 0:
        raise ValueError(f"index must be nonnegative, got {n}")
    a = complex(alpha)
    real = a.imag == 0.0
    acc = 1.0 + 0.0j
    for k in range(1, n + 1):
        acc = acc * (a + k) / k
    return acc.real if real else acc


def _frac_coeffs(alpha, n: int) -> np.ndarray:
    a = complex(alpha)
    out = np.empty(n + 1, dtype=complex)
    out[0] = 1.0
    for k in range(1, n + 1):
        out[k] = out[k - 1] * (a + k) / k
    if a.imag == 0.0:
        return out.real
    return out


def frac_sum(T: MarkovOperator, alpha, n: int, f: StateFn) -> StateFn:
    """S^alpha_n f = sum_{k=0..n} A^{alpha-1}_{n-k} T^k f."""
    coeffs = _frac_coeffs(complex(alpha) - 1.0, n)
    powers = orbit(T, f.values, n)
    weights = coeffs[::-1]          # index k carries A^{alpha-1}_{n-k}
    acc = np.tensordot(weights, powers, axes=(0, 0))
    return StateFn(acc, f.space)


def frac_average(T: MarkovOperator, alpha, n: int, f: StateFn) -> StateFn:
    """M^alpha_n f = (n+1)^{-alpha} S^alpha_n f (principal branch power).

    M^0_n recovers T^n, M^1_n the ergodic average; at negative integers the
    sum collapses onto the shifted difference S^{-m}_n = Delta^m_{n-m}.
    """
    s = frac_sum(T, alpha, n, f)
    a = complex(alpha)
    if a.imag == 0.0:
        scale = float(n + 1) ** (-a.real)
    else:
        scale = cmath.exp(-a * cmath.log(n + 1))
    return StateFn(scale * s.values, f.space)


def frac_negative_order_residual(T: MarkovOperator, m: int, n: int, f: StateFn) -> float:
    """Relative residual of S^{-m}_n f = Delta^m_{n-m} f (m >= 1, n >= m).

    The sum S^{-m}_n cancels its O(1) terms down to the exponentially small
    difference, so the residual is measured against the largest term of the
    sum rather than against the net value.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    coeffs = _frac_coeffs(-float(m) - 1.0, n)
    powers = orbit(T, f.values, n)
    lhs = np.tensordot(coeffs[::-1], powers, axes=(0, 0))
    rhs = delta_mn(T, m, n - m, f).values
    scale = 1e-300
    for k in range(n + 1):
        c = abs(coeffs[n - k])
        if c > 0:
            scale = max(scale, c * _sup_norm(powers[k], f.space))
    return _sup_norm(lhs - rhs, f.space) / scale


def _weighted_delta_terms(T: MarkovOperator, m: int, n_hi: int, f: StateFn) -> np.ndarray:
    """Terms W[j] = (j+1) Delta^{m+1}_j f for j = 0..n_hi.

    Range sums over these must be accumulated directly: on a mixing chain a
    block sum at large j is exponentially smaller than the early terms, so a
    prefix-sum difference would cancel catastrophically.
    """
    g = f.values
    for _ in range(m + 1):
        g = T.matrix @ g - g
    terms = orbit(T, g, n_hi)
    weights = np.arange(1, n_hi + 2, dtype=float)
    return weights[:, None, None] * terms


def _sup_norm(values: np.ndarray, space: NormSpec) -> float:
    return float(space.norms(values).max())


def decomposition_formula_residual(T: MarkovOperator, m: int, n: int, f: StateFn) -> float:
    """Relative residual of the exact recursion for n^m Delta^m_{2n+1}.

    n^m Delta^m_{2n+1} = A_n - ((n+1)/n) B_n
                         + n^{m-1} (Delta^{m-1}_{2n+1} - Delta^{m-1}_{n+1})
    with A_n = n^{m-1} sum_{j=n}^{2n} (j+1) Delta^{m+1}_j and
    B_n = n^m (Delta^m_{2n+1} - Delta^m_n).  The residual is measured as
    backward error: sup norm of the difference over the identity's total
    coefficient mass times sup |f|.  On a mixing chain every participating
    quantity decays below the floating-point noise floor eps * |f| long
    before n = 50, so the decayed values themselves cannot set the scale.
    """
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    terms = _weighted_delta_terms(T, m, 2 * n, f)
    A = float(n) ** (m - 1) * terms[n : 2 * n + 1].sum(axis=0)
    d_m_hi = delta_mn(T, m, 2 * n + 1, f).values
    B = float(n) ** m * (d_m_hi - delta_mn(T, m, n, f).values)
    tail = float(n) ** (m - 1) * (
        delta_mn(T, m - 1, 2 * n + 1, f).values - delta_mn(T, m - 1, n + 1, f).values
    )
    lhs = float(n) ** m * d_m_hi
    rhs = A - (n + 1) / n * B + tail
    j = np.arange(n, 2 * n + 1, dtype=float)
    coeff_mass = (
        float(n) ** (m - 1) * (j + 1.0).sum()
        + (n + 1) * float(n) ** (m - 1) * 2.0
        + float(n) ** (m - 1) * 2.0
        + float(n) ** m
    )
    scale = coeff_mass * max(_sup_norm(f.values, f.space), 1e-300)
    return _sup_norm(lhs - rhs, f.space) / scale


def abc_split_residual(T: MarkovOperator, m: int, indices, f: StateFn) -> float:
    """Relative residual of A_{n_k} - A_{n_{k-1}} = a_k + b_k + c_k.

    A_n = n^{m-1} sum_{j=n}^{2n} (j+1) Delta^{m+1}_j; the three pieces split
    on whether the ranges [n_{k-1}, 2n_{k-1}] and [n_k, 2n_k] overlap.  As
    in :func:`decomposition_formula_residual` the residual is backward
    error, scaled by coefficient mass times sup |f|.
    """
    indices = [int(i) for i in indices]
    if indices[0] != 1:
        raise ValueError("index sequence must start at n_0 = 1")
    if any(b <= a for a, b in zip(indices[:-1], indices[1:])):
        raise ValueError("indices must be strictly increasing")
    n_hi = 2 * indices[-1]
    terms = _weighted_delta_terms(T, m, n_hi, f)

    def wsum(a: int, b: int) -> np.ndarray:
        # sum_{j=a}^{b} (j+1) Delta^{m+1}_j f; empty when b < a
        if b < a:
            return np.zeros_like(f.values)
        return terms[a : b + 1].sum(axis=0)

    def cmass(a: int, b: int) -> float:
        if b < a:
            return 0.0
        j = np.arange(a, b + 1, dtype=float)
        return float((j + 1.0).sum())

    def A(n: int) -> np.ndarray:
        return float(n) ** (m - 1) * wsum(n, 2 * n)

    worst = 0.0
    coeff_mass = 1e-300
    for nk_1, nk in zip(indices[:-1], indices[1:]):
        if 2 * nk_1 >= nk:
            pieces = [
                (float(nk) ** (m - 1), 2 * nk_1 + 1, 2 * nk),
                (-float(nk_1) ** (m - 1), nk_1, nk - 1),
                (float(nk) ** (m - 1) - float(nk_1) ** (m - 1), nk, 2 * nk_1),
            ]
        else:
            pieces = [
                (float(nk) ** (m - 1), nk, 2 * nk),
                (-float(nk_1) ** (m - 1), nk_1, 2 * nk_1),
            ]
        rhs = sum(coeff * wsum(a, b) for coeff, a, b in pieces)
        lhs = A(nk) - A(nk_1)
        worst = max(worst, _sup_norm(lhs - rhs, f.space))
        coeff_mass = max(
            coeff_mass,
            float(nk) ** (m - 1) * cmass(nk, 2 * nk)
            + float(nk_1) ** (m - 1) * cmass(nk_1, 2 * nk_1)
            + sum(abs(coeff) * cmass(a, b) for coeff, a, b in pieces),
        )
    return worst / (coeff_mass * max(_sup_norm(f.values, f.space), 1e-300))


def lambda_j(m: int, q0: float, indices, j: int) -> float:
    """Lambda_j = sum over k with n_k <= j <= 2 n_{k-1} of the c_k weights.

    The summand is (|n_k^{m-1} - n_{k-1}^{m-1}| / n_k^{m-1})^q0; it vanishes
    identically for m = 1, stays below 2^q0 for m = 0 and below 2^{(m-1)q0}
    for m >= 2.
    """
    if q0 < 2:
        raise ValueError(f"need q0 >= 2, got {q0}")
    if j < 1:
        raise ValueError(f"j must be positive, got {j}")
    indices = [int(i) for i in indices]
    total = 0.0
    for nk_1, nk in zip(indices[:-1], indices[1:]):
        if nk <= j <= 2 * nk_1:
            num = abs(float(nk) ** (m - 1) - float(nk_1) ** (m - 1))
            total += (num / float(nk) ** (m - 1)) ** q0
    return total


def elementary_sum_constant(m: int, q0: float, n: int) -> float:
    """Normalized block sum behind the Holder step of the a_k/b_k bounds.

    (sum_{j=n}^{2n} (j+1)^{(1-q0 m)/(q0-1)})^{(q0-1)/q0} / n^{1-m}; the sup
    over n is the empirical K_{m,q0}.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if q0 <= 1:
        raise ValueError(f"need q0 > 1, got {q0}")
    j = np.arange(n, 2 * n + 1, dtype=float)
    expo = (1.0 - q0 * m) / (q0 - 1.0)
    s = ((j + 1.0) ** expo).sum()
    return float(s ** ((q0 - 1.0) / q0) / float(n) ** (1 - m))


def weighted_variation_gap(delta, z: TimeFamily, q: float) -> float:
    """3 |delta|_{v_1} |z|_{v_q} - |(delta_n z_n)|_{v_q}; never negative."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (len(z),):
        raise ValueError(f"need one weight per entry, got {delta.shape} for {len(z)}")
    v1 = vq_norm_exact(TimeFamily.from_scalars(delta, z.times), 1.0)
    vz = vq_norm_exact(z, q)
    prod = TimeFamily(z.times, delta[:, None] * z.values, z.space)
    return 3.0 * v1 * vz - vq_norm_exact(prod, q)


def littlewood_paley_phi(T: MarkovOperator, m: int, q0: float, f: StateFn,
                         n_max: int, return_partials: bool = False):
    """Phi_{m,q0}(f) = (sum_{j=1..n_max} |(j+1)^{m+1} D^{m+1}_j f|^q0/(j+1))^{1/q0}.

    With ``return_partials`` the running partial sums (before the final
    root) are returned as well, exposing the truncation convergence.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if q0 < 2:
        raise ValueError(f"need q0 >= 2, got {q0}")
    g = f.values
    for _ in range(m + 1):
        g = T.matrix @ g - g
    terms = orbit(T, g, n_max)[1:]                    # j = 1..n_max
    j = np.arange(1, n_max + 1, dtype=float)
    weights = (j + 1.0) ** (q0 * (m + 1) - 1.0)
    normsq = f.space.norms(terms) ** q0               # (n_max, K)
    partials = np.cumsum(weights[:, None] * normsq, axis=0)
    phi = partials[-1] ** (1.0 / q0)
    if return_partials:
        return phi, partials
    return phi


def variation_of_averages(T: MarkovOperator, f: StateFn, q: float, n_max: int) -> np.ndarray:
    """Per-state q-variation of the ergodic averages (M_n f)_{n=0..n_max}."""
    if not q > 2:
        raise ValueError(f"need q > 2, got {q}")
    powers = orbit(T, f.values, n_max)
    sums = np.cumsum(powers, axis=0)
    counts = np.arange(1, n_max + 2, dtype=float)
    averages = sums / counts[:, None, None]
    batch = np.moveaxis(averages, 0, 1)               # (K, n_max+1, dim)
    power = variation_power_dp(batch, f.space, q)
    return power ** (1.0 / q)
