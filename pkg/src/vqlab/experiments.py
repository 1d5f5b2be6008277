"""Experiment harness: seeded sweeps, contract rows, CSV/JSON reports.

Every experiment is a pure function of (params, corpus spec, seed) emitting
report rows.  A row is either a contract row (status pass/fail, tolerance
owned by a core-module invariant) or a recorded statistic.  Reports
serialize deterministically, so a fixed config reproduces byte-identical
files; wall time lives only on the in-memory report object.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Literal

import numpy as np
from pydantic import BaseModel, Field

from . import averaging, corpus, ergodic, martingale, semigroup, variation
from .martingale import DyadicGrid, GridFn
from .spaces import NormSpec, cotype_exponent
from .version import VERSION

ParamValue = int | float | str


class CorpusSpec(BaseModel):
    count: int = Field(default=8, ge=1)
    kind: Literal["random-gaussian", "spike", "rademacher-martingale", "lacunary"] = (
        "random-gaussian"
    )


class ExperimentConfig(BaseModel):
    experiment: str
    params: dict[str, Any] = Field(default_factory=dict)
    corpus: CorpusSpec = Field(default_factory=CorpusSpec)
    seed: int = 0
    out: str | None = None
    fmt: Literal["csv", "json"] = "csv"


class ReportRow(BaseModel):
    experiment: str
    params: dict[str, ParamValue] = Field(default_factory=dict)
    statistic: str
    value: float
    status: Literal["pass", "fail", "record"]


class ExperimentReport(BaseModel):
    rows: list[ReportRow]
    seed: int
    version: str
    wall_time_s: float | None = Field(default=None, exclude=True)

    @property
    def passed(self) -> bool:
        return all(row.status != "fail" for row in self.rows)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "version": self.version,
            "rows": [
                {"experiment": r.experiment, **r.params,
                 "statistic": r.statistic, "value": r.value, "status": r.status}
                for r in self.rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        keys = sorted({k for r in self.rows for k in r.params})
        header = ["experiment", *keys, "statistic", "value", "status"]
        lines = [",".join(header)]
        for r in self.rows:
            cells = [r.experiment]
            cells += [repr(r.params[k]) if k in r.params else "" for k in keys]
            cells += [r.statistic, repr(r.value), r.status]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _contract(exp: str, params: dict, statistic: str, value: float, ok: bool) -> ReportRow:
    return ReportRow(experiment=exp, params=params, statistic=statistic,
                     value=float(value), status="pass" if ok else "fail")


def _record(exp: str, params: dict, statistic: str, value: float) -> ReportRow:
    return ReportRow(experiment=exp, params=params, statistic=statistic,
                     value=float(value), status="record")


def estimate_constant(samples) -> dict[str, float]:
    """Summary of a refinement sequence of ratio samples.

    Returns the maximum, the 95th percentile and the relative dispersion
    (max - min)/mean of the last quartile (at least two entries, so short
    refinement sequences still compare their final levels).
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one sample")
    tail_len = 1 if arr.size == 1 else max(2, math.ceil(arr.size / 4))
    tail = arr[-tail_len:]
    mean = float(tail.mean())
    disp = 0.0 if mean == 0 else float((tail.max() - tail.min()) / mean)
    return {
        "max": float(arr.max()),
        "p95": float(np.percentile(arr, 95)),
        "last_quartile_dispersion": disp,
    }


def _pool_map(fn: Callable, items: list) -> list:
    """Run independent grid points in a small thread pool, order-preserving."""
    if len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(4, os.cpu_count() or 1, len(items))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _pnorm(values: np.ndarray, p: float) -> float:
    return float((np.abs(values) ** p).mean() ** (1.0 / p))


# --------------------------------------------------------------------------
# variation family


def _run_variation_oracle(exp, params, spec, seed):
    count = int(params["count"])
    n_max = int(params["n_max"])
    qs = [float(q) for q in params["q"]]
    rs = list(params["r"])
    dim = int(params["dim"])
    rngs = _spawn_rngs(seed, count)
    families = []
    for i, rng in enumerate(rngs):
        space = corpus.space_from_r(rs[i % len(rs)], dim)
        n = int(rng.integers(1, n_max + 1))
        fam = variation.TimeFamily(np.arange(1, n + 1, dtype=float),
                                   rng.standard_normal((n, dim)), space)
        families.append(fam)
    rows = []
    for q in qs:
        worst = 0.0
        for fam in families:
            a = variation.vq_norm_exact(fam, q)
            b = variation.vq_norm_bruteforce(fam, q)
            worst = max(worst, abs(a - b) / max(b, 1e-300))
        rows.append(_contract(exp, {"q": q, "count": count}, "max_rel_error",
                              worst, worst <= 1e-12))
    return rows


def _run_jump_oracle(exp, params, spec, seed):
    count = int(params["count"])
    n_max = int(params["n_max"])
    q = float(params.get("q", 2.5))
    rngs = _spawn_rngs(seed, count)
    mismatches = 0
    min_gap = math.inf
    for rng in rngs:
        dim = int(rng.integers(1, 4))
        space = corpus.space_from_r(float(rng.choice([1.0, 2.0, 3.0])), dim)
        n = int(rng.integers(2, n_max + 1))
        fam = variation.TimeFamily(np.arange(1, n + 1, dtype=float),
                                   rng.standard_normal((n, dim)), space)
        lam = float(rng.uniform(0.1, 2.0))
        if variation.jump_count(fam, lam) != variation.jump_count_bruteforce(fam, lam):
            mismatches += 1
        min_gap = min(min_gap, variation.jump_variation_gap(fam, lam, q))
    return [
        _contract(exp, {"count": count}, "oracle_mismatches", mismatches, mismatches == 0),
        _contract(exp, {"count": count, "q": q}, "min_jump_variation_gap",
                  min_gap, min_gap >= 0.0),
    ]


# --------------------------------------------------------------------------
# martingale / cz families


def _run_martingale_cotype(exp, params, spec, seed):
    d = int(params["d"])
    J = int(params["J"])
    dim = int(params["dim"])
    count = int(spec.count)
    grid = DyadicGrid(d=d, J=J)
    rows = []
    rngs = _spawn_rngs(seed, count)
    worst = 0.0
    for rng in rngs:
        f = corpus.grid_fn_of_kind(spec.kind, rng, grid, NormSpec(r=2.0, dim=dim))
        lhs, rhs = martingale.cotype_functional(f, 2.0)
        worst = max(worst, abs(lhs - rhs) / max(rhs, 1e-300))
    rows.append(_contract(exp, {"d": d, "J": J, "r": 2.0, "q0": 2.0, "count": count},
                          "hilbert_max_rel_error", worst, worst <= 1e-12))
    for r, q0 in [(3.0, 3.0), (4.0, 4.0)]:
        space = NormSpec(r=r, dim=dim)
        ratios = []
        ratios_head1 = []
        for rng in _spawn_rngs(seed + 1, count):
            f = corpus.rademacher_martingale_grid_fn(rng, grid, space)
            lhs, rhs = martingale.cotype_functional(f, q0)
            ratios.append(lhs / rhs)
            head = float(martingale.cond_expect(f, J).norms().mean())
            diff_part = lhs - float((martingale.cond_expect(f, J).norms() ** q0).mean())
            ratios_head1.append((head + diff_part) / rhs)
        rows.append(_record(exp, {"d": d, "J": J, "r": r, "q0": q0},
                            "max_cotype_ratio", max(ratios)))
        rows.append(_record(exp, {"d": d, "J": J, "r": r, "q0": q0},
                            "max_cotype_ratio_unpowered_head", max(ratios_head1)))
    return rows


def _run_cz_properties(exp, params, spec, seed):
    cases = [(int(d), int(J)) for d, J in params["cases"]]
    count = int(params["count"])
    per = max(1, count // len(cases))
    rows = []
    for d, J in cases:
        grid = DyadicGrid(d=d, J=J)

        def one(rng, d=d, grid=grid):
            space = corpus.space_from_r(float(rng.choice([1.0, 2.0, 3.0])), 2)
            f = corpus.grid_fn_of_kind(spec.kind, rng, grid, space)
            lam = float(f.norms().mean()) * float(rng.uniform(1.0, 4.0)) + 1e-9
            parts = martingale.cz_decompose(f, lam)
            checks = martingale.cz_check_properties(f, parts)
            return sum(0 if ok else 1 for ok in checks.values())

        violations = sum(_pool_map(one, _spawn_rngs(seed + d, per)))
        rows.append(_contract(exp, {"d": d, "J": J, "count": per},
                              "property_violations", violations, violations == 0))
    return rows


# --------------------------------------------------------------------------
# diffavg family


def _run_master_decomposition(exp, params, spec, seed):
    d, J = int(params["d"]), int(params["J"])
    q, q0 = float(params["q"]), float(params["q0"])
    dim = int(params["dim"])
    count = int(params["count"])
    grid = DyadicGrid(d=d, J=J)
    radii = averaging.full_radii(grid)
    rows = []
    for shape in params["shapes"]:

        def one(rng, shape=shape):
            space = corpus.space_from_r(float(rng.choice([1.0, 2.0, 3.0])), dim)
            f = corpus.grid_fn_of_kind(spec.kind, rng, grid, space)
            res = averaging.master_decomposition_check(f, q, q0, radii, shape)
            return float(res.max())

        worst = max(_pool_map(one, _spawn_rngs(seed, count)))
        rows.append(_contract(exp, {"d": d, "J": J, "q": q, "q0": q0,
                                    "shape": shape, "count": count},
                              "max_residual", worst, worst == 0.0))
    return rows


def _run_lv_probe(exp, params, spec, seed):
    d = int(params["d"])
    q0 = float(params["q0"])
    js = [int(j) for j in params["J"]]
    count = int(params["count"])
    sups = {}
    for J in js:
        grid = DyadicGrid(d=d, J=J)
        worst = 0.0
        # equalize total sampling mass: coarser grids get more instances so
        # the sup estimator saturates comparably at every J
        n_inst = count * 2 ** (max(js) - J)
        for rng in _spawn_rngs(seed, n_inst):
            f = corpus.grid_fn_of_kind(spec.kind, rng, grid, NormSpec(r=2.0, dim=2))
            for k in range(1, J):
                for n in range(1, k + 1):
                    worst = max(worst, averaging.probe_pointwise_LV(f, k, n, q0))
        sups[J] = worst
    rows = [_record(exp, {"d": d, "J": J, "q0": q0}, "sup_constant", sups[J]) for J in js]
    if len(js) >= 2:
        growth = sups[js[-1]] / max(sups[js[0]], 1e-300)
        rows.append(_contract(exp, {"d": d, "q0": q0, "J_lo": js[0], "J_hi": js[-1]},
                              "growth_under_refinement", growth, growth <= 1.1))
    return rows


def _run_weak11(exp, params, spec, seed):
    d, J = int(params["d"]), int(params["J"])
    q = float(params["q"])
    lambdas = [float(x) for x in params["lambdas"]]
    grid = DyadicGrid(d=d, J=J)
    radii = averaging.full_radii(grid)
    rows = []
    worst = 0.0
    for kind in ("spike", "random-gaussian"):
        for rng in _spawn_rngs(seed, spec.count):
            f = corpus.grid_fn_of_kind(kind, rng, grid, NormSpec(r=2.0, dim=2))
            for lam in lambdas:
                worst = max(worst, averaging.weak11_ratio(f, q, radii, "ball", lam))
    rows.append(_record(exp, {"d": d, "J": J, "q": q}, "max_weak11_ratio", worst))
    rng = np.random.default_rng(seed)
    f = corpus.grid_fn_of_kind("random-gaussian", rng, grid, NormSpec(r=2.0, dim=2))
    base = averaging.weak11_ratio(f, q, radii, "ball", 0.5)
    scaled = averaging.weak11_ratio(
        GridFn(grid, f.space, 3.0 * f.values), q, radii, "ball", 1.5)
    err = abs(base - scaled)
    rows.append(_contract(exp, {"d": d, "J": J, "q": q}, "homogeneity_error",
                          err, err <= 1e-12))
    return rows


def _run_bmo(exp, params, spec, seed):
    d, J = int(params["d"]), int(params["J"])
    q = float(params["q"])
    grid = DyadicGrid(d=d, J=J)
    radii = averaging.full_radii(grid)
    worst = 0.0
    for kind in ("spike", "random-gaussian"):
        for rng in _spawn_rngs(seed, spec.count):
            f = corpus.grid_fn_of_kind(kind, rng, grid, NormSpec(r=2.0, dim=2))
            worst = max(worst, averaging.bmo_ratio(f, q, radii, "ball"))
    rng = np.random.default_rng(seed)
    f = corpus.grid_fn_of_kind("random-gaussian", rng, grid, NormSpec(r=2.0, dim=2))
    err = abs(averaging.bmo_ratio(f, q, radii) -
              averaging.bmo_ratio(GridFn(grid, f.space, 2.5 * f.values), q, radii))
    return [
        _record(exp, {"d": d, "J": J, "q": q}, "max_bmo_ratio", worst),
        _contract(exp, {"d": d, "J": J, "q": q}, "homogeneity_error", err, err <= 1e-12),
    ]


# --------------------------------------------------------------------------
# ergodic family


def _run_ergodic_identity(exp, params, spec, seed):
    count = int(params["count"])
    k_max = int(params["K_max"])
    n_max = int(params["n_max"])
    m_max = int(params["m_max"])
    n_frac = int(params["n_frac"])
    space = NormSpec(r=2.0, dim=2)
    worst_dec = worst_abc = worst_a0 = worst_a1 = worst_neg = 0.0

    def one(rng):
        K = int(rng.integers(2, k_max + 1))
        T = corpus.random_markov(rng, K)
        f = corpus.gaussian_state_fn(rng, K, space)
        m = int(rng.integers(1, m_max + 1))
        n = int(rng.integers(1, n_max + 1))
        dec = ergodic.decomposition_formula_residual(T, m, n, f)
        idx = corpus.random_increasing_indices(rng, int(rng.integers(3, 12)))
        abc = ergodic.abc_split_residual(T, int(rng.integers(0, m_max + 1)), idx, f)
        a0 = a1 = neg = 0.0
        for n_chk in (0, 1, n_frac // 2, n_frac):
            lhs = ergodic.frac_average(T, 0.0, n_chk, f).values
            rhs = ergodic.delta_mn(T, 0, n_chk, f).values
            a0 = max(a0, float(np.abs(lhs - rhs).max())
                     / max(np.abs(rhs).max(), 1e-300))
            lhs = ergodic.frac_average(T, 1.0, n_chk, f).values
            rhs = ergodic.ergodic_avg(T, n_chk, f).values
            a1 = max(a1, float(np.abs(lhs - rhs).max())
                     / max(np.abs(rhs).max(), 1e-300))
        for m_chk in range(1, m_max + 1):
            neg = max(neg, ergodic.frac_negative_order_residual(T, m_chk, n_frac, f))
        return dec, abc, a0, a1, neg

    for dec, abc, a0, a1, neg in _pool_map(one, _spawn_rngs(seed, count)):
        worst_dec = max(worst_dec, dec)
        worst_abc = max(worst_abc, abc)
        worst_a0 = max(worst_a0, a0)
        worst_a1 = max(worst_a1, a1)
        worst_neg = max(worst_neg, neg)
    base = {"count": count, "K_max": k_max, "m_max": m_max}
    return [
        _contract(exp, {**base, "n_max": n_max}, "decomposition_max_residual",
                  worst_dec, worst_dec <= 1e-10),
        _contract(exp, {**base, "n_max": n_max}, "abc_split_max_residual",
                  worst_abc, worst_abc <= 1e-10),
        _contract(exp, {**base, "n": n_frac}, "frac_alpha0_max_rel_error",
                  worst_a0, worst_a0 <= 1e-12),
        _contract(exp, {**base, "n": n_frac}, "frac_alpha1_max_rel_error",
                  worst_a1, worst_a1 <= 1e-12),
        _contract(exp, {**base, "n": n_frac}, "frac_negative_order_max_residual",
                  worst_neg, worst_neg <= 1e-12),
    ]


def _run_lambda_j(exp, params, spec, seed):
    count = int(params["count"])
    ms = [int(m) for m in params["m"]]
    q0s = [float(q) for q in params["q0"]]
    rows = []
    for m in ms:
        for q0 in q0s:
            bound = 0.0 if m == 1 else (2.0 ** q0 if m == 0 else 2.0 ** ((m - 1) * q0))
            worst = 0.0
            ok = True
            for rng in _spawn_rngs(seed + m, count):
                idx = corpus.random_increasing_indices(rng, int(rng.integers(3, 14)))
                for j in rng.integers(1, 2 * idx[-1] + 2, size=4):
                    lj = ergodic.lambda_j(m, q0, idx, int(j))
                    worst = max(worst, lj)
                    ok &= (lj == 0.0) if m == 1 else (lj <= bound)
            rows.append(_contract(exp, {"m": m, "q0": q0, "count": count,
                                        "bound": bound}, "max_lambda_j", worst, ok))
    return rows


def _run_elementary_constants(exp, params, spec, seed):
    ms = [int(m) for m in params["m"]]
    q0s = [float(q) for q in params["q0"]]
    n_hi = int(params["n_max"])
    n_points = int(params["n_points"])
    rows = []
    ns = np.unique(np.round(np.geomspace(1, n_hi, n_points)).astype(int))
    for m in ms:
        for q0 in q0s:
            seq = [ergodic.elementary_sum_constant(m, q0, int(n)) for n in ns]
            summary = estimate_constant(seq)
            rows.append(_record(exp, {"m": m, "q0": q0, "n_max": n_hi},
                                "sup_constant", max(seq)))
            rows.append(_contract(exp, {"m": m, "q0": q0, "n_max": n_hi},
                                  "last_quartile_dispersion",
                                  summary["last_quartile_dispersion"],
                                  summary["last_quartile_dispersion"] <= 0.05))
    pairs = int(params["gap_pairs"])
    space = NormSpec(r=2.0, dim=2)
    min_gap = math.inf
    for rng in _spawn_rngs(seed, pairs):
        n = int(rng.integers(2, 10))
        fam = variation.TimeFamily(np.arange(1, n + 1, dtype=float),
                                   rng.standard_normal((n, 2)), space)
        delta = rng.standard_normal(n)
        q = float(rng.choice([2.0, 3.0, 4.0]))
        min_gap = min(min_gap, ergodic.weighted_variation_gap(delta, fam, q))
    rows.append(_contract(exp, {"pairs": pairs}, "min_weighted_variation_gap",
                          min_gap, min_gap >= -1e-12))
    return rows


def _run_littlewood_paley(exp, params, spec, seed):
    n_max = int(params["n_max"])
    tail_at = int(params["tail_at"])
    q0 = float(params["q0"])
    rows = []
    rng = np.random.default_rng(seed)
    space = NormSpec(r=2.0, dim=2)
    chains = {
        "two-state": corpus.two_state_chain(0.25),
        "cycle8": corpus.lazy_cycle_walk(8),
    }
    for name, T in chains.items():
        for m in (0, 1):
            f = corpus.gaussian_state_fn(rng, T.K, space)
            phi, partials = ergodic.littlewood_paley_phi(T, m, q0, f, n_max,
                                                         return_partials=True)
            tail = float(((partials[-1] - partials[tail_at - 1])
                          / np.maximum(partials[-1], 1e-300)).max())
            p = {"chain": name, "m": m, "q0": q0, "n_max": n_max, "tail_at": tail_at}
            if name == "two-state":
                rows.append(_contract(exp, p, "tail_fraction", tail, tail <= 1e-8))
            else:
                rows.append(_record(exp, p, "tail_fraction", tail))
            rows.append(_record(exp, p, "max_phi", float(phi.max())))
    return rows


# --------------------------------------------------------------------------
# semigroup family


def _run_semigroup_axioms(exp, params, spec, seed):
    count = int(params["count"])
    K = int(params["K"])
    ts = [float(t) for t in params["t"]]
    worst_axiom = 0.0
    worst_law = 0.0
    space = NormSpec(r=2.0, dim=2)
    for rng in _spawn_rngs(seed, count):
        Q = corpus.random_symmetric_stochastic(rng, K)
        S = semigroup.DiffusionSemigroup.from_stochastic(Q)
        for t in ts:
            E = S.matrix_at(t)
            worst_axiom = max(worst_axiom,
                              float(max(-E.min(), 0.0)),
                              float(np.abs(E - E.T).max()),
                              float(np.abs(E.sum(axis=1) - 1.0).max()))
        f = corpus.gaussian_state_fn(rng, K, space)
        for s_, t_ in ((0.3, 0.7), (1.5, 8.5)):
            a = semigroup.semigroup_apply(S, s_, semigroup.semigroup_apply(S, t_, f))
            b = semigroup.semigroup_apply(S, s_ + t_, f)
            worst_law = max(worst_law, float(np.abs(a.values - b.values).max()))
    return [
        _contract(exp, {"count": count, "K": K}, "max_axiom_violation",
                  worst_axiom, worst_axiom <= 1e-10),
        _contract(exp, {"count": count, "K": K}, "max_semigroup_law_error",
                  worst_law, worst_law <= 1e-10),
    ]


def _run_semigroup_variation(exp, params, spec, seed):
    K = int(params["K"])
    p = float(params["p"])
    rs = [float(r) for r in params["r"]]
    octaves = [int(o) for o in params["points_per_octave"]]
    t_lo, t_hi = float(params["t_min"]), float(params["t_max"])
    S = semigroup.DiffusionSemigroup.from_stochastic(corpus.lazy_cycle_walk(K))
    rows = []
    for r in rs:
        space = NormSpec(r=r, dim=2)
        q = cotype_exponent(space) + 0.5
        ratios = []
        for per_octave in octaves:
            times = semigroup.geometric_times(t_lo, t_hi, per_octave)
            vals = []
            for rng in _spawn_rngs(seed, spec.count):
                f = corpus.gaussian_state_fn(rng, K, space)
                v = semigroup.semigroup_variation(S, f, q, times)
                vals.append(_pnorm(v, p) / _pnorm(f.norms(), p))
            ratios.append(float(np.mean(vals)))
            rows.append(_record(exp, {"K": K, "r": r, "q": q, "p": p,
                                      "per_octave": per_octave}, "mean_ratio",
                                ratios[-1]))
        disp = estimate_constant(ratios)["last_quartile_dispersion"]
        rows.append(_contract(exp, {"K": K, "r": r, "q": q, "p": p},
                              "refinement_dispersion", disp, disp <= 0.10))
    return rows


def _run_jump_estimate(exp, params, spec, seed):
    K = int(params["K"])
    q = float(params["q"])
    p = float(params["p"])
    lambdas = [float(x) for x in params["lambdas"]]
    S = semigroup.DiffusionSemigroup.from_stochastic(corpus.lazy_cycle_walk(K))
    space = NormSpec(r=2.0, dim=2)
    times = semigroup.geometric_times(2.0 ** -12, 2.0 ** 8, 2)
    worst_ratio = 0.0
    violations = 0
    for rng in _spawn_rngs(seed, spec.count):
        f = corpus.gaussian_state_fn(rng, K, space)
        v = semigroup.semigroup_variation(S, f, q, times)
        for lam in lambdas:
            counts = semigroup.jump_count_states(S, f, lam, times)
            if not (lam ** q * counts <= v ** q + 1e-12).all():
                violations += 1
            worst_ratio = max(worst_ratio,
                              semigroup.jump_estimate_ratio(S, f, q, p, lam, times))
    return [
        _contract(exp, {"K": K, "q": q}, "domination_violations",
                  violations, violations == 0),
        _record(exp, {"K": K, "q": q, "p": p}, "max_jump_ratio", worst_ratio),
    ]


def _run_poisson_summation(exp, params, spec, seed):
    t = float(params["t"])
    x = float(params["x"])
    Ns = [int(n) for n in params["N"]]
    rows = []
    residuals = [semigroup.poisson_summation_residual(t, x, N) for N in Ns]
    for N, res in zip(Ns, residuals):
        rows.append(_record(exp, {"t": t, "x": x, "N": N}, "summation_residual", res))
    monotone = all(a >= b for a, b in zip(residuals, residuals[1:]))
    rows.append(_contract(exp, {"t": t, "x": x}, "residual_monotone_in_N",
                          0.0 if monotone else 1.0, monotone))
    final = residuals[-1]
    rows.append(_contract(exp, {"t": t, "x": x, "N": Ns[-1]},
                          "final_summation_residual", final, final <= 1e-3))
    N_series = int(params["N_series"])
    for ts in [float(v) for v in params["series_t"]]:
        theta = float(params["series_theta"])
        err = abs(semigroup.poisson_circle(ts, theta)
                  - semigroup.poisson_circle_series(ts, theta, N_series))
        tail_bound = 2.0 * math.exp(-ts * (N_series + 1)) / (1.0 - math.exp(-ts))
        p = {"t": ts, "theta": theta, "N": N_series}
        if ts >= 0.15:
            rows.append(_contract(exp, p, "series_error", err, err <= 1e-10))
        else:
            rows.append(_contract(exp, p, "series_error_within_tail_bound",
                                  err, err <= tail_bound))
            rows.append(_record(exp, p, "series_error", err))
    return rows


def _run_lacunary(exp, params, spec, seed):
    i_max = int(params["i_max"])
    rows = [_record(exp, {"i": i}, "gap", semigroup.lacunary_gap(i))
            for i in range(1, i_max + 1)]
    g1 = semigroup.lacunary_gap(1)
    rows.append(_contract(exp, {"i": 1}, "gap_at_1", g1, g1 == 0.3125))
    # the 1e-6 convergence contract applies from i = 30 on, regardless of
    # how far the recorded grid extends
    i_chk = max(i_max, 30)
    err = abs(semigroup.lacunary_gap(i_chk) - semigroup.LACUNARY_LIMIT)
    rows.append(_contract(exp, {"i": i_chk, "limit": semigroup.LACUNARY_LIMIT},
                          "limit_error", err, err <= 1e-6))
    paper_constant = math.exp(-1.0) - math.exp(-2.0)
    rows.append(_record(exp, {"i": i_chk, "limit": paper_constant},
                        "distance_to_e1_minus_e2",
                        abs(semigroup.lacunary_gap(i_chk) - paper_constant)))
    return rows


# --------------------------------------------------------------------------
# cotype family


def _run_cotype_necessity(exp, params, spec, seed):
    q = float(params["q"])
    Ks = [int(k) for k in params["K"]]
    dim = max(Ks)
    rows = []
    rngs = _spawn_rngs(seed, spec.count)
    for r in [float(v) for v in params["r"]]:
        space = NormSpec(r=r, dim=dim)
        slopes = []
        dev_from_one = 0.0
        for rng in rngs:
            signs = corpus.random_signs(rng, dim)
            ratios = [semigroup.cotype_necessity_ratio(space, q, K, signs[:K])
                      for K in Ks]
            for K, ratio in zip(Ks, ratios):
                rows.append(_record(exp, {"r": r, "q": q, "K": K}, "ratio", ratio))
            slopes.append(float(np.polyfit(np.log(Ks), np.log(ratios), 1)[0]))
            dev_from_one = max(dev_from_one, max(abs(v - 1.0) for v in ratios))
        if r == 4.0 and q == 2.0:
            worst = max(slopes, key=lambda s: abs(s - 0.25))
            rows.append(_contract(exp, {"r": r, "q": q}, "loglog_slope",
                                  worst, abs(worst - 0.25) <= 0.04))
        if r == 2.0 and q == 2.0:
            rows.append(_contract(exp, {"r": r, "q": q}, "max_deviation_from_one",
                                  dev_from_one, dev_from_one <= 1e-10))
    return rows


# --------------------------------------------------------------------------
# registry and dispatch

EXPERIMENTS: dict[str, tuple[dict, Callable]] = {
    "variation-oracle": (
        {"count": 200, "n_max": 12, "q": [1.0, 2.0, 2.5, 4.0],
         "r": [1, 2, 3, "inf"], "dim": 3},
        _run_variation_oracle,
    ),
    "jump-oracle": ({"count": 200, "n_max": 12, "q": 2.5}, _run_jump_oracle),
    "martingale-cotype": ({"d": 1, "J": 6, "dim": 16}, _run_martingale_cotype),
    "cz-properties": ({"count": 100, "cases": [[1, 6], [2, 6]]}, _run_cz_properties),
    "master-decomposition": (
        {"count": 50, "d": 1, "J": 8, "q": 4.0, "q0": 2.0, "dim": 2,
         "shapes": ["ball", "cube"]},
        _run_master_decomposition,
    ),
    "lv-probe": ({"d": 1, "J": [6, 8], "q0": 2.0, "count": 64}, _run_lv_probe),
    "weak11": ({"d": 1, "J": 6, "q": 4.0,
                "lambdas": [0.05, 0.1, 0.2, 0.5, 1.0, 2.0]}, _run_weak11),
    "bmo": ({"d": 1, "J": 6, "q": 4.0}, _run_bmo),
    "ergodic-identity": (
        {"count": 100, "K_max": 8, "n_max": 50, "m_max": 3, "n_frac": 64},
        _run_ergodic_identity,
    ),
    "lambda-j": ({"count": 1000, "m": [0, 1, 2, 3], "q0": [2.0, 3.0]}, _run_lambda_j),
    "elementary-constants": (
        {"m": [0, 1, 2, 3], "q0": [2.0, 2.5, 3.0], "n_max": 100000,
         "n_points": 21, "gap_pairs": 500},
        _run_elementary_constants,
    ),
    "littlewood-paley": ({"n_max": 200, "tail_at": 150, "q0": 2.0},
                         _run_littlewood_paley),
    "semigroup-axioms": ({"count": 20, "K": 6, "t": [0.1, 1.0, 10.0]},
                         _run_semigroup_axioms),
    "semigroup-variation": (
        {"K": 32, "p": 2.0, "r": [2.0, 3.0, 4.0], "t_min": 2.0 ** -20,
         "t_max": 2.0 ** 10, "points_per_octave": [1, 2, 4, 8]},
        _run_semigroup_variation,
    ),
    "jump-estimate": ({"K": 16, "q": 4.0, "p": 2.0,
                       "lambdas": [0.05, 0.2, 0.8]}, _run_jump_estimate),
    "poisson-summation": (
        {"t": 1.0, "x": 0.3, "N": [10, 100, 1000, 10000], "N_series": 200,
         "series_t": [0.1, 0.15, 0.2, 0.5, 1.0, 2.0], "series_theta": 0.37},
        _run_poisson_summation,
    ),
    "lacunary": ({"i_max": 30}, _run_lacunary),
    "cotype-necessity": ({"q": 2.0, "r": [2.0, 4.0], "K": [4, 8, 16]},
                         _run_cotype_necessity),
}

FAMILIES: dict[str, list[str]] = {
    "variation": ["variation-oracle", "jump-oracle"],
    "martingale": ["martingale-cotype"],
    "cz": ["cz-properties"],
    "diffavg": ["master-decomposition", "lv-probe", "weak11", "bmo"],
    "ergodic": ["ergodic-identity", "lambda-j", "elementary-constants",
                "littlewood-paley"],
    "semigroup": ["semigroup-axioms", "semigroup-variation", "jump-estimate",
                  "poisson-summation", "lacunary"],
    "cotype": ["cotype-necessity"],
}


def experiment_names() -> list[str]:
    return list(EXPERIMENTS)


def _validate_exponents(params: dict) -> None:
    def values(key):
        v = params.get(key)
        if v is None:
            return []
        return v if isinstance(v, (list, tuple)) else [v]

    for q0 in values("q0"):
        if not float(q0) >= 2.0:
            raise ValueError(f"q0 must satisfy q0 >= 2, got {q0}")
    for q in values("q"):
        if not float(q) >= 1.0:
            raise ValueError(f"q must satisfy q >= 1, got {q}")
    qs, q0s = values("q"), values("q0")
    if len(qs) == 1 and q0s:
        if not all(float(qs[0]) > float(q0) for q0 in q0s):
            raise ValueError(f"need q > q0, got q={qs[0]}, q0={q0s}")
    for p in values("p"):
        if not float(p) > 1.0:
            raise ValueError(f"p must satisfy p > 1, got {p}")


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Dispatch to the named experiment and assemble a deterministic report.

    Unknown parameter keys are rejected; the output file (when requested)
    is written atomically via a temp-file rename.
    """
    if config.experiment not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {config.experiment!r}; "
                       f"known: {', '.join(EXPERIMENTS)}")
    defaults, runner = EXPERIMENTS[config.experiment]
    unknown = set(config.params) - set(defaults)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} for "
                         f"{config.experiment}; accepted: {sorted(defaults)}")
    params = {**defaults, **config.params}
    _validate_exponents(params)
    started = time.perf_counter()
    rows = runner(config.experiment, params, config.corpus, config.seed)
    report = ExperimentReport(rows=rows, seed=config.seed, version=VERSION,
                              wall_time_s=time.perf_counter() - started)
    if config.out:
        write_report(report, config.out, config.fmt)
    return report


def write_report(report: ExperimentReport, path: str, fmt: str = "csv") -> None:
    text = report.to_csv() if fmt == "csv" else report.to_json()
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_report(path: str) -> ExperimentReport:
    """Load a report written in either format (used by the report command)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        rows = []
        for row in payload["rows"]:
            row = dict(row)
            rows.append(ReportRow(
                experiment=row.pop("experiment"),
                statistic=row.pop("statistic"),
                value=row.pop("value"),
                status=row.pop("status"),
                params=row,
            ))
        return ExperimentReport(rows=rows, seed=payload["seed"],
                                version=payload["version"])
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    keys = header[1:-3]
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        params = {}
        for key, cell in zip(keys, cells[1:-3]):
            if cell == "":
                continue
            try:
                params[key] = json.loads(cell)
            except json.JSONDecodeError:
                params[key] = cell.strip("'\"")
        rows.append(ReportRow(experiment=cells[0], params=params,
                              statistic=cells[-3], value=float(cells[-2]),
                              status=cells[-1]))
    return ExperimentReport(rows=rows, seed=-1, version=VERSION)
