import math

import numpy as np
import pytest

from vqlab.spaces import NormSpec, seq_lq
from vqlab.variation import (
    IntervalSplit,
    TimeFamily,
    jump_count,
    jump_count_bruteforce,
    jump_variation_gap,
    split_intervals,
    vq_norm_bruteforce,
    vq_norm_exact,
)


def scalar_family(values, times=None):
    return TimeFamily.from_scalars(values, times)


def random_family(rng, n_max=12, dim_max=3):
    n = int(rng.integers(1, n_max + 1))
    dim = int(rng.integers(1, dim_max + 1))
    r = float(rng.choice([1.0, 2.0, 3.0, np.inf]))
    space = NormSpec(r=r, dim=dim)
    return TimeFamily(np.arange(1, n + 1, dtype=float),
                      rng.standard_normal((n, dim)), space)


class TestVqNorm:
    def test_singleton(self):
        fam = scalar_family([2.0])
        for q in (1.0, 2.0, 5.0):
            assert vq_norm_exact(fam, q) == pytest.approx(2.0)
            assert vq_norm_bruteforce(fam, q) == pytest.approx(2.0)

    def test_constant_family(self):
        fam = scalar_family([1.5, 1.5, 1.5])
        assert vq_norm_exact(fam, 2.0) == pytest.approx(1.5)
        assert vq_norm_bruteforce(fam, 3.0) == pytest.approx(1.5)

    def test_zigzag(self):
        fam = scalar_family([0.0, 1.0, 0.0, 1.0])
        assert vq_norm_exact(fam, 2.0) == pytest.approx(math.sqrt(3.0))
        assert vq_norm_bruteforce(fam, 2.0) == pytest.approx(math.sqrt(3.0))

    def test_v1_example(self):
        assert vq_norm_exact(scalar_family([1.0, 3.0, 2.0]), 1.0) == pytest.approx(4.0)

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            fam = random_family(rng)
            for q in (1.0, 2.0, 2.5, 4.0):
                a, b = vq_norm_exact(fam, q), vq_norm_bruteforce(fam, q)
                assert abs(a - b) <= 1e-12 * max(1.0, b)

    def test_monotone_in_q(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            fam = random_family(rng)
            vals = [vq_norm_exact(fam, q) for q in (1.0, 1.5, 2.0, 4.0, 16.0)]
            assert all(a >= b - 1e-10 for a, b in zip(vals, vals[1:]))

    def test_subfamily_monotonicity(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            fam = random_family(rng, n_max=10)
            if len(fam) < 2:
                continue
            keep = sorted(rng.choice(len(fam), size=len(fam) - 1, replace=False))
            sub = TimeFamily(fam.times[keep], fam.values[keep], fam.space)
            for q in (1.5, 3.0):
                assert vq_norm_exact(sub, q) <= vq_norm_exact(fam, q) + 1e-12

    def test_rejects_bad_input(self):
        fam = scalar_family([0.0, 1.0])
        with pytest.raises(ValueError):
            vq_norm_exact(fam, math.inf)
        with pytest.raises(ValueError):
            vq_norm_exact(fam, 0.9)
        with pytest.raises(ValueError):
            TimeFamily(np.array([2.0, 1.0]), np.zeros((2, 1)), NormSpec(r=2.0, dim=1))
        with pytest.raises(ValueError):
            TimeFamily(np.array([]), np.zeros((0, 1)), NormSpec(r=2.0, dim=1))
        big = TimeFamily(np.arange(1.0, 20.0), np.zeros((19, 1)), NormSpec(r=2.0, dim=1))
        with pytest.raises(ValueError):
            vq_norm_bruteforce(big, 2.0)


class TestJumpCount:
    def test_zigzag(self):
        fam = scalar_family([0.0, 1.0, 0.0, 1.0])
        assert jump_count(fam, 0.5) == 3
        assert jump_count_bruteforce(fam, 0.5) == 3
        assert jump_count_bruteforce(fam, 1.5) == 0

    def test_strict_threshold(self):
        assert jump_count(scalar_family([0.0, 1.0]), 1.0) == 0

    def test_constant(self):
        assert jump_count(scalar_family([2.0, 2.0, 2.0]), 0.1) == 0

    def test_monotone_staircase(self):
        assert jump_count(scalar_family([0.0, 1.0, 2.0, 3.0]), 0.9) == 3
        assert jump_count_bruteforce(scalar_family([0.0, 1.0, 2.0, 3.0]), 0.9) == 3

    def test_greedy_matches_bruteforce(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            fam = random_family(rng)
            lam = float(rng.uniform(0.05, 2.5))
            assert jump_count(fam, lam) == jump_count_bruteforce(fam, lam)

    def test_gap_examples(self):
        fam = scalar_family([0.0, 1.0, 0.0, 1.0])
        assert jump_variation_gap(fam, 0.5, 2.0) == pytest.approx(2.25)
        single = scalar_family([3.0])
        assert jump_variation_gap(single, 1.0, 2.0) == pytest.approx(9.0)

    def test_gap_nonnegative(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            fam = random_family(rng)
            lam = float(rng.uniform(0.05, 2.5))
            q = float(rng.choice([1.0, 2.0, 3.0]))
            assert jump_variation_gap(fam, lam, q) >= 0.0

    def test_size_guard(self):
        fam = scalar_family(list(range(15)))
        with pytest.raises(ValueError):
            jump_count_bruteforce(fam, 0.5)


class TestSplitIntervals:
    def test_one_to_ten(self):
        split = split_intervals([1.0, 10.0])
        assert split.long == [(2.0, 8.0)]
        assert split.long_exponents == [(1, 3)]
        assert split.short_by_block[0] == [(1.0, 2.0)]
        assert split.short_by_block[3] == [(8.0, 10.0)]

    def test_no_power(self):
        split = split_intervals([2.5, 3.5])
        assert split.long == []
        assert split.short_by_block == {1: [(2.5, 3.5)]}

    def test_multi_interval(self):
        split = split_intervals([1.5, 3.0, 5.0, 9.0])
        assert split.long == []
        merged = split.all_intervals()
        assert merged == [(1.5, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0),
                          (5.0, 8.0), (8.0, 9.0)]

    def test_power_endpoint_dropped(self):
        # right endpoint exactly a power of two leaves no upper short piece
        split = split_intervals([3.0, 8.0])
        assert split.long == [(4.0, 8.0)]
        assert split.short_by_block == {1: [(3.0, 4.0)]}

    def test_disjoint_cover(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            n = int(rng.integers(2, 10))
            times = np.sort(rng.uniform(0.01, 600.0, size=n))
            times = np.unique(times)
            if times.size < 2:
                continue
            split = split_intervals(times)
            pieces = split.all_intervals()
            # pairwise disjoint, ordered, and covering the original union
            assert all(a < b for a, b in pieces)
            for (_, b1), (a2, _) in zip(pieces, pieces[1:]):
                assert b1 == pytest.approx(a2, abs=0.0)
            assert pieces[0][0] == times[0]
            assert pieces[-1][1] == times[-1]
            for lo, hi in split.long:
                assert math.log2(lo) == int(math.log2(lo))
                assert math.log2(hi) == int(math.log2(hi))
            for k, blocks in split.short_by_block.items():
                for lo, hi in blocks:
                    assert 2.0 ** k <= lo < hi <= 2.0 ** (k + 1)

    def test_rejects_bad_times(self):
        with pytest.raises(ValueError):
            split_intervals([3.0])
        with pytest.raises(ValueError):
            split_intervals([3.0, 2.0])
        with pytest.raises(ValueError):
            split_intervals([-1.0, 2.0])


def _interp(fam: TimeFamily, t: float) -> np.ndarray:
    return np.array([
        np.interp(t, fam.times, fam.values[:, j]) for j in range(fam.space.dim)
    ])


def test_master_split_inequality_sequence_level():
    """Each partition gap splits into at most three pieces, so the original
    l^q gap aggregate is at most 3x the short plus long aggregates (values
    at power-of-two cut points taken by linear interpolation)."""
    rng = np.random.default_rng(13)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        times = np.unique(np.sort(rng.uniform(0.5, 80.0, size=n)))
        if times.size < 2:
            continue
        fam = TimeFamily(times, rng.standard_normal((times.size, 2)),
                         NormSpec(r=2.0, dim=2))
        q = float(rng.choice([1.5, 2.0, 4.0]))
        split = split_intervals(times)
        orig = seq_lq([fam.space.norm(_interp(fam, b) - _interp(fam, a))
                       for a, b in zip(times[:-1], times[1:])], q)
        short_gaps = [fam.space.norm(_interp(fam, hi) - _interp(fam, lo))
                      for blocks in split.short_by_block.values()
                      for lo, hi in blocks]
        long_gaps = [fam.space.norm(_interp(fam, hi) - _interp(fam, lo))
                     for lo, hi in split.long]
        assert orig <= 3.0 * (seq_lq(short_gaps, q) + seq_lq(long_gaps, q)) + 1e-12


def test_interval_split_dataclass_defaults():
    split = IntervalSplit()
    assert split.all_intervals() == []
