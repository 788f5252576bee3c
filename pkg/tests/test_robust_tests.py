"""Pairwise test statistics and the cached decision rule."""

import math

import numpy as np
import pytest

from tholdout.densities import GaussianKde, HistogramDensity
from tholdout.estimators import CandidateSet, build_family, split_sample
from tholdout.metrics import QuadratureSpec, hellinger_sq
from tholdout.robust_tests import (
    TestCache,
    TestKind,
    baraud_statistic,
    birge_statistic,
    decide,
)

U01 = HistogramDensity([0.0, 1.0], [1.0])
U02 = HistogramDensity([0.0, 2.0], [1.0])

LIGHT_QUAD = QuadratureSpec(panels=16, refine=8, tol=1e-5, max_doublings=2)


def random_pair(rng):
    """A histogram/KDE pair built on random training data."""
    x = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), int(rng.integers(25, 60)))
    fam = build_family(rng.choice(["S_R", "S_K", "S_C"]), x, quad=LIGHT_QUAD)
    i, j = rng.choice(len(fam), size=2, replace=False)
    return fam.members[i], fam.members[j]


class TestTestKind:
    def test_theta_domain(self):
        TestKind.birge(0.25)
        TestKind.birge(0.0)  # diagnostic likelihood-ratio mode
        with pytest.raises(ValueError):
            TestKind.birge(0.5)
        with pytest.raises(ValueError):
            TestKind("nope")


class TestBirgeStatistic:
    def test_identical_densities_give_zero(self):
        x_v = np.array([0.1, 0.4, 0.9])
        same = HistogramDensity([0.0, 1.0], [1.0])
        assert birge_statistic(U01, same, x_v, 0.25, 1e-4) == 0.0

    def test_swap_negates_exactly(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            s_i, s_j = random_pair(rng)
            h2 = hellinger_sq(s_i, s_j, LIGHT_QUAD)
            if h2 == 0.0:
                continue
            x_v = rng.normal(size=40)
            t_ij = birge_statistic(s_i, s_j, x_v, 0.25, h2)
            t_ji = birge_statistic(s_j, s_i, x_v, 0.25, h2)
            assert abs(t_ij + t_ji) <= 1e-12

    def test_theta_zero_is_half_log_likelihood_ratio(self):
        x_v = np.array([0.3, 0.6, 0.8])
        h2 = hellinger_sq(U01, U02)
        t = birge_statistic(U01, U02, x_v, 0.0, h2)
        ll_i = np.sum(np.log(U01.pdf(x_v)))
        ll_j = np.sum(np.log(U02.pdf(x_v)))
        assert t == pytest.approx(0.5 * (ll_j - ll_i), abs=1e-12)

    def test_one_sided_zero_saturates(self):
        x_v = np.array([1.5])  # outside U01's support, inside U02's
        h2 = hellinger_sq(U01, U02)
        t = birge_statistic(U01, U02, x_v, 0.0, h2)
        assert t >= 1e299

    def test_rejects_zero_h2(self):
        with pytest.raises(ValueError):
            birge_statistic(U01, U02, np.array([0.5]), 0.25, 0.0)


class TestBaraudStatistic:
    def test_identical_densities_give_zero(self):
        same = HistogramDensity([0.0, 1.0], [1.0])
        assert baraud_statistic(U01, same, np.array([0.2, 0.7])) == 0.0

    def test_toy_value_frozen_from_independent_evaluation(self):
        # r = 0.75 on [0,1], 0.25 on (1,2]; deterministic part
        # (1 - sqrt(3)/2) - (1 - sqrt(3/8) - sqrt(1/8)); empirical part
        # 0.5 * ((sqrt(.5)-1)/sqrt(.75) + sqrt(.5)/sqrt(.25))
        t = baraud_statistic(U01, U02, np.array([0.5, 1.5]))
        assert t == pytest.approx(0.63790522496541441624, abs=1e-12)

    def test_swap_negates_exactly(self):
        rng = np.random.default_rng(22)
        for _ in range(25):
            s_i, s_j = random_pair(rng)
            x_v = rng.normal(size=30)
            t_ij = baraud_statistic(s_i, s_j, x_v, LIGHT_QUAD)
            t_ji = baraud_statistic(s_j, s_i, x_v, LIGHT_QUAD)
            assert abs(t_ij + t_ji) <= 1e-12


class TestDecide:
    @pytest.fixture
    def family(self):
        x = np.random.default_rng(23).normal(size=80)
        split = split_sample(x, 0.5, seed=0)
        fam = build_family("S_C", split.training, quad=LIGHT_QUAD)
        return fam, split.validation

    def test_cache_contract(self, family):
        fam, x_v = family
        cache = TestCache()
        kind = TestKind.birge()
        first = decide(0, 3, fam, x_v, kind, cache)
        assert cache.count == 1
        again = decide(0, 3, fam, x_v, kind, cache)
        assert cache.count == 1
        assert again is first

    def test_order_invariant(self, family):
        fam, x_v = family
        cache = TestCache()
        kind = TestKind.birge()
        assert decide(5, 2, fam, x_v, kind, cache).winner == decide(
            2, 5, fam, x_v, kind, cache
        ).winner
        assert cache.count == 1

    def test_zero_distance_tie_goes_to_lower_index(self, family):
        fam, x_v = family
        # S_C contains the one-cell histogram twice (regular and irregular)
        m = len(fam) // 2
        assert fam.distance(0, m) == 0.0
        dec = decide(m, 0, fam, x_v, TestKind.birge(), TestCache())
        assert dec.winner == 0
        assert dec.statistic == 0.0

    def test_validation_order_does_not_change_winner(self, family):
        fam, x_v = family
        kind = TestKind.birge()
        shuffled = np.random.default_rng(9).permutation(x_v)
        a = decide(1, 7, fam, x_v, kind, TestCache())
        b = decide(1, 7, fam, shuffled, kind, TestCache())
        assert a.winner == b.winner

    def test_requires_distinct_indices(self, family):
        fam, x_v = family
        with pytest.raises(ValueError):
            decide(2, 2, fam, x_v, TestKind.birge(), TestCache())

    def test_baraud_kind_also_decides(self, family):
        fam, x_v = family
        dec = decide(0, 5, fam, x_v, TestKind.baraud(), TestCache())
        assert dec.winner in (0, 5)


class TestThetaZeroReduction:
    def test_winner_matches_validation_likelihood(self):
        rng = np.random.default_rng(24)
        kind = TestKind.birge(0.0)
        checked = 0
        while checked < 40:
            x = rng.normal(size=60)
            split = split_sample(x, 0.5, seed=int(rng.integers(1 << 31)))
            fam = build_family("S_R", split.training, quad=LIGHT_QUAD)
            i, j = sorted(rng.choice(len(fam), size=2, replace=False))
            if fam.distance(i, j) == 0.0:
                continue
            with np.errstate(divide="ignore"):
                ll_i = float(np.sum(np.log(fam.members[i].pdf(split.validation))))
                ll_j = float(np.sum(np.log(fam.members[j].pdf(split.validation))))
            if ll_i == ll_j or (math.isinf(ll_i) and math.isinf(ll_j)):
                continue
            dec = decide(i, j, fam, split.validation, kind, TestCache())
            assert dec.winner == (i if ll_i >= ll_j else j)
            checked += 1
