"""Sample splitting and estimator family construction."""

import itertools
import math

import numpy as np
import pytest

from tholdout.densities import HistogramDensity
from tholdout.estimators import (
    DegenerateDataError,
    build_family,
    family_size,
    fit_irregular_histograms,
    fit_kernel_estimates,
    fit_parametric,
    fit_regular_histograms,
    histogram_log_likelihood,
    split_sample,
)
from tholdout.metrics import integrate_pdf


class TestSplitSample:
    @pytest.mark.parametrize(
        "n,p,expected",
        [(100, 0.5, (50, 50)), (100, 2 / 3, (66, 34)), (250, 0.75, (187, 63))],
    )
    def test_sizes_use_integer_part(self, n, p, expected):
        x = np.random.default_rng(0).normal(size=n)
        split = split_sample(x, p, seed=1)
        assert (split.n1, split.n - split.n1) == expected

    def test_partition_reconstructs_sample(self):
        x = np.random.default_rng(1).normal(size=101)
        split = split_sample(x, 0.3, seed=9)
        merged = np.sort(np.concatenate([split.training, split.validation]))
        assert np.array_equal(merged, np.sort(x))

    def test_deterministic_given_seed(self):
        x = np.random.default_rng(2).normal(size=60)
        a = split_sample(x, 0.5, seed=5)
        b = split_sample(x, 0.5, seed=5)
        assert np.array_equal(a.training, b.training)
        assert not np.array_equal(
            a.training, split_sample(x, 0.5, seed=6).training
        )

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            split_sample([1.0, 2.0, 3.0], 0.5)
        with pytest.raises(ValueError):
            split_sample(np.arange(10.0), 0.05)
        with pytest.raises(ValueError):
            split_sample(np.array([1.0, 2.0, np.nan, 3.0]), 0.5)


class TestRegularHistograms:
    @pytest.mark.parametrize("n1,count", [(66, 16), (50, 13), (500, 81)])
    def test_family_size_formula(self, n1, count):
        assert family_size(n1) == count
        x = np.random.default_rng(n1).normal(size=n1)
        assert len(fit_regular_histograms(x)) == count

    def test_first_member_is_uniform_on_range(self):
        x = np.random.default_rng(3).uniform(2.0, 5.0, 40)
        h = fit_regular_histograms(x)[0]
        assert h.edges == pytest.approx([x.min(), x.max()])
        assert h.masses == pytest.approx([1.0])

    def test_all_members_normalized(self):
        x = np.random.default_rng(4).normal(size=80)
        for h in fit_regular_histograms(x):
            assert integrate_pdf(h) == pytest.approx(1.0, abs=1e-8)

    def test_all_equal_raises(self):
        with pytest.raises(DegenerateDataError):
            fit_regular_histograms(np.full(20, 3.25))


def brute_force_best_ll(x, edges, n_cells):
    """Exhaustive max log-likelihood over all n_cells partitions of the grid."""
    interior = edges[1:-1]
    best = -math.inf
    for cuts in itertools.combinations(range(len(interior)), n_cells - 1):
        cells = np.concatenate(([edges[0]], interior[list(cuts)], [edges[-1]]))
        counts, _ = np.histogram(x, bins=cells)
        h = HistogramDensity(cells, counts / x.size)
        best = max(best, histogram_log_likelihood(h, x))
    return best


class TestIrregularHistograms:
    def test_single_cell_is_uniform(self):
        x = np.random.default_rng(5).normal(size=30)
        h = fit_irregular_histograms(x)[0]
        assert h.edges == pytest.approx([x.min(), x.max()])
        assert histogram_log_likelihood(h, x) == pytest.approx(
            -x.size * math.log(x.max() - x.min())
        )

    def test_two_cells_match_exhaustive_search(self):
        x = np.array([0.0, 0.1, 0.2, 2.0, 2.1])
        fits = fit_irregular_histograms(x)
        grid = np.concatenate(
            ([x.min()], 0.5 * (np.unique(x)[:-1] + np.unique(x)[1:]), [x.max()])
        )
        want = brute_force_best_ll(x, grid, 2)
        got = histogram_log_likelihood(fits[1], x)
        assert got == pytest.approx(want, abs=1e-12)

    def test_dp_dominates_random_partitions(self):
        rng = np.random.default_rng(6)
        x = np.sort(rng.normal(size=60))
        fits = fit_irregular_histograms(x)
        grid = np.concatenate(
            ([x.min()], 0.5 * (np.unique(x)[:-1] + np.unique(x)[1:]), [x.max()])
        )
        interior = grid[1:-1]
        for d in (2, 3, 5, 8):
            best = histogram_log_likelihood(fits[d - 1], x)
            for _ in range(50):
                cuts = np.sort(rng.choice(interior.size, size=d - 1, replace=False))
                cells = np.concatenate(([grid[0]], interior[cuts], [grid[-1]]))
                counts, _ = np.histogram(x, bins=cells)
                rival = HistogramDensity(cells, counts / x.size)
                assert best >= histogram_log_likelihood(rival, x) - 1e-9

    def test_log_likelihood_nondecreasing_in_cells(self):
        x = np.random.default_rng(7).normal(size=90)
        lls = [histogram_log_likelihood(h, x) for h in fit_irregular_histograms(x)]
        assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))

    def test_family_size_capped(self):
        x = np.random.default_rng(8).normal(size=1100)
        fits = fit_irregular_histograms(x)
        assert len(fits) == min(100, family_size(1100))


class TestKernelEstimates:
    def test_bandwidth_formula(self):
        x = np.concatenate([[0.0, 10.0], np.random.default_rng(9).uniform(0, 10, 48)])
        kdes = fit_kernel_estimates(x)
        assert len(kdes) == family_size(50)
        assert kdes[0].bandwidth == pytest.approx(5.0)
        assert kdes[4].bandwidth == pytest.approx(1.0)

    def test_zero_range_raises(self):
        with pytest.raises(DegenerateDataError):
            fit_kernel_estimates(np.full(12, 1.0))


class TestParametricFits:
    def test_gaussian_and_uniform_on_tiny_sample(self):
        fits = {f.family: f for f in fit_parametric(np.array([1.0, 2.0, 3.0]))}
        assert fits["gaussian"].params == pytest.approx((2.0, 1.0))
        assert fits["uniform"].params == pytest.approx((1.0, 3.0))

    def test_domain_violations_drop_families(self):
        fits = {f.family for f in fit_parametric(np.array([-1.0, 0.0, 1.0]))}
        assert fits == {"gaussian", "uniform"}

    def test_positive_data_enables_positive_families(self):
        x = np.random.default_rng(10).gamma(3.0, 1.0, 200)
        fits = {f.family for f in fit_parametric(x)}
        assert {"gaussian", "exponential", "lognormal", "chisquare", "gamma", "uniform"} <= fits
        assert "beta" not in fits

    def test_unit_interval_data_enables_beta(self):
        x = np.random.default_rng(11).beta(2.0, 2.0, 200)
        fits = {f.family for f in fit_parametric(x)}
        assert "beta" in fits

    def test_moment_order(self):
        families = [f.family for f in fit_parametric(np.random.default_rng(12).beta(2, 2, 50))]
        assert families == sorted(
            families,
            key=["gaussian", "exponential", "lognormal", "chisquare", "gamma", "beta", "uniform"].index,
        )


class TestBuildFamily:
    def test_union_counts(self):
        x = np.random.default_rng(13).normal(size=66)
        assert len(build_family("S_C", x)) == 32
        assert len(build_family("S_R", x)) == 16
        assert len(build_family("S_1", x)) == 48

    def test_s2_always_contains_gaussian_and_uniform(self):
        x = np.random.default_rng(14).normal(size=40)
        labels = build_family("S_2", x).labels
        assert "SP gaussian" in labels and "SP uniform" in labels

    def test_tag_normalization_and_validation(self):
        x = np.random.default_rng(15).normal(size=30)
        assert len(build_family("SC", x)) == len(build_family("S_C", x))
        with pytest.raises(ValueError):
            build_family("S_9", x)

    def test_every_member_normalized(self):
        x = np.random.default_rng(16).gamma(2.0, 1.0, 60)
        fam = build_family("S_2", x)
        for member in fam.members:
            assert integrate_pdf(member) == pytest.approx(1.0, abs=1e-8)

    def test_distance_matrix_lazy_and_symmetric(self):
        x = np.random.default_rng(17).normal(size=40)
        fam = build_family("S_R", x)
        d = fam.distance(0, 3)
        assert d == fam.distance(3, 0)
        mat = fam.distance_matrix()
        assert np.array_equal(mat, mat.T)
        assert np.all(np.diag(mat) == 0.0)
