"""Hold-out selection of density estimators via robust pairwise tests.

The selection step compares candidate densities pairwise on the validation
sample and picks the candidate whose worst defeat (in Hellinger distance) is
smallest.  The exact ball-intersection search computes that minimizer with
far fewer tests than the naive quadratic scan; a lossy variant prunes
near-duplicates below delta = c/sqrt(|validation|).  Classical least-squares
and Kullback-Leibler hold-out baselines, the candidate families, a
Monte-Carlo risk/complexity harness and a CLI round out the package.
"""

from ._backend import BACKEND_NAME, HAVE_COMPILED
from .densities import (
    Density,
    DensityError,
    GaussianKde,
    HistogramDensity,
    MixtureDensity,
    ParametricDensity,
    ScipyReference,
    TruncatedCauchy,
)
from .metrics import (
    DEFAULT_QUAD,
    QuadratureError,
    QuadratureSpec,
    hellinger_sq,
    integrate_pdf,
    lq_distance,
    sq_l2_norm,
)
from .estimators import (
    CandidateSet,
    DegenerateDataError,
    SampleSplit,
    build_family,
    family_size,
    fit_irregular_histograms,
    fit_kernel_estimates,
    fit_parametric,
    fit_regular_histograms,
    histogram_log_likelihood,
    split_sample,
)
from .robust_tests import (
    PairDecision,
    TestCache,
    TestKind,
    baraud_statistic,
    birge_statistic,
    decide,
)
from .selection import (
    SelectionOutcome,
    approx_select,
    brute_force_select,
    classical_ho_select,
    complexity_ratio,
    crit_D,
    exact_select,
)
from .bench import (
    BenchmarkDensity,
    ExperimentConfig,
    RiskReport,
    builtin_densities,
    complexity_slope,
    empirical_quantile,
    empirical_risk,
    normalized_log2_ratio,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "HAVE_COMPILED",
    "Density",
    "DensityError",
    "GaussianKde",
    "HistogramDensity",
    "MixtureDensity",
    "ParametricDensity",
    "ScipyReference",
    "TruncatedCauchy",
    "DEFAULT_QUAD",
    "QuadratureError",
    "QuadratureSpec",
    "hellinger_sq",
    "integrate_pdf",
    "lq_distance",
    "sq_l2_norm",
    "CandidateSet",
    "DegenerateDataError",
    "SampleSplit",
    "build_family",
    "family_size",
    "fit_irregular_histograms",
    "fit_kernel_estimates",
    "fit_parametric",
    "fit_regular_histograms",
    "histogram_log_likelihood",
    "split_sample",
    "PairDecision",
    "TestCache",
    "TestKind",
    "baraud_statistic",
    "birge_statistic",
    "decide",
    "SelectionOutcome",
    "approx_select",
    "brute_force_select",
    "classical_ho_select",
    "complexity_ratio",
    "crit_D",
    "exact_select",
    "BenchmarkDensity",
    "ExperimentConfig",
    "RiskReport",
    "builtin_densities",
    "complexity_slope",
    "empirical_quantile",
    "empirical_risk",
    "normalized_log2_ratio",
    "run_experiment",
    "__version__",
]
