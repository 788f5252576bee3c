"""Sample splitting and the candidate estimator families.

Families built on the training sample:

- regular histograms, bin count 1..ceil(n1/log n1), on [min, max] of the data;
- maximum-likelihood irregular histograms (dynamic program over a midpoint
  grid), bin count 1..min(100, ceil(n1/log n1));
- Gaussian kernel estimates with bandwidths range/(2j), j = 1..ceil(n1/log n1);
- moment-fit parametric estimates (gaussian, exponential, lognormal,
  chi-square, gamma, beta) plus the ML uniform fit, with infeasible families
  silently dropped;
- the unions S_C = S_R+S_I, S_1 = S_C+S_K, S_2 = S_1+S_P.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _backend
from .densities import Density, GaussianKde, HistogramDensity, ParametricDensity
from .metrics import DEFAULT_QUAD, QuadratureSpec, hellinger_sq

__all__ = [
    "SampleSplit",
    "split_sample",
    "family_size",
    "fit_regular_histograms",
    "fit_irregular_histograms",
    "fit_kernel_estimates",
    "fit_parametric",
    "build_family",
    "CandidateSet",
    "histogram_log_likelihood",
    "DegenerateDataError",
    "FAMILY_TAGS",
]

# Irregular-histogram breakpoint grid: order-statistic midpoints thinned to
# at most this many candidates (keeps the DP at ~300^2 x 100 cells).
MAX_GRID_BREAKPOINTS = 300

FAMILY_TAGS = ("S_R", "S_I", "S_K", "S_P", "S_C", "S_1", "S_2")


class DegenerateDataError(ValueError):
    """Training data cannot support the requested family (e.g. zero range)."""


@dataclass(frozen=True)
class SampleSplit:
    """Random split of a sorted sample into training and validation parts."""

    full: np.ndarray
    training: np.ndarray
    validation: np.ndarray
    p: float
    seed: int

    @property
    def n(self) -> int:
        return self.full.size

    @property
    def n1(self) -> int:
        return self.training.size


def split_sample(x, p: float, seed: int = 0) -> SampleSplit:
    """Uniformly random p/(1-p) partition via a seeded shuffle.

    The training size is the integer part of p*n; both parts are returned
    sorted.  Deterministic given the seed.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("observations must be finite")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    n1 = int(math.floor(p * n))
    if not 1 <= n1 <= n - 1:
        raise ValueError(f"degenerate split sizes: n1={n1}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return SampleSplit(
        full=x,
        training=np.sort(x[perm[:n1]]),
        validation=np.sort(x[perm[n1:]]),
        p=float(p),
        seed=int(seed),
    )


def family_size(n1: int) -> int:
    """ceil(n1 / log n1), the common family-size formula."""
    return int(math.ceil(n1 / math.log(n1)))


def _data_range(x_t: np.ndarray) -> tuple[float, float]:
    lo, hi = float(x_t[0]), float(x_t[-1])
    if not hi > lo:
        raise DegenerateDataError("all training observations are equal")
    return lo, hi


def fit_regular_histograms(x_t) -> list[HistogramDensity]:
    """Equal-width histograms on [min, max] with 1..ceil(n1/log n1) bins."""
    x_t = np.sort(np.asarray(x_t, dtype=np.float64))
    n1 = x_t.size
    if n1 < 2:
        raise ValueError("need at least 2 training observations")
    lo, hi = _data_range(x_t)
    out = []
    for d in range(1, family_size(n1) + 1):
        counts, edges = np.histogram(x_t, bins=d, range=(lo, hi))
        out.append(HistogramDensity(edges, counts / n1))
    return out


def histogram_log_likelihood(hist: HistogramDensity, x) -> float:
    """Sum of log pdf over x; -inf when any point has zero density."""
    v = hist.pdf(np.asarray(x, dtype=np.float64))
    if np.any(v <= 0):
        return -math.inf
    return float(np.sum(np.log(v)))


def _breakpoint_grid(x_t: np.ndarray) -> np.ndarray:
    """Interior breakpoint candidates: thinned midpoints of distinct values."""
    distinct = np.unique(x_t)
    mids = 0.5 * (distinct[:-1] + distinct[1:])
    if mids.size > MAX_GRID_BREAKPOINTS:
        take = np.unique(np.round(np.linspace(0, mids.size - 1, MAX_GRID_BREAKPOINTS)).astype(int))
        mids = mids[take]
    return mids


def fit_irregular_histograms(x_t) -> list[HistogramDensity]:
    """Maximum-likelihood irregular histograms for each bin count.

    For each D in 1..min(100, ceil(n1/log n1)) the breakpoint subset of the
    candidate grid maximizing the training log-likelihood among all D-cell
    partitions, found by dynamic programming.  The family is truncated at the
    largest feasible D when the grid is too coarse.
    """
    x_t = np.sort(np.asarray(x_t, dtype=np.float64))
    n1 = x_t.size
    if n1 < 2:
        raise ValueError("need at least 2 training observations")
    lo, hi = _data_range(x_t)
    edges = np.concatenate(([lo], _breakpoint_grid(x_t), [hi]))
    n_edges = edges.size

    # cum[k] = #observations <= edges[k], forced to 0 at the left boundary so
    # the first (left-closed) cell picks up observations equal to the minimum
    cum = np.searchsorted(x_t, edges, side="right").astype(np.float64)
    cum[0] = 0.0

    counts = cum[None, :] - cum[:, None]
    widths = edges[None, :] - edges[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cell_ll = np.where(
            counts > 0, counts * (np.log(counts) - np.log(n1 * widths)), 0.0
        )
    cell_ll[np.tril_indices(n_edges)] = -np.inf

    dmax = min(100, family_size(n1), n_edges - 1)
    best, back = _backend.dp_partition(np.ascontiguousarray(cell_ll), dmax)

    out = []
    for d in range(1, dmax + 1):
        cut = [n_edges - 1]
        for k in range(d, 0, -1):
            cut.append(int(back[k, cut[-1]]))
        cut = np.array(cut[::-1])
        sub = edges[cut]
        masses = (cum[cut[1:]] - cum[cut[:-1]]) / n1
        out.append(HistogramDensity(sub, masses))
    return out


def fit_kernel_estimates(x_t) -> list[GaussianKde]:
    """Gaussian kernel estimates with bandwidths range/(2j), j=1..ceil(n1/log n1)."""
    x_t = np.sort(np.asarray(x_t, dtype=np.float64))
    n1 = x_t.size
    if n1 < 2:
        raise ValueError("need at least 2 training observations")
    lo, hi = _data_range(x_t)
    rng_width = hi - lo
    return [GaussianKde(x_t, rng_width / (2.0 * j)) for j in range(1, family_size(n1) + 1)]


def fit_parametric(x_t) -> list[ParametricDensity]:
    """Moment-method parametric fits plus the ML uniform fit.

    Families whose domain excludes any observation (or whose moment inversion
    leaves the valid parameter region) are silently dropped; gaussian and
    uniform always fit for non-degenerate data.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.size < 2:
        raise ValueError("need at least 2 training observations")
    lo, hi = _data_range(np.sort(x_t))
    m = float(np.mean(x_t))
    v = float(np.var(x_t, ddof=1))
    out: list[ParametricDensity] = []

    def _try(family, params):
        try:
            out.append(ParametricDensity(family, params))
        except ValueError:
            pass

    _try("gaussian", (m, math.sqrt(v)))
    if lo >= 0.0:
        _try("exponential", (1.0 / m,) if m > 0 else (math.nan,))
    if lo > 0.0:
        lx = np.log(x_t)
        _try("lognormal", (float(np.mean(lx)), float(np.std(lx, ddof=1))))
    if lo >= 0.0:
        _try("chisquare", (m,))
        if v > 0:
            _try("gamma", (m * m / v, m / v))
    if lo > 0.0 and hi < 1.0:
        t = m * (1.0 - m) / v - 1.0
        _try("beta", (m * t, (1.0 - m) * t))
    _try("uniform", (lo, hi))
    return out


class CandidateSet:
    """Indexed family of candidate densities with a lazy Hellinger matrix.

    Indices are 0-based.  Distance entries are filled on first use (under a
    lock) and are immutable afterwards; ``distance`` returns the Hellinger
    distance h, ``h2`` its square.
    """

    def __init__(self, members, labels=None, recipes=None, quad: QuadratureSpec = DEFAULT_QUAD):
        self.members: tuple[Density, ...] = tuple(members)
        m = len(self.members)
        if m < 1:
            raise ValueError("need at least one candidate")
        self.labels = tuple(labels) if labels is not None else tuple(
            f"candidate {i}" for i in range(m)
        )
        self.recipes = tuple(recipes) if recipes is not None else tuple((None,) for _ in range(m))
        if len(self.labels) != m or len(self.recipes) != m:
            raise ValueError("labels/recipes must match members")
        self.quad = quad
        self._h2 = np.full((m, m), np.nan)
        np.fill_diagonal(self._h2, 0.0)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.members)

    def h2(self, i: int, j: int) -> float:
        v = self._h2[i, j]
        if not np.isnan(v):
            return float(v)
        computed = hellinger_sq(self.members[i], self.members[j], self.quad)
        with self._lock:
            if np.isnan(self._h2[i, j]):
                self._h2[i, j] = computed
                self._h2[j, i] = computed
        return float(self._h2[i, j])

    def distance(self, i: int, j: int) -> float:
        return math.sqrt(self.h2(i, j))

    def distance_row(self, i: int) -> np.ndarray:
        """Hellinger distances from candidate i to every candidate."""
        for j in range(len(self)):
            self.h2(i, j)
        return np.sqrt(self._h2[i])

    def distance_matrix(self) -> np.ndarray:
        for i in range(len(self)):
            self.distance_row(i)
        return np.sqrt(self._h2)


def _parts_for_tag(tag: str):
    canon = tag.replace("_", "").upper()
    table = {
        "SR": ("SR",),
        "SI": ("SI",),
        "SK": ("SK",),
        "SP": ("SP",),
        "SC": ("SR", "SI"),
        "S1": ("SR", "SI", "SK"),
        "S2": ("SR", "SI", "SK", "SP"),
    }
    if canon not in table:
        raise ValueError(f"unknown family tag {tag!r}")
    return table[canon]


def build_family(tag: str, x_t, quad: QuadratureSpec = DEFAULT_QUAD) -> CandidateSet:
    """Build the named candidate family (or union) on the training sample."""
    members: list[Density] = []
    labels: list[str] = []
    recipes: list[tuple] = []
    for part in _parts_for_tag(tag):
        if part == "SR":
            fits = fit_regular_histograms(x_t)
            for d, h in enumerate(fits, start=1):
                members.append(h)
                labels.append(f"SR D={d}")
                recipes.append(("SR", d))
        elif part == "SI":
            fits = fit_irregular_histograms(x_t)
            for d, h in enumerate(fits, start=1):
                members.append(h)
                labels.append(f"SI D={d}")
                recipes.append(("SI", d))
        elif part == "SK":
            kdes = fit_kernel_estimates(x_t)
            for j, k in enumerate(kdes, start=1):
                members.append(k)
                labels.append(f"SK j={j} h={k.bandwidth:.6g}")
                recipes.append(("SK", j))
        else:
            for est in fit_parametric(x_t):
                members.append(est)
                labels.append(f"SP {est.family}")
                recipes.append(("SP", est.family))
    return CandidateSet(members, labels, recipes, quad=quad)
