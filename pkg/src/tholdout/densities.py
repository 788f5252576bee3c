"""Evaluatable univariate densities: histograms, Gaussian KDEs, parametrics, mixtures.

All densities are immutable after construction and expose the same small
surface used by the metric and testing layers:

- ``pdf(x)``             vectorized density values (0 outside the support),
- ``support``            the mathematical support, endpoints possibly infinite,
- ``integration_bounds`` a finite interval carrying all but ~1e-12 of the mass,
- ``breakpoints()``      discontinuities/kinks that quadrature must respect,
- ``singularities()``    points where the pdf is unbounded (integrable poles).

Kinds follow the tags {histogram, kernel, parametric, reference}.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import stats

from . import _backend

__all__ = [
    "Density",
    "DensityError",
    "HistogramDensity",
    "GaussianKde",
    "ParametricDensity",
    "MixtureDensity",
    "ScipyReference",
    "TruncatedCauchy",
    "PARAMETRIC_FAMILIES",
]

# Two-sided tail mass dropped when truncating an infinite (or singular)
# support for numerical integration.
TAIL_MASS = 1e-12

# Kernel evaluation support is the data range widened by this many bandwidths;
# the Gaussian mass beyond it is ~1.2e-15, far below quadrature tolerance.
KDE_RANGE_BANDWIDTHS = 8.0


class DensityError(ValueError):
    """Invalid density constructor arguments."""


class Density:
    """Base class; concrete densities implement ``pdf`` and the metadata."""

    kind = "reference"

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def pdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def integration_bounds(self) -> tuple[float, float]:
        raise NotImplementedError

    def singularities(self) -> tuple[float, ...]:
        return ()

    def refinement_points(self, k: int) -> np.ndarray:
        """Interior anchor points concentrating quadrature where mass lives."""
        lo, hi = self.integration_bounds()
        return np.linspace(lo, hi, k + 2)[1:-1]

    def sq_l2_norm_closed(self) -> float | None:
        """Closed-form squared L2 norm when one exists, else None."""
        return None


class HistogramDensity(Density):
    """Piecewise-constant density on strictly increasing breakpoints.

    ``masses`` are cell probabilities (renormalized to sum exactly to 1);
    the height on cell k is ``mass_k / width_k``.  Cells are left-closed,
    with the last cell closed on both sides.
    """

    def __init__(self, edges, masses, kind: str = "histogram"):
        edges = np.asarray(edges, dtype=np.float64)
        masses = np.asarray(masses, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise DensityError("breakpoints must be strictly increasing, length >= 2")
        if masses.shape != (edges.size - 1,):
            raise DensityError("need one mass per cell")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise DensityError("masses must be finite and nonnegative")
        total = float(masses.sum())
        if abs(total - 1.0) > 1e-8:
            raise DensityError(f"masses must sum to 1 (got {total!r})")
        self.kind = kind
        self.edges = edges
        self.edges.setflags(write=False)
        self.masses = masses / total
        self.masses.setflags(write=False)
        self._heights = self.masses / np.diff(edges)
        self._cum = np.concatenate(([0.0], np.cumsum(self.masses)))

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.edges[0]), float(self.edges[-1]))

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        idx = np.clip(idx, 0, self.edges.size - 2)
        out = self._heights[idx]
        inside = (x >= self.edges[0]) & (x <= self.edges[-1])
        return np.where(inside, out, 0.0)

    def cdf(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=np.float64), self.edges, self._cum)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        idx = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, self.masses.size - 1)
        widths = np.diff(self.edges)
        frac = (u - self._cum[idx]) / np.where(self.masses[idx] > 0, self.masses[idx], 1.0)
        return self.edges[idx] + frac * widths[idx]

    def breakpoints(self) -> np.ndarray:
        return self.edges

    def integration_bounds(self) -> tuple[float, float]:
        return self.support

    def sq_l2_norm_closed(self) -> float | None:
        return float(np.sum(self._heights * self._heights * np.diff(self.edges)))


class GaussianKde(Density):
    """Gaussian kernel estimate ``(1/(n h)) sum_i phi((x - c_i)/h)``."""

    kind = "kernel"

    def __init__(self, centers, bandwidth: float):
        centers = np.sort(np.asarray(centers, dtype=np.float64))
        if centers.size == 0 or not np.all(np.isfinite(centers)):
            raise DensityError("kernel centers must be finite and nonempty")
        if not (bandwidth > 0 and math.isfinite(bandwidth)):
            raise DensityError("bandwidth must be positive")
        self.centers = centers
        self.centers.setflags(write=False)
        self.bandwidth = float(bandwidth)

    def pdf(self, x) -> np.ndarray:
        return _backend.gauss_kde_pdf(self.centers, self.bandwidth, x)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        z = (x[..., None] - self.centers) / self.bandwidth
        return stats.norm.cdf(z).mean(axis=-1)

    def integration_bounds(self) -> tuple[float, float]:
        pad = KDE_RANGE_BANDWIDTHS * self.bandwidth
        return (float(self.centers[0] - pad), float(self.centers[-1] + pad))

    def refinement_points(self, k: int) -> np.ndarray:
        return np.quantile(self.centers, np.linspace(0.0, 1.0, k + 2)[1:-1])

    def sq_l2_norm_closed(self) -> float | None:
        # int phi_h(x-a) phi_h(x-b) dx = phi_{h*sqrt(2)}(a-b)
        diff = self.centers[:, None] - self.centers[None, :]
        s = self.bandwidth * math.sqrt(2.0)
        vals = np.exp(-0.5 * (diff / s) ** 2) / (s * math.sqrt(2 * math.pi))
        return float(vals.sum() / self.centers.size**2)


def _norm_frozen(p):
    return stats.norm(loc=p[0], scale=p[1])


def _expon_frozen(p):
    return stats.expon(scale=1.0 / p[0])


def _lognorm_frozen(p):
    return stats.lognorm(s=p[1], scale=math.exp(p[0]))


def _chi2_frozen(p):
    return stats.chi2(df=p[0])


def _gamma_frozen(p):
    return stats.gamma(a=p[0], scale=1.0 / p[1])


def _beta_frozen(p):
    return stats.beta(a=p[0], b=p[1])


def _uniform_frozen(p):
    return stats.uniform(loc=p[0], scale=p[1] - p[0])


# family -> (frozen factory, parameter validator, singular points, closed L2)
PARAMETRIC_FAMILIES = {
    "gaussian": (
        _norm_frozen,
        lambda p: len(p) == 2 and p[1] > 0,
        lambda p: (),
        lambda p: 1.0 / (2.0 * math.sqrt(math.pi) * p[1]),
    ),
    "exponential": (
        _expon_frozen,
        lambda p: len(p) == 1 and p[0] > 0,
        lambda p: (),
        lambda p: p[0] / 2.0,
    ),
    "lognormal": (
        _lognorm_frozen,
        lambda p: len(p) == 2 and p[1] > 0,
        lambda p: (),
        None,
    ),
    "chisquare": (
        _chi2_frozen,
        lambda p: len(p) == 1 and p[0] > 0,
        lambda p: (0.0,) if p[0] < 2 else (),
        lambda p: math.inf if p[0] <= 1 else None,
    ),
    "gamma": (
        _gamma_frozen,
        lambda p: len(p) == 2 and p[0] > 0 and p[1] > 0,
        lambda p: (0.0,) if p[0] < 1 else (),
        lambda p: math.inf if p[0] <= 0.5 else None,
    ),
    "beta": (
        _beta_frozen,
        lambda p: len(p) == 2 and p[0] > 0 and p[1] > 0,
        lambda p: ((0.0,) if p[0] < 1 else ()) + ((1.0,) if p[1] < 1 else ()),
        lambda p: math.inf if (p[0] <= 0.5 or p[1] <= 0.5) else None,
    ),
    "uniform": (
        _uniform_frozen,
        lambda p: len(p) == 2 and p[1] > p[0],
        lambda p: (),
        lambda p: 1.0 / (p[1] - p[0]),
    ),
}


class ParametricDensity(Density):
    """Member of one of the supported parametric families (scipy-backed).

    params: gaussian (mean, sd); exponential (rate,); lognormal (mu, sigma of
    log data); chisquare (df,); gamma (shape, rate); beta (a, b);
    uniform (lo, hi).
    """

    def __init__(self, family: str, params: Sequence[float], kind: str = "parametric"):
        if family not in PARAMETRIC_FAMILIES:
            raise DensityError(f"unknown parametric family {family!r}")
        factory, valid, singular, closed_l2 = PARAMETRIC_FAMILIES[family]
        params = tuple(float(v) for v in params)
        if not all(math.isfinite(v) for v in params) or not valid(params):
            raise DensityError(f"invalid parameters {params!r} for family {family!r}")
        self.kind = kind
        self.family = family
        self.params = params
        self._frozen = factory(params)
        self._singular = tuple(singular(params))
        self._closed_l2 = closed_l2(params) if closed_l2 is not None else None

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self._frozen.support()
        return (float(lo), float(hi))

    def pdf(self, x) -> np.ndarray:
        return np.asarray(self._frozen.pdf(np.asarray(x, dtype=np.float64)))

    def cdf(self, x) -> np.ndarray:
        return np.asarray(self._frozen.cdf(np.asarray(x, dtype=np.float64)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self._frozen.rvs(size=n, random_state=rng))

    def breakpoints(self) -> np.ndarray:
        lo, hi = self.support
        return np.array([b for b in (lo, hi) if math.isfinite(b)])

    def integration_bounds(self) -> tuple[float, float]:
        lo, hi = self.support
        if not math.isfinite(lo) or lo in self._singular:
            lo = float(self._frozen.ppf(TAIL_MASS))
            if lo in self._singular:  # quantile collapsed onto the pole
                lo = lo + max(abs(lo), 1e-300) * 2.0**-50
        if not math.isfinite(hi) or hi in self._singular:
            hi = float(self._frozen.isf(TAIL_MASS))
            if hi in self._singular:
                hi = hi - max(abs(hi), 1e-300) * 2.0**-50
        return (lo, hi)

    def singularities(self) -> tuple[float, ...]:
        return self._singular

    def refinement_points(self, k: int) -> np.ndarray:
        # central quantiles plus geometric tail quantiles: the latter keep
        # heavy tails resolved all the way to the 1e-12 truncation; singular
        # sides are left to the pole grading instead
        probs = [np.linspace(0.0, 1.0, k + 2)[1:-1]]
        lo, hi = self.support
        tails = 10.0 ** -np.arange(2, 12)
        if lo not in self._singular:
            probs.append(tails)
        if hi not in self._singular:
            probs.append(1.0 - tails)
        return np.asarray(self._frozen.ppf(np.unique(np.concatenate(probs))))

    def sq_l2_norm_closed(self) -> float | None:
        return self._closed_l2


class ScipyReference(Density):
    """Reference density wrapping a frozen scipy distribution."""

    kind = "reference"

    def __init__(self, frozen, singular: tuple[float, ...] = ()):
        self._frozen = frozen
        self._singular = tuple(singular)

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self._frozen.support()
        return (float(lo), float(hi))

    def pdf(self, x) -> np.ndarray:
        return np.asarray(self._frozen.pdf(np.asarray(x, dtype=np.float64)))

    def cdf(self, x) -> np.ndarray:
        return np.asarray(self._frozen.cdf(np.asarray(x, dtype=np.float64)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self._frozen.rvs(size=n, random_state=rng))

    def breakpoints(self) -> np.ndarray:
        lo, hi = self.support
        return np.array([b for b in (lo, hi) if math.isfinite(b)])

    def integration_bounds(self) -> tuple[float, float]:
        lo, hi = self.support
        if not math.isfinite(lo) or lo in self._singular:
            lo = float(self._frozen.ppf(TAIL_MASS))
        if not math.isfinite(hi) or hi in self._singular:
            hi = float(self._frozen.isf(TAIL_MASS))
        return (lo, hi)

    def singularities(self) -> tuple[float, ...]:
        return self._singular

    def refinement_points(self, k: int) -> np.ndarray:
        tails = 10.0 ** -np.arange(2, 12)
        probs = np.unique(np.concatenate([np.linspace(0.0, 1.0, k + 2)[1:-1], tails, 1.0 - tails]))
        return np.asarray(self._frozen.ppf(probs))


class MixtureDensity(Density):
    """Finite mixture of component densities with fixed weights."""

    def __init__(self, components: Sequence[Density], weights, kind: str = "reference"):
        weights = np.asarray(weights, dtype=np.float64)
        if len(components) != weights.size or len(components) == 0:
            raise DensityError("need one weight per component")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DensityError("weights must be nonnegative and sum to 1")
        self.kind = kind
        self.components = tuple(components)
        self.weights = weights
        self.weights.setflags(write=False)

    @property
    def support(self) -> tuple[float, float]:
        los, his = zip(*(c.support for c in self.components))
        return (min(los), max(his))

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape, dtype=np.float64)
        for w, c in zip(self.weights, self.components):
            out += w * c.pdf(x)
        return out

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape, dtype=np.float64)
        for w, c in zip(self.weights, self.components):
            out += w * c.cdf(x)
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        counts = rng.multinomial(n, self.weights)
        parts = [c.sample(k, rng) for c, k in zip(self.components, counts) if k > 0]
        return rng.permutation(np.concatenate(parts))

    def breakpoints(self) -> np.ndarray:
        pts = [c.breakpoints() for c in self.components]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def integration_bounds(self) -> tuple[float, float]:
        los, his = zip(*(c.integration_bounds() for c in self.components))
        return (min(los), max(his))

    def singularities(self) -> tuple[float, ...]:
        out: list[float] = []
        for c in self.components:
            out.extend(c.singularities())
        return tuple(dict.fromkeys(out))

    def refinement_points(self, k: int) -> np.ndarray:
        return np.concatenate([c.refinement_points(k) for c in self.components])


class TruncatedCauchy(Density):
    """Standard Cauchy restricted to [lo, hi] and renormalized (stays in L2)."""

    kind = "reference"

    def __init__(self, lo: float = -20.0, hi: float = 20.0):
        if not lo < hi:
            raise DensityError("need lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)
        self._flo = float(stats.cauchy.cdf(lo))
        self._fhi = float(stats.cauchy.cdf(hi))
        self._mass = self._fhi - self._flo

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, stats.cauchy.pdf(x) / self._mass, 0.0)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        v = (stats.cauchy.cdf(np.clip(x, self.lo, self.hi)) - self._flo) / self._mass
        return np.clip(v, 0.0, 1.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = self._flo + self._mass * rng.random(n)
        return np.asarray(stats.cauchy.ppf(u))

    def breakpoints(self) -> np.ndarray:
        return np.array([self.lo, self.hi])

    def integration_bounds(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def refinement_points(self, k: int) -> np.ndarray:
        u = self._flo + self._mass * np.linspace(0.0, 1.0, k + 2)[1:-1]
        return np.asarray(stats.cauchy.ppf(u))
