"""Robust pairwise test statistics and the cached decision rule.

Two statistics decide between candidates i and j on the validation sample:
the sine-mixed log-ratio statistic (robustness parameter theta) and the
midpoint-density statistic.  The decision is i when the statistic is <= 0,
j otherwise; each unordered pair is computed at most once per cache.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _backend
from .densities import Density, HistogramDensity, MixtureDensity
from .estimators import CandidateSet
from .metrics import DEFAULT_QUAD, QuadratureSpec, hellinger_sq

__all__ = [
    "TestKind",
    "PairDecision",
    "TestCache",
    "birge_statistic",
    "baraud_statistic",
    "decide",
]


@dataclass(frozen=True)
class TestKind:
    """Choice of pairwise statistic; theta only applies to the 'birge' kind.

    theta must lie in (0, 1/2); theta = 0 is permitted as the diagnostic
    likelihood-ratio reduction (no robustness).
    """

    variant: str
    theta: float = 0.25

    def __post_init__(self):
        if self.variant not in ("birge", "baraud"):
            raise ValueError(f"unknown test variant {self.variant!r}")
        if self.variant == "birge" and not (0.0 <= self.theta < 0.5):
            raise ValueError("theta must be in [0, 1/2) (0 = diagnostic mode)")

    @classmethod
    def birge(cls, theta: float = 0.25) -> "TestKind":
        return cls("birge", theta)

    @classmethod
    def baraud(cls) -> "TestKind":
        return cls("baraud", 0.0)


@dataclass(frozen=True)
class PairDecision:
    """Cached outcome of one pairwise test (canonical order i < j)."""

    i: int
    j: int
    statistic: float
    winner: int
    distance: float


class TestCache:
    """Per-run memo of pair decisions; each unordered pair is tested once.

    ``count`` is the number of distinct pairs decided so far.  Lookups are
    lock-free; insertion is serialized with first-writer-wins so concurrent
    duplicate computation cannot double-count.
    """

    def __init__(self):
        self._decisions: dict[tuple[int, int], PairDecision] = {}
        self._lock = threading.Lock()
        self._pdf_rows: dict[int, np.ndarray] = {}
        self._sqrt_rows: dict[int, np.ndarray] = {}

    @property
    def count(self) -> int:
        return len(self._decisions)

    def get(self, i: int, j: int) -> PairDecision | None:
        return self._decisions.get((min(i, j), max(i, j)))

    def put(self, decision: PairDecision) -> PairDecision:
        key = (decision.i, decision.j)
        with self._lock:
            return self._decisions.setdefault(key, decision)

    def decisions(self) -> dict[tuple[int, int], PairDecision]:
        return dict(self._decisions)

    def sqrt_pdf_row(self, candidates: CandidateSet, idx: int, x_v: np.ndarray) -> np.ndarray:
        row = self._sqrt_rows.get(idx)
        if row is None:
            row = np.sqrt(self.pdf_row(candidates, idx, x_v))
            self._sqrt_rows[idx] = row
        return row

    def pdf_row(self, candidates: CandidateSet, idx: int, x_v: np.ndarray) -> np.ndarray:
        row = self._pdf_rows.get(idx)
        if row is None:
            row = candidates.members[idx].pdf(x_v)
            self._pdf_rows[idx] = row
        return row


def _birge_weights(theta: float, h2: float) -> tuple[float, float]:
    omega = math.acos(min(max(1.0 - h2, -1.0), 1.0))
    return math.sin(theta * omega), math.sin((1.0 - theta) * omega)


def _birge_from_rows(sq_i, sq_j, theta: float, h2: float) -> float:
    w_i, w_j = _birge_weights(theta, h2)
    return _backend.birge_sum(sq_i, sq_j, w_i, w_j)


def birge_statistic(s_i: Density, s_j: Density, x_v, theta: float, h2: float) -> float:
    """Sine-mixed log-ratio statistic summed over the validation points.

    With omega = arccos(1 - h2), each point contributes
    ``log(sin(theta*omega) sqrt(s_i) + sin((1-theta)*omega) sqrt(s_j))
    - log(sin(theta*omega) sqrt(s_j) + sin((1-theta)*omega) sqrt(s_i))``;
    a point where both mixtures vanish contributes 0, a one-sided zero
    saturates to +/-1e300.  Positive values favor s_j.
    """
    if not 0.0 <= theta < 0.5:
        raise ValueError("theta must be in [0, 1/2)")
    if not 0.0 < h2 <= 1.0 + 1e-10:
        raise ValueError("h2 must be in (0, 1] (h2 = 0 means indistinguishable)")
    x_v = np.asarray(x_v, dtype=np.float64)
    return _birge_from_rows(np.sqrt(s_i.pdf(x_v)), np.sqrt(s_j.pdf(x_v)), theta, h2)


def _midpoint_density(s_i: Density, s_j: Density) -> Density:
    if isinstance(s_i, HistogramDensity) and isinstance(s_j, HistogramDensity):
        edges = np.union1d(s_i.edges, s_j.edges)
        cum_i = np.interp(edges, s_i.edges, np.concatenate(([0.0], np.cumsum(s_i.masses))))
        cum_j = np.interp(edges, s_j.edges, np.concatenate(([0.0], np.cumsum(s_j.masses))))
        masses = 0.5 * np.diff(cum_i) + 0.5 * np.diff(cum_j)
        return HistogramDensity(edges, masses)
    return MixtureDensity([s_i, s_j], [0.5, 0.5])


def baraud_statistic(
    s_i: Density, s_j: Density, x_v, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """Midpoint-density statistic summed over the validation points.

    With r = (s_i + s_j)/2: ``h2(s_i, r) - h2(s_j, r)
    + mean((sqrt(s_j) - sqrt(s_i))/sqrt(r))``; points where r vanishes
    contribute 0.  Positive values favor s_j.
    """
    x_v = np.asarray(x_v, dtype=np.float64)
    r = _midpoint_density(s_i, s_j)
    det = hellinger_sq(s_i, r, quad) - hellinger_sq(s_j, r, quad)
    emp = _backend.baraud_sum(
        np.sqrt(s_i.pdf(x_v)), np.sqrt(s_j.pdf(x_v)), np.sqrt(r.pdf(x_v))
    )
    return det + emp / x_v.size


def _baraud_from_rows(candidates, i, j, sq_i, sq_j, x_v, quad) -> float:
    s_i, s_j = candidates.members[i], candidates.members[j]
    r = _midpoint_density(s_i, s_j)
    det = hellinger_sq(s_i, r, quad) - hellinger_sq(s_j, r, quad)
    emp = _backend.baraud_sum(sq_i, sq_j, np.sqrt(r.pdf(x_v)))
    return det + emp / x_v.size


def decide(
    i: int,
    j: int,
    candidates: CandidateSet,
    x_v,
    kind: TestKind,
    cache: TestCache,
) -> PairDecision:
    """Decide the (i, j) pair, computing and caching the test once.

    The pair is canonicalized to (min, max); the winner is the canonical i
    when the statistic is <= 0, else j.  A pair at Hellinger distance exactly
    0 is a tie decided for the lower index with statistic 0.
    """
    if i == j:
        raise ValueError("need two distinct candidates")
    a, b = (i, j) if i < j else (j, i)
    hit = cache.get(a, b)
    if hit is not None:
        return hit
    x_v = np.asarray(x_v, dtype=np.float64)
    h2 = candidates.h2(a, b)
    h = math.sqrt(h2)
    if h == 0.0:
        return cache.put(PairDecision(a, b, 0.0, a, 0.0))
    sq_a = cache.sqrt_pdf_row(candidates, a, x_v)
    sq_b = cache.sqrt_pdf_row(candidates, b, x_v)
    if kind.variant == "birge":
        stat = _birge_from_rows(sq_a, sq_b, kind.theta, h2)
    else:
        stat = _baraud_from_rows(candidates, a, b, sq_a, sq_b, x_v, candidates.quad)
    winner = a if stat <= 0.0 else b
    return cache.put(PairDecision(a, b, stat, winner, h))
