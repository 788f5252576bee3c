"""Candidate selection: plausibility criterion, exact/approximate/naive search,
and the classical least-squares / Kullback-Leibler hold-out baselines.

The plausibility criterion of a candidate m is the largest Hellinger distance
to any candidate that beats m in a pairwise test; the selected index minimizes
it.  The exact search prunes through intersections of closed balls around
successive running minimizers (it never tests more pairs than the naive scan
and returns the same minimal criterion value); the approximate variant
additionally refuses to test candidates within delta = c/sqrt(|validation|)
of one already considered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import CandidateSet
from .metrics import sq_l2_norm
from .robust_tests import TestCache, TestKind, decide

__all__ = [
    "SelectionOutcome",
    "complexity_ratio",
    "crit_D",
    "brute_force_select",
    "exact_select",
    "approx_select",
    "classical_ho_select",
]


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of one selection run.

    chosen: 0-based index of the selected candidate.
    criterion: the minimized criterion value (the plausibility index for the
        test-based methods, the empirical contrast for ls/kl).
    tests_used: number of distinct pairwise tests computed (0 for ls/kl).
    complexity: 2(N-M+1)/((M-1)(M-2)), 0 when M <= 2 or no tests were run.
    trace: (index, criterion) per accepted improvement, starting point first.
    method: one of exact | approx | brute | ls | kl.
    delta: the indistinguishability radius (approx only).
    flags: diagnostic markers (e.g. 'kl_degenerate_ls_fallback').
    """

    chosen: int
    criterion: float
    tests_used: int
    complexity: float
    trace: tuple[tuple[int, float], ...]
    method: str
    delta: float | None = None
    flags: tuple[str, ...] = ()


def complexity_ratio(n_tests: int, m: int) -> float:
    """Normalized test count: 0 at the linear floor, 1 at the quadratic cap."""
    if m <= 2:
        return 0.0
    return 2.0 * (n_tests - m + 1) / ((m - 1) * (m - 2))


def crit_D(m: int, candidates: CandidateSet, x_v, kind: TestKind, cache: TestCache) -> float:
    """Plausibility index of candidate m: max distance to a preferred rival.

    Tests m against every other candidate (through the cache) and returns
    the largest Hellinger distance among rivals that win their test; 0 when
    no rival is preferred to m.
    """
    best = 0.0
    for j in range(len(candidates)):
        if j == m:
            continue
        dec = decide(m, j, candidates, x_v, kind, cache)
        if dec.winner == j:
            best = max(best, dec.distance)
    return best


def brute_force_select(candidates: CandidateSet, x_v, kind: TestKind) -> SelectionOutcome:
    """Naive scan: every pair is tested, the criterion minimized directly.

    Ties in the argmin break toward the lowest index.
    """
    m_count = len(candidates)
    if m_count < 2:
        raise ValueError("need at least 2 candidates")
    cache = TestCache()
    values = [crit_D(m, candidates, x_v, kind, cache) for m in range(m_count)]
    chosen = int(np.argmin(values))
    return SelectionOutcome(
        chosen=chosen,
        criterion=values[chosen],
        tests_used=cache.count,
        complexity=complexity_ratio(cache.count, m_count),
        trace=((chosen, values[chosen]),),
        method="brute",
    )


def _initial_scan(start, candidates, x_v, kind, cache):
    """Criterion of the start point plus its distance row (from the tests)."""
    d0 = 0.0
    dist_to = np.zeros(len(candidates))
    for j in range(len(candidates)):
        if j == start:
            continue
        dec = decide(start, j, candidates, x_v, kind, cache)
        dist_to[j] = dec.distance
        if dec.winner == j:
            d0 = max(d0, dec.distance)
    return d0, dist_to


def _select_farthest(j_set: set[int], dist_to: np.ndarray) -> int:
    """argmax of distance over the running set, lowest index on ties."""
    best_j, best_d = -1, -math.inf
    for k in sorted(j_set):
        if dist_to[k] > best_d:
            best_j, best_d = k, dist_to[k]
    return best_j


def exact_select(
    candidates: CandidateSet,
    x_v,
    kind: TestKind,
    start: int | None = None,
) -> SelectionOutcome:
    """Ball-intersection search returning an exact minimizer of the criterion.

    Starts from ``start`` (default: the least-squares hold-out choice), scans
    it fully, then repeatedly examines the farthest untested candidate inside
    the intersection of the balls around all accepted minimizers.  The inner
    scan of a challenger breaks as soon as its criterion provably exceeds the
    running one, in which case the challenger is discarded; a challenger is
    installed only on strict improvement.
    """
    m_count = len(candidates)
    if m_count < 2:
        raise ValueError("need at least 2 candidates")
    if start is None:
        start = classical_ho_select(candidates, x_v, "ls").chosen
    if not 0 <= start < m_count:
        raise ValueError("start index out of range")
    cache = TestCache()
    current, cur_d, trace = _ball_search(
        candidates, x_v, kind, cache, start, delta=0.0
    )
    return SelectionOutcome(
        chosen=current,
        criterion=cur_d,
        tests_used=cache.count,
        complexity=complexity_ratio(cache.count, m_count),
        trace=tuple(trace),
        method="exact",
    )


def approx_select(
    candidates: CandidateSet,
    x_v,
    kind: TestKind,
    start: int | None = None,
    c: float = 1.0,
) -> SelectionOutcome:
    """Lossy ball search skipping candidates within delta = c/sqrt(|X_v|).

    The running set becomes a ring (ball minus the delta-ball), and inside
    the challenger scan any candidate within delta of the challenger or of a
    candidate already tested against it this iteration is skipped.
    """
    m_count = len(candidates)
    if m_count < 2:
        raise ValueError("need at least 2 candidates")
    if not c > 0:
        raise ValueError("c must be positive")
    if start is None:
        start = classical_ho_select(candidates, x_v, "ls").chosen
    if not 0 <= start < m_count:
        raise ValueError("start index out of range")
    delta = c / math.sqrt(np.asarray(x_v).size)
    cache = TestCache()
    current, cur_d, trace = _ball_search(
        candidates, x_v, kind, cache, start, delta=delta
    )
    return SelectionOutcome(
        chosen=current,
        criterion=cur_d,
        tests_used=cache.count,
        complexity=complexity_ratio(cache.count, m_count),
        trace=tuple(trace),
        method="approx",
        delta=delta,
    )


def _ball_search(candidates, x_v, kind, cache, start, delta):
    """Shared body of the exact (delta=0) and approximate (delta>0) searches."""
    m_count = len(candidates)
    current = start
    cur_d, dist_to = _initial_scan(start, candidates, x_v, kind, cache)
    trace = [(current, cur_d)]
    if delta > 0.0:
        j_set = {k for k in range(m_count) if delta < dist_to[k] <= cur_d}
    else:
        j_set = {k for k in range(m_count) if k != start and dist_to[k] <= cur_d}

    while j_set:
        j = _select_farthest(j_set, dist_to)
        j_set.discard(j)
        d_tmp = 0.0
        broke = False
        tested: list[int] = [j]
        for k in range(m_count):
            if k == j:
                continue
            if delta > 0.0:
                skip = False
                for t in tested:
                    if candidates.distance(k, t) <= delta:
                        skip = True
                        break
                if skip:
                    continue
                tested.append(k)
            dec = decide(k, j, candidates, x_v, kind, cache)
            if dec.winner == k:
                d_tmp = max(d_tmp, dec.distance)
                if d_tmp > cur_d:
                    broke = True
                    break
        if not broke and d_tmp < cur_d:
            current, cur_d = j, d_tmp
            trace.append((current, cur_d))
            dist_to = np.array(
                [candidates.distance(current, k) for k in range(m_count)]
            )
            if delta > 0.0:
                j_set = {k for k in j_set if delta < dist_to[k] <= cur_d}
            else:
                j_set = {k for k in j_set if dist_to[k] <= cur_d}
    return current, cur_d, trace


def classical_ho_select(candidates: CandidateSet, x_v, contrast: str) -> SelectionOutcome:
    """Classical hold-out: argmin of the empirical contrast on the validation.

    'ls' uses ``||t||_2^2 - 2 mean(t(X))``; 'kl' uses ``-mean(log t(X))`` with
    +inf whenever a validation point has zero density.  If every candidate's
    KL criterion is infinite the ls choice is returned with a warning flag.
    Ties break toward the lowest index; no pairwise tests are used.
    """
    if contrast not in ("ls", "kl"):
        raise ValueError("contrast must be 'ls' or 'kl'")
    m_count = len(candidates)
    if m_count < 1:
        raise ValueError("need at least one candidate")
    x_v = np.asarray(x_v, dtype=np.float64)
    values = np.empty(m_count)
    for m, member in enumerate(candidates.members):
        vals = member.pdf(x_v)
        if contrast == "ls":
            values[m] = sq_l2_norm(member, candidates.quad) - 2.0 * float(np.mean(vals))
        else:
            values[m] = math.inf if np.any(vals <= 0) else -float(np.mean(np.log(vals)))
    flags: tuple[str, ...] = ()
    if contrast == "kl" and not np.any(np.isfinite(values)):
        fallback = classical_ho_select(candidates, x_v, "ls")
        return SelectionOutcome(
            chosen=fallback.chosen,
            criterion=fallback.criterion,
            tests_used=0,
            complexity=0.0,
            trace=fallback.trace,
            method="kl",
            flags=("kl_degenerate_ls_fallback",),
        )
    chosen = int(np.argmin(values))
    return SelectionOutcome(
        chosen=chosen,
        criterion=float(values[chosen]),
        tests_used=0,
        complexity=0.0,
        trace=((chosen, float(values[chosen])),),
        method=contrast,
        flags=flags,
    )
