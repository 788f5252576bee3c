"""Pure-numpy implementations of the numeric kernels.

Drop-in fallback for the compiled extension ``tholdout._core``; the active
backend is chosen by :mod:`tholdout._backend` at import time.  Both backends
implement the same contracts and agree to floating-point noise (summation
order may differ).
"""

from __future__ import annotations

import numpy as np

IS_COMPILED = False

# Saturation magnitude for log-ratio terms where exactly one density vanishes.
# Chosen so that summing ~1e4 saturated terms stays far below the float64 max.
LOG_SATURATION = 1e300

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def _rebinned_masses(edges: np.ndarray, breaks: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Cell masses of a histogram re-binned onto a finer edge set covering it.

    The cumulative mass of a histogram is piecewise linear with knots at its
    breakpoints, so linear interpolation of the cumulative is exact.
    """
    cum = np.concatenate(([0.0], np.cumsum(masses)))
    return np.diff(np.interp(edges, breaks, cum))


def hist_hellinger_sq(b1, m1, b2, m2) -> float:
    """Exact squared Hellinger distance between two histograms.

    Uses the merged-grid closed form ``1 - sum_cells sqrt(p_cell * q_cell)``;
    symmetric in its arguments bit-for-bit (the merged grid and the products
    do not depend on argument order).
    """
    edges = np.union1d(b1, b2)
    p = _rebinned_masses(edges, np.asarray(b1), np.asarray(m1))
    q = _rebinned_masses(edges, np.asarray(b2), np.asarray(m2))
    bc = float(np.sum(np.sqrt(p * q)))
    return max(1.0 - bc, 0.0)


def hist_lq(b1, m1, b2, m2, q: int) -> float:
    """Exact ``||f - g||_q^q`` (q in {1,2}) between two histograms."""
    edges = np.union1d(b1, b2)
    w = np.diff(edges)
    hp = _rebinned_masses(edges, np.asarray(b1), np.asarray(m1)) / w
    hq = _rebinned_masses(edges, np.asarray(b2), np.asarray(m2)) / w
    d = np.abs(hp - hq)
    if q == 1:
        return float(np.sum(d * w))
    return float(np.sum(d * d * w))


def gauss_kde_pdf(centers: np.ndarray, h: float, x: np.ndarray) -> np.ndarray:
    """Gaussian kernel density ``(1/(n h)) sum_i phi((x - c_i)/h)`` at points x.

    ``centers`` must be sorted ascending.  Evaluation is chunked to bound the
    size of the intermediate (points x centers) matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape, dtype=np.float64)
    n = centers.size
    scale = 1.0 / (n * h * _SQRT_2PI)
    flat = x.ravel()
    res = out.ravel()
    step = max(1, 2_000_000 // max(n, 1))
    for s in range(0, flat.size, step):
        z = (flat[s : s + step, None] - centers[None, :]) / h
        res[s : s + step] = np.exp(-0.5 * z * z).sum(axis=1)
    out *= scale
    return out


def dp_partition(cell_ll: np.ndarray, dmax: int):
    """Dynamic program for best partitions of a grid into 1..dmax cells.

    ``cell_ll[a, b]`` is the score of the single cell spanning grid edges
    ``a -> b`` (must be -inf for a >= b).  Returns ``(best, back)`` where
    ``best[d, e]`` is the optimal score of splitting edges ``0..e`` into d
    cells and ``back[d, e]`` the first-maximizing predecessor edge.
    """
    n_edges = cell_ll.shape[0]
    best = np.full((dmax + 1, n_edges), -np.inf)
    back = np.zeros((dmax + 1, n_edges), dtype=np.int64)
    best[0, 0] = 0.0
    for d in range(1, dmax + 1):
        tot = best[d - 1][:, None] + cell_ll
        am = np.argmax(tot, axis=0)
        best[d] = tot[am, np.arange(n_edges)]
        back[d] = am
    return best, back


def birge_sum(sq_i: np.ndarray, sq_j: np.ndarray, w_i: float, w_j: float) -> float:
    """Sum of log-ratio terms of the sine-mixed square-root densities.

    Terms are ``log(w_i*sq_i + w_j*sq_j) - log(w_i*sq_j + w_j*sq_i)``; a point
    where both mixtures vanish contributes 0, a one-sided zero contributes the
    saturating value ``+/-LOG_SATURATION`` (decides the sign deterministically).
    """
    num = w_i * sq_i + w_j * sq_j
    den = w_i * sq_j + w_j * sq_i
    terms = np.zeros(num.shape, dtype=np.float64)
    nz = num > 0.0
    dz = den > 0.0
    ok = nz & dz
    terms[ok] = np.log(num[ok]) - np.log(den[ok])
    terms[nz & ~dz] = LOG_SATURATION
    terms[~nz & dz] = -LOG_SATURATION
    return float(np.sum(terms))


def baraud_sum(sq_i: np.ndarray, sq_j: np.ndarray, sq_r: np.ndarray) -> float:
    """Sum of ``(sq_j - sq_i)/sq_r`` with zero-midpoint terms contributing 0."""
    terms = np.zeros(sq_r.shape, dtype=np.float64)
    nz = sq_r > 0.0
    terms[nz] = (sq_j[nz] - sq_i[nz]) / sq_r[nz]
    return float(np.sum(terms))
