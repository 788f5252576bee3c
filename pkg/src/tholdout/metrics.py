"""Hellinger, L1 and L2 distances between densities.

Closed forms are used where they exist (histogram pairs via the merged
breakpoint grid, a few parametric L2 norms); everything else goes through
composite Simpson quadrature on a breakpoint-aware segmentation with an
embedded error estimate and panel-doubling escalation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .densities import Density, HistogramDensity

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "DEFAULT_QUAD",
    "hellinger_sq",
    "lq_distance",
    "sq_l2_norm",
    "integrate_pdf",
]

# Geometric grading toward an integrable singularity stops after this many
# extra segments per side (enough for ~1e-12 quantile truncation, see below).
_MAX_GRADE_SEGMENTS = 200


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite-Simpson settings.

    panels: Simpson panels per segment (even, >= 2).
    refine: uniform subdivisions of the integration hull added to the
        breakpoint-derived segmentation.
    tol: acceptable residual of the embedded error estimate; exceeding it
        doubles the panel count up to ``max_doublings`` times before the
        integral is declared non-convergent.
    """

    panels: int = 64
    refine: int = 16
    tol: float = 1e-9
    max_doublings: int = 3

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2 != 0:
            raise ValueError("panels must be even and >= 2")
        if self.refine < 1:
            raise ValueError("refine must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the last residual estimate."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


def _graded_offsets(total: float, floor: float) -> np.ndarray:
    """Geometric offsets total/2, total/4, ... staying above ``floor``."""
    if not (0 < floor < total):
        return np.empty(0)
    k = min(int(math.floor(math.log2(total / floor))), _MAX_GRADE_SEGMENTS)
    return total / np.power(2.0, np.arange(1, k + 1))


def _pair_edges(f: Density, g: Density | None, quad: QuadratureSpec) -> np.ndarray:
    """Segmentation for integrating over the union of the densities' mass.

    Union of both densities' breakpoints, the integration hull endpoints,
    per-density quantile anchors and a uniform refinement; segments adjacent
    to integrable singularities are refined geometrically so low-order panels
    stay accurate.
    """
    parts = [f] if g is None else [f, g]
    los, his = zip(*(d.integration_bounds() for d in parts))
    lo, hi = min(los), max(his)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("integration bounds must be finite and ordered")
    pts = [np.array([lo, hi]), np.linspace(lo, hi, quad.refine + 1)]
    for d in parts:
        b = np.asarray(d.breakpoints(), dtype=np.float64)
        pts.append(b[(b > lo) & (b < hi)])
        r = np.asarray(d.refinement_points(quad.refine), dtype=np.float64)
        pts.append(r[(r > lo) & (r < hi)])
    edges = np.unique(np.concatenate(pts))

    # geometric floor: never grade below this distance from a pole
    floor_abs = (hi - lo) * 2.0**-80
    singular: list[float] = []
    for d in parts:
        singular.extend(d.singularities())
    for s in dict.fromkeys(singular):
        if s >= hi:
            prv = edges[edges < hi][-1] if np.any(edges < hi) else lo
            extra = [s - _graded_offsets(s - prv, max(s - hi, floor_abs))]
        elif s <= lo:
            nxt = edges[edges > lo][0] if np.any(edges > lo) else hi
            extra = [s + _graded_offsets(nxt - s, max(lo - s, floor_abs))]
        else:
            # interior pole (mixtures): make it an edge and grade both sides;
            # the endpoint nudge keeps evaluation nodes strictly off the pole
            below = edges[edges < s]
            above = edges[edges > s]
            prv = below[-1] if below.size else lo
            nxt = above[0] if above.size else hi
            extra = [
                np.array([s]),
                s - _graded_offsets(s - prv, floor_abs),
                s + _graded_offsets(nxt - s, floor_abs),
            ]
        edges = np.unique(np.concatenate([edges, *extra]))
    return edges[(edges >= lo) & (edges <= hi)] if singular else edges


# Segment endpoint nodes are pulled inside by this relative amount so that a
# pointwise pdf evaluation yields the within-segment limit at discontinuities
# (cells are left-closed; the right-edge value belongs to the next segment).
_EDGE_NUDGE = 2.0**-40


def _simpson_weights(edges: np.ndarray, panels: int):
    """Nodes plus full- and embedded-half-rule weights for all segments."""
    rel = np.arange(panels + 1) / panels
    rel[0] += _EDGE_NUDGE
    rel[-1] -= _EDGE_NUDGE
    nodes = (edges[:-1, None] + np.diff(edges)[:, None] * rel[None, :]).ravel()
    pattern = np.ones(panels + 1)
    pattern[1:-1:2] = 4.0
    pattern[2:-1:2] = 2.0
    w = (np.diff(edges)[:, None] / (3.0 * panels)) * pattern[None, :]
    half = np.zeros(panels + 1)
    if panels % 4 == 0:
        hp = np.ones(panels // 2 + 1)
        hp[1:-1:2] = 4.0
        hp[2:-1:2] = 2.0
        half[::2] = hp
    wh = (np.diff(edges)[:, None] * (2.0 / (3.0 * panels))) * half[None, :]
    return nodes, w.ravel(), wh.ravel()


def _eval_integrand(integrand, f, g, nodes) -> np.ndarray:
    vals = integrand(f.pdf(nodes), g.pdf(nodes) if g is not None else None)
    # nodes that round exactly onto an integrable pole evaluate to inf; their
    # true contribution is a zero-measure point, so drop them
    return np.where(np.isfinite(vals), vals, 0.0)


def _integrate(integrand, f: Density, g: Density | None, quad: QuadratureSpec) -> float:
    """Integrate ``integrand(pdf_f, pdf_g)`` over the pair's segmentation."""
    edges = _pair_edges(f, g, quad)
    residual = math.inf
    panels = quad.panels
    for _ in range(quad.max_doublings + 1):
        nodes, w, wh = _simpson_weights(edges, panels)
        vals = _eval_integrand(integrand, f, g, nodes)
        value = float(w @ vals)
        if panels % 4 == 0:
            residual = abs(value - float(wh @ vals)) / 15.0
        else:
            nodes2, w2, _ = _simpson_weights(edges, 2 * panels)
            fine = float(w2 @ _eval_integrand(integrand, f, g, nodes2))
            residual = abs(fine - value) / 15.0
            value = fine
        if residual <= quad.tol:
            return value
        panels *= 2
    raise QuadratureError("quadrature did not converge", residual)


def _hellinger_integrand(fv, gv):
    d = np.sqrt(fv) - np.sqrt(gv)
    return 0.5 * d * d


def hellinger_sq(f: Density, g: Density, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Squared Hellinger distance ``0.5 * int (sqrt f - sqrt g)^2`` in [0, 1].

    Histogram pairs use the exact merged-grid closed form
    ``1 - sum_cells sqrt(p_cell q_cell)``; all other pairs are integrated
    numerically.  Symmetric in its arguments.
    """
    if f is g:
        return 0.0
    if isinstance(f, HistogramDensity) and isinstance(g, HistogramDensity):
        return _backend.hist_hellinger_sq(f.edges, f.masses, g.edges, g.masses)
    return max(_integrate(_hellinger_integrand, f, g, quad), 0.0)


def lq_distance(f: Density, g: Density, q: int, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``||f - g||_q^q`` for q in {1, 2}; exact for histogram pairs."""
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    if f is g:
        return 0.0
    if isinstance(f, HistogramDensity) and isinstance(g, HistogramDensity):
        return _backend.hist_lq(f.edges, f.masses, g.edges, g.masses, q)
    if q == 1:
        return max(_integrate(lambda fv, gv: np.abs(fv - gv), f, g, quad), 0.0)
    return max(_integrate(lambda fv, gv: (fv - gv) ** 2, f, g, quad), 0.0)


def sq_l2_norm(f: Density, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int f^2``; closed form where available (histograms, KDEs, ...)."""
    closed = f.sq_l2_norm_closed()
    if closed is not None:
        return closed
    return _integrate(lambda fv, gv: fv * fv, f, None, quad)


def integrate_pdf(f: Density, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int f`` over the integration bounds (normalization diagnostic)."""
    return _integrate(lambda fv, gv: fv, f, None, quad)
