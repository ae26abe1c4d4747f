"""
Per-cell integrals of a scalar source.

Every integral is anchored at a point c inside its interval and split
there, so the |x - c|^r factor sits at an endpoint and is absorbed into
Gauss-Jacobi weights. Pieces crossing a source breakpoint, and the
unbounded tails, fall back to adaptive quadrature.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import integrate, special

from src.config.settings import GAUSS_NODES, QUAD_TAIL_SCALES, TV_GAUSS_NODES
from src.data.sources import ScalarSource
from src.errors import ValidationError

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class CellIntegrals:
    """Integral values with the accumulated adaptive-quadrature error estimate"""

    values: np.ndarray
    abserr: float


@lru_cache(maxsize=64)
def jacobi_rule(r: float, n: int = GAUSS_NODES) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_{-1}^{1} (1+s)^r g(s) ds"""
    nodes, weights = special.roots_jacobi(n, 0.0, r)
    return nodes, weights


def _crosses_breakpoint(source: ScalarSource, c: np.ndarray, t: np.ndarray) -> np.ndarray:
    lo = np.minimum(c, t)
    hi = np.maximum(c, t)
    mask = np.zeros(c.shape, dtype=bool)
    for b in source.breakpoints:
        mask |= (lo < b) & (b < hi)
    return mask


def _effective_end(source: ScalarSource, c: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Replace infinite ends by the support edge or +-QUAD_TAIL_SCALES scales, never crossing c"""
    lo, hi = source.support
    lo = max(lo, source.median - QUAD_TAIL_SCALES * source.scale)
    hi = min(hi, source.median + QUAD_TAIL_SCALES * source.scale)
    t = np.where(t == -np.inf, np.minimum(c, lo), t)
    return np.where(t == np.inf, np.maximum(c, hi), t)


def _quad_piece(source: ScalarSource, c: float, t: float, r: float, signed: bool) -> Tuple[float, float]:
    """Adaptive version of one anchored piece; the signed result is negative when t < c"""
    a, b = (c, t) if t >= c else (t, c)
    if b <= a:
        return 0.0, 0.0
    points = [p for p in source.breakpoints if a < p < b] or None

    def integrand(x):
        weight = abs(x - c) ** r if r > 0 else 1.0
        if signed and x < c:
            weight = -weight
        return weight * float(source.pdf(x))

    value, err = integrate.quad(integrand, a, b, points=points, epsabs=QUAD_EPSABS,
                               epsrel=QUAD_EPSREL, limit=200)
    return value, err


def anchored_integrals(source: ScalarSource, c, t, r: float, signed: bool = False) -> CellIntegrals:
    """
    int between c and t of |x - c|^r f(x) dx, vectorised over (c, t) pairs.

    With ``signed`` the integrand carries sign(x - c), which gives first
    moments about c for centroid computations.
    """
    if r < 0:
        raise ValidationError(f"moment order must be nonnegative, got {r}")
    c = np.asarray(c, dtype=float)
    t = np.asarray(t, dtype=float)
    c, t = np.broadcast_arrays(c, t)
    t_eff = _effective_end(source, c, t)

    values = np.zeros(c.shape)
    slow = ~np.isfinite(t) | _crosses_breakpoint(source, c, t_eff)

    fast = ~slow
    if np.any(fast):
        nodes, weights = jacobi_rule(float(r))
        cf = c[fast]
        tf = t_eff[fast]
        half = 0.5 * np.abs(tf - cf)
        direction = np.sign(tf - cf)
        x = cf[:, None] + direction[:, None] * half[:, None] * (1.0 + nodes[None, :])
        dens = source.pdf(x)
        piece = half ** (r + 1) * (dens @ weights)
        if signed:
            piece = piece * direction
        values[fast] = piece

    abserr = 0.0
    for k in np.flatnonzero(slow):
        value, err = _quad_piece(source, float(c.flat[k]), float(t_eff.flat[k]), r, signed)
        values.flat[k] = value
        abserr += err
    return CellIntegrals(values, abserr)


def _check_anchor(left, right, anchor):
    if np.any(anchor < left) or np.any(anchor > right):
        raise ValidationError("anchor points must lie inside their intervals")


def interval_masses(source: ScalarSource, left, right) -> np.ndarray:
    """P(left <= X < right) from tail-safe CDF differences"""
    return source.mass(left, right)


def interval_moments(source: ScalarSource, left, right, anchor, r: float) -> CellIntegrals:
    """int_left^right |x - anchor|^r f(x) dx per interval"""
    left, right, anchor = (np.asarray(v, dtype=float) for v in (left, right, anchor))
    _check_anchor(left, right, anchor)
    lower = anchored_integrals(source, anchor, left, r)
    upper = anchored_integrals(source, anchor, right, r)
    return CellIntegrals(lower.values + upper.values, lower.abserr + upper.abserr)


def interval_centroids(source: ScalarSource, left, right, anchor) -> np.ndarray:
    """E[X | left <= X < right]; the anchor is kept where the interval has no mass"""
    left, right, anchor = (np.asarray(v, dtype=float) for v in (left, right, anchor))
    _check_anchor(left, right, anchor)
    mass = interval_masses(source, left, right)
    lower = anchored_integrals(source, anchor, left, 1.0, signed=True)
    upper = anchored_integrals(source, anchor, right, 1.0, signed=True)
    first = upper.values + lower.values
    with np.errstate(divide="ignore", invalid="ignore"):
        centroid = anchor + first / mass
    centroid = np.where(mass > 0, centroid, anchor)
    return np.clip(centroid, left, right)


def window_bounds(left, right, anchor, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """Intersection of each interval with [anchor - eps, anchor + eps]"""
    return np.maximum(left, anchor - eps), np.minimum(right, anchor + eps)


def tv_cells(source: ScalarSource, left, right, density) -> np.ndarray:
    """int_left^right |density - f(x)| dx per bounded cell"""
    left, right, density = (np.asarray(v, dtype=float) for v in (left, right, density))
    values = np.zeros(left.shape)
    slow = _crosses_breakpoint(source, left, right)

    fast = ~slow & (right > left)
    if np.any(fast):
        nodes, weights = special.roots_legendre(TV_GAUSS_NODES)
        half = 0.5 * (right[fast] - left[fast])
        mid = 0.5 * (right[fast] + left[fast])
        x = mid[:, None] + half[:, None] * nodes[None, :]
        gap = np.abs(density[fast][:, None] - source.pdf(x))
        values[fast] = half * (gap @ weights)

    for k in np.flatnonzero(slow):
        a, b, level = float(left[k]), float(right[k]), float(density[k])
        points = [p for p in source.breakpoints if a < p < b]
        value, _ = integrate.quad(lambda x: abs(level - float(source.pdf(x))), a, b,
                                  points=points, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        values[k] = value
    return values
