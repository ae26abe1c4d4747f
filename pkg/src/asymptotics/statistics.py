"""
Cell statistics of scalar quantizers in the high-resolution regime.

All quantities come from exact cell masses (CDF differences) and
per-cell quadrature, never from sampling.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from src.data.sources import SourceModel, require_scalar
from src.errors import ValidationError
from src.quantization.cells import interval_moments, tv_cells, window_bounds
from src.quantization.evaluation import exact_distortion
from src.quantization.scalar import ScalarQuantizer

logger = logging.getLogger(__name__)

VARIANTS = ("theorem2_lambda", "corollary_delta")

DISTORTION_MATCH_RTOL = 1e-6


def optimal_cell_ratio(r: float) -> float:
    """2^r (1 + r), the limit of Lambda^r / D on an optimal sequence"""
    return 2.0 ** r * (1.0 + r)


@dataclass(frozen=True)
class CellWindowMeasure:
    """Per-cell overlap of S_i with [x_i - eps, x_i + eps]"""

    index: np.ndarray
    left: np.ndarray
    right: np.ndarray
    Lambda: np.ndarray
    eps: float


@dataclass(frozen=True)
class ConcentrationResult:
    D: float
    rho: float
    theta: float
    variant: str
    mass: float
    tail_mass: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Lemma3Result:
    lhs_a: float
    bound_a: float
    lhs_b: float
    bound_b: float
    passed: bool


@dataclass(frozen=True)
class CellMomentStatistic:
    value: float
    tail_mass: float


@dataclass(frozen=True)
class PiecewiseTV:
    value: float
    bounded: float
    tail_mass: float


def window_measures(q: ScalarQuantizer, eps: float) -> CellWindowMeasure:
    """
    Lambda_i = |S_i intersected with [x_i - eps, x_i + eps]| for every cell.

    Always finite, tails included, and 0 <= Lambda_i <= min(length_i, 2 eps).
    """
    if not eps > 0:
        raise ValidationError(f"window radius must be positive, got {eps}")
    left, right, x_hat = q.cells()
    w_left, w_right = window_bounds(left, right, x_hat, eps)
    return CellWindowMeasure(
        index=np.arange(q.n_cells),
        left=w_left,
        right=w_right,
        Lambda=np.maximum(w_right - w_left, 0.0),
        eps=eps,
    )


def _masses(q: ScalarQuantizer, source: SourceModel):
    component = require_scalar(source)
    left, right, x_hat = q.cells()
    return component, left, right, x_hat, component.mass(left, right)


def _check_distortion(q: ScalarQuantizer, source: SourceModel, r: float, D: float):
    achieved = exact_distortion(q, source, r).value
    if not math.isclose(achieved, D, rel_tol=DISTORTION_MATCH_RTOL):
        raise ValidationError(
            f"declared D={D:.9g} does not match the quantizer's distortion {achieved:.9g}"
        )


def concentration_statistic(q: ScalarQuantizer, source: SourceModel, r: float, D: float,
                            rho: float, theta: float, variant: str = "theorem2_lambda",
                            check_distortion: bool = True) -> ConcentrationResult:
    """
    Probability mass of the cells whose normalized size is within ``theta``
    of 2^r (1 + r).

    ``theorem2_lambda`` uses Lambda_i^r / D with eps = rho D^(1/r) and
    covers every cell; ``corollary_delta`` uses length_i^r / D and leaves
    the two unbounded cells out. Both report the tail-cell mass.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not rho > 0 or not theta > 0 or not D > 0:
        raise ValidationError("rho, theta and D must be positive")
    if check_distortion:
        _check_distortion(q, source, r, D)

    _, left, right, _, p = _masses(q, source)
    target = optimal_cell_ratio(r)
    tail_mass = float(p[0] + p[-1])

    if variant == "theorem2_lambda":
        measures = window_measures(q, rho * D ** (1.0 / r))
        ratio = measures.Lambda ** r / D
        hit = np.abs(ratio - target) <= theta
        mass = float(np.sum(p[hit]))
    else:
        ratio = (right[1:-1] - left[1:-1]) ** r / D
        hit = np.abs(ratio - target) <= theta
        mass = float(np.sum(p[1:-1][hit]))
    return ConcentrationResult(D=D, rho=rho, theta=theta, variant=variant,
                               mass=min(mass, 1.0), tail_mass=tail_mass)


def lemma3_check(q: ScalarQuantizer, source: SourceModel, r: float, D: float,
                 kappa: float) -> Lemma3Result:
    """
    Outside-window mass and distortion with eps^r = D / kappa.

    For any quantizer of distortion at most D the first is at most kappa
    and the second at most D.
    """
    if not kappa > 0 or not D > 0:
        raise ValidationError("kappa and D must be positive")
    component, left, right, x_hat, p = _masses(q, source)
    eps = (D / kappa) ** (1.0 / r)
    w_left, w_right = window_bounds(left, right, x_hat, eps)

    inside_mass = component.mass(w_left, w_right)
    lhs_a = float(np.sum(np.clip(p - inside_mass, 0.0, None)))

    total = interval_moments(component, left, right, x_hat, r).values
    inside = interval_moments(component, w_left, w_right, x_hat, r).values
    lhs_b = float(np.sum(np.clip(total - inside, 0.0, None)))

    return Lemma3Result(
        lhs_a=lhs_a,
        bound_a=kappa,
        lhs_b=lhs_b,
        bound_b=D,
        passed=lhs_a <= kappa and lhs_b <= D,
    )


def piecewise_density_tv(q: ScalarQuantizer, source: SourceModel) -> PiecewiseTV:
    """
    int |f_q - f| where f_q spreads each bounded cell's mass evenly over
    the cell; the unbounded cells carry no density and add their mass.
    """
    component, left, right, _, p = _masses(q, source)
    lengths = right[1:-1] - left[1:-1]
    density = p[1:-1] / lengths
    bounded = float(np.sum(tv_cells(component, left[1:-1], right[1:-1], density)))
    tail_mass = float(p[0] + p[-1])
    return PiecewiseTV(value=bounded + tail_mass, bounded=bounded, tail_mass=tail_mass)


def tv_piecewise(q: ScalarQuantizer, source: SourceModel) -> float:
    """Total variation distance between f and its cell-averaged version"""
    return piecewise_density_tv(q, source).value


def weighted_cell_moment(q: ScalarQuantizer, source: SourceModel, r: float, D: float,
                         window_rho: Optional[float] = None) -> CellMomentStatistic:
    """
    (1/D) sum_i p_i length_i^r over bounded cells, which tends to at most
    2^r (1 + r).

    With ``window_rho`` the windowed form (1/D) sum_i P(X in B_i) Lambda_i^r
    is returned instead, with eps = window_rho D^(1/r), over all cells.
    """
    if not D > 0:
        raise ValidationError(f"D must be positive, got {D}")
    component, left, right, _, p = _masses(q, source)
    tail_mass = float(p[0] + p[-1])
    if window_rho is None:
        lengths = right[1:-1] - left[1:-1]
        value = float(np.sum(p[1:-1] * lengths ** r)) / D
        return CellMomentStatistic(value=value, tail_mass=tail_mass)

    measures = window_measures(q, window_rho * D ** (1.0 / r))
    inside = component.mass(measures.left, measures.right)
    value = float(np.sum(inside * measures.Lambda ** r)) / D
    return CellMomentStatistic(value=value, tail_mass=tail_mass)
