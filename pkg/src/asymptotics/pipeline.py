"""
Excess-Rate Pipeline
====================

Drives quantizer families across a decreasing list of target
distortions: calibrate, evaluate exactly, compare with the reference rate.
Points are independent and may run on joblib workers; results always
follow the order of the input distortions.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import pandas as pd
from joblib import Parallel, delayed

from src.bounds.analytic import gaussian_rate_distortion, nats_to_bits, shannon_lower_bound
from src.config.settings import DEFAULT_N_JOBS
from src.data.sources import GaussianSource, SourceModel, differential_entropy, require_scalar
from src.errors import QuantizationError, ValidationError
from src.asymptotics.statistics import ConcentrationResult, concentration_statistic
from src.quantization.evaluation import (
    calibrate_pattern_step,
    calibrate_uniform_step,
    exact_distortion,
    output_entropy,
)
from src.quantization.scalar import ScalarQuantizer, source_span, uniform_step_for_distortion

logger = logging.getLogger(__name__)

EXCESS_COLUMNS = ["D", "achieved_D", "entropy_nats", "reference_nats", "excess_bits"]
CONCENTRATION_COLUMNS = ["D", "rho", "theta", "variant", "mass", "tail_mass"]


@dataclass(frozen=True)
class QuantizerFamily:
    """
    How to build a quantizer for a target distortion.

    ``uniform`` and ``pattern`` are calibrated by bisection; ``asymptotic``
    uses the uniform step 2(1+r)^(1/r) D^(1/r) without calibration.
    """

    kind: str = "uniform"
    pattern: Tuple[float, ...] = (1.0,)
    reconstructions: str = "midpoint"

    def __post_init__(self):
        if self.kind not in ("uniform", "pattern", "asymptotic"):
            raise ValidationError(f"Unknown quantizer family: {self.kind!r}")

    def build(self, source: SourceModel, r: float, D: float) -> ScalarQuantizer:
        if self.kind == "uniform":
            return calibrate_uniform_step(source, r, D)
        if self.kind == "pattern":
            return calibrate_pattern_step(source, r, D, self.pattern,
                                          reconstructions=self.reconstructions)
        return ScalarQuantizer.uniform(uniform_step_for_distortion(D, r), span=source_span(source))

    def describe(self) -> str:
        if self.kind == "pattern":
            return "pattern:" + ",".join(f"{p:g}" for p in self.pattern)
        return self.kind


def parse_family(spec: str) -> QuantizerFamily:
    """``uniform``, ``asymptotic``, ``uniform_midpoint`` or ``pattern:1,2``"""
    text = spec.strip().lower()
    if text in ("uniform", "uniform_midpoint"):
        return QuantizerFamily("uniform")
    if text == "asymptotic":
        return QuantizerFamily("asymptotic")
    if text.startswith("pattern:"):
        try:
            pattern = tuple(float(p) for p in text.split(":", 1)[1].split(","))
        except ValueError:
            raise ValidationError(f"bad pattern in family {spec!r}")
        return QuantizerFamily("pattern", pattern)
    raise ValidationError(f"Unsupported quantizer family: {spec!r}")


@dataclass(frozen=True)
class ExcessRatePoint:
    D: float
    achieved_D: float
    entropy: float
    reference_rate: float
    excess: float
    entropy_err: float = 0.0

    @property
    def excess_bits(self) -> float:
        return nats_to_bits(self.excess)


@dataclass(frozen=True)
class ExcessRateCurve:
    points: List[ExcessRatePoint] = field(default_factory=list)
    partial: bool = False
    error: Optional[str] = None


def reference_rate(source: SourceModel, r: float, D: float) -> float:
    """Exact R(D) for a Gaussian under squared error, else the Shannon-lower-bound asymptote"""
    if isinstance(source, GaussianSource) and r == 2:
        return gaussian_rate_distortion(source.sigma, D)
    return shannon_lower_bound(differential_entropy(source), source.dimension, r, D)


def _check_targets(D_list: Sequence[float]) -> List[float]:
    targets = [float(D) for D in D_list]
    if not targets:
        raise ValidationError("need at least one target distortion")
    if any(not D > 0 for D in targets):
        raise ValidationError("target distortions must be positive")
    if any(b >= a for a, b in zip(targets, targets[1:])):
        raise ValidationError("target distortions must be strictly decreasing")
    return targets


def excess_rate_point(source: SourceModel, r: float, D: float,
                      family: QuantizerFamily) -> ExcessRatePoint:
    q = family.build(source, r, D)
    achieved = exact_distortion(q, source, r).value
    entropy = output_entropy(q, source)
    reference = reference_rate(source, r, D)
    point = ExcessRatePoint(
        D=D,
        achieved_D=achieved,
        entropy=entropy.value,
        reference_rate=reference,
        excess=entropy.value - reference,
        entropy_err=entropy.error,
    )
    logger.info("D=%.3g: excess %.5f bits", D, point.excess_bits)
    return point


def _guarded_point(source, r, D, family):
    try:
        return excess_rate_point(source, r, D, family)
    except QuantizationError as exc:
        return exc


def excess_rate_curve(source: SourceModel, r: float, D_list: Sequence[float],
                      family: QuantizerFamily = QuantizerFamily(),
                      n_jobs: int = DEFAULT_N_JOBS) -> ExcessRateCurve:
    """
    Excess of the family's exact output entropy over the reference rate
    at each target distortion.

    A failing point ends the curve: the points before it come back with
    ``partial=True`` and the error message.
    """
    require_scalar(source)
    targets = _check_targets(D_list)

    if n_jobs == 1:
        results = []
        for D in targets:
            outcome = _guarded_point(source, r, D, family)
            results.append(outcome)
            if isinstance(outcome, Exception):
                break
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_guarded_point)(source, r, D, family) for D in targets
        )

    points = []
    for outcome in results:
        if isinstance(outcome, Exception):
            logger.warning("Excess curve stopped after %d points: %s", len(points), outcome)
            return ExcessRateCurve(points, partial=True, error=str(outcome))
        points.append(outcome)
    return ExcessRateCurve(points)


def excess_table(curve: ExcessRateCurve) -> pd.DataFrame:
    rows = [
        {
            "D": p.D,
            "achieved_D": p.achieved_D,
            "entropy_nats": p.entropy,
            "reference_nats": p.reference_rate,
            "excess_bits": p.excess_bits,
        }
        for p in curve.points
    ]
    return pd.DataFrame(rows, columns=EXCESS_COLUMNS)


def concentration_curve(source: SourceModel, r: float, D_list: Sequence[float], rho: float,
                        theta: float, family: QuantizerFamily = QuantizerFamily(),
                        variant: str = "theorem2_lambda",
                        n_jobs: int = DEFAULT_N_JOBS) -> List[ConcentrationResult]:
    """
    Concentration statistic along the family, each evaluated at the
    quantizer's own exact distortion.
    """
    require_scalar(source)
    targets = _check_targets(D_list)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_concentration_point)(source, r, D, rho, theta, family, variant) for D in targets
    )
    return list(results)


def _concentration_point(source, r, D, rho, theta, family, variant) -> ConcentrationResult:
    q = family.build(source, r, D)
    achieved = exact_distortion(q, source, r).value
    result = concentration_statistic(q, source, r, achieved, rho, theta, variant,
                                     check_distortion=False)
    logger.debug("D=%.3g: %s mass %.4f", D, variant, result.mass)
    return result


def concentration_table(results: Sequence[ConcentrationResult]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in results], columns=CONCENTRATION_COLUMNS)
