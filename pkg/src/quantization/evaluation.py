"""
Quantizer Evaluation
====================

Output entropy and r-th power distortion of scalar and lattice
quantizers, either exactly from CDF differences and per-cell quadrature
(scalar sources) or by Monte Carlo over the seeded source stream.

Also hosts step calibration: bisection on the cell length until the
exact distortion lands in [D(1 - CALIBRATION_RTOL), D].
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, special

from src.config.settings import (
    CALIBRATION_MAX_ITER,
    CALIBRATION_RTOL,
    DEFAULT_N_JOBS,
    MASS_TOLERANCE,
    MC_ENTROPY_SAMPLES_PER_CELL,
)
from src.data import streams
from src.data.sources import SOURCE_STREAM, SourceModel, require_scalar, scalar_component
from src.errors import NonConvergenceError, ValidationError
from src.lattice.decoders import parse_lattice
from src.quantization.cells import interval_centroids, interval_moments
from src.quantization.scalar import ScalarQuantizer, source_span, uniform_step_for_distortion
from src.quantization.vector import LatticeQuantizer

logger = logging.getLogger(__name__)

Quantizer = Union[ScalarQuantizer, LatticeQuantizer]

RECONSTRUCTION_RULES = ("midpoint", "centroid")


@dataclass(frozen=True)
class EvaluationMode:
    """``exact_scalar`` or ``mc`` with a sample count and seed"""

    method: str = "exact_scalar"
    n: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.method not in ("exact_scalar", "mc"):
            raise ValidationError(f"Unknown evaluation mode: {self.method!r}")
        if self.method == "mc" and (self.n is None or self.n < 1 or self.seed is None):
            raise ValidationError("mc mode needs n >= 1 and a seed")

    @classmethod
    def exact(cls) -> "EvaluationMode":
        return cls("exact_scalar")

    @classmethod
    def mc(cls, n: int, seed: int) -> "EvaluationMode":
        return cls("mc", n, seed)


EXACT = EvaluationMode.exact()


@dataclass(frozen=True)
class CellProbabilities:
    left: np.ndarray
    right: np.ndarray
    reconstructions: np.ndarray
    p: np.ndarray
    residual_mass: float
    n_dropped: int


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    error: float
    interval: Tuple[float, float]
    method: str
    unreliable: bool = False
    distinct_cells: Optional[int] = None


@dataclass(frozen=True)
class DistortionEstimate:
    value: float
    error: float
    method: str


@dataclass(frozen=True)
class QuantizerReport:
    """Distortion and output entropy of one (quantizer, source) pair"""

    distortion: float
    distortion_err: float
    entropy_nats: float
    entropy_err: float
    r: float
    method: str
    n: Optional[int] = None
    seed: Optional[int] = None
    unreliable: bool = False
    entropy_interval: Tuple[float, float] = field(default=(0.0, 0.0))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["entropy_interval"] = list(self.entropy_interval)
        return data


def quantize(q: Quantizer, x) -> Tuple[np.ndarray, np.ndarray]:
    """Cell label and reconstruction of each input"""
    return q.quantize(x)


def _require_exact(q: Quantizer, source: SourceModel):
    if not isinstance(q, ScalarQuantizer):
        raise ValidationError("exact evaluation is only available for scalar quantizers")
    return require_scalar(source)


def _check_dimensions(q: Quantizer, source: SourceModel):
    if isinstance(q, ScalarQuantizer) and source.dimension != 1:
        raise ValidationError(f"scalar quantizer applied to {source.dimension}-dimensional source")
    if isinstance(q, LatticeQuantizer) and source.dimension not in (q.dimension, q.scaled.ambient_dim):
        raise ValidationError(
            f"{q.describe()} needs a {q.dimension}-dimensional source, got {source.dimension}"
        )


def cell_probabilities(q: ScalarQuantizer, source: SourceModel,
                       mass_tolerance: float = MASS_TOLERANCE) -> CellProbabilities:
    """
    Masses of the cells meeting the central region where the CDF lies in
    [mass_tolerance, 1 - mass_tolerance]; the rest is reported as residual.
    """
    component = _require_exact(q, source)
    left, right, x_hat = q.cells()
    p = component.mass(left, right)
    lo = float(component.ppf(mass_tolerance))
    hi = float(component.isf(mass_tolerance))
    keep = (right > lo) & (left < hi)
    dropped = p[~keep]
    return CellProbabilities(
        left=left[keep],
        right=right[keep],
        reconstructions=x_hat[keep],
        p=p[keep],
        residual_mass=float(dropped.sum()),
        n_dropped=int(dropped.size),
    )


class _SampleCounts:
    """Distinct cell labels and their counts within one stream block"""

    def __init__(self, q: Quantizer, source: SourceModel):
        self.q = q
        self.source = source

    def __call__(self, rng: np.random.Generator, size: int):
        x = self.source.sample(rng, size)
        if isinstance(self.q, ScalarQuantizer):
            labels = self.q.index(x[:, 0])
        else:
            labels, _ = self.q.quantize(x)
        return np.unique(labels, axis=0, return_counts=True)


class _ErrorPower:
    def __init__(self, q: Quantizer, source: SourceModel, r: float):
        self.q = q
        self.source = source
        self.r = r

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        x = self.source.sample(rng, size)
        if isinstance(self.q, ScalarQuantizer):
            _, x_hat = self.q.quantize(x[:, 0])
            return np.abs(x[:, 0] - x_hat) ** self.r
        return self.q.errors(x) ** self.r


def sample_cell_counts(q: Quantizer, source: SourceModel, n: int, seed: int,
                       n_jobs: int = DEFAULT_N_JOBS) -> np.ndarray:
    """Occupancy counts of the cells hit by n source draws"""
    blocks = streams.map_blocks(seed, n, _SampleCounts(q, source), stream=SOURCE_STREAM, n_jobs=n_jobs)
    labels = np.concatenate([b[0] for b in blocks], axis=0)
    counts = np.concatenate([b[1] for b in blocks])
    _, inverse = np.unique(labels, axis=0, return_inverse=True)
    return np.bincount(np.ravel(inverse), weights=counts)


def output_entropy(q: Quantizer, source: SourceModel, mode: EvaluationMode = EXACT,
                   mass_tolerance: float = MASS_TOLERANCE,
                   n_jobs: int = DEFAULT_N_JOBS) -> EntropyEstimate:
    """
    H(q(X)) in nats.

    Exact mode sums -p log p over the enumerated cells; the residual mass
    eps spread over K dropped cells adds at most eps * log(K / eps), which
    is the returned error. Monte Carlo mode applies the Miller-Madow
    correction and returns its size as the error.
    """
    _check_dimensions(q, source)
    if mode.method == "exact_scalar":
        cells = cell_probabilities(q, source, mass_tolerance)
        value = float(np.sum(special.entr(cells.p)))
        eps = cells.residual_mass
        bound = eps * math.log(cells.n_dropped / eps) if eps > 0 and cells.n_dropped else 0.0
        return EntropyEstimate(value, bound, (value, value + bound), mode.method)

    counts = sample_cell_counts(q, source, mode.n, mode.seed, n_jobs=n_jobs)
    distinct = int(counts.size)
    plug_in = float(np.sum(special.entr(counts / mode.n)))
    correction = (distinct - 1) / (2.0 * mode.n)
    unreliable = mode.n < MC_ENTROPY_SAMPLES_PER_CELL * distinct
    if unreliable:
        logger.warning(
            "Entropy estimate unreliable: %d samples over %d occupied cells", mode.n, distinct
        )
    value = plug_in + correction
    return EntropyEstimate(value, correction, (plug_in, value), mode.method, unreliable, distinct)


def exact_distortion(q: ScalarQuantizer, source: SourceModel, r: float) -> DistortionEstimate:
    component = _require_exact(q, source)
    left, right, x_hat = q.cells()
    moments = interval_moments(component, left, right, x_hat, r)
    return DistortionEstimate(float(moments.values.sum()), moments.abserr, "exact_scalar")


def distortion(q: Quantizer, source: SourceModel, r: float, mode: EvaluationMode = EXACT,
               n_jobs: int = DEFAULT_N_JOBS) -> DistortionEstimate:
    """E||X - q(X)||^r"""
    if not r > 0:
        raise ValidationError(f"r must be positive, got {r}")
    _check_dimensions(q, source)
    if mode.method == "exact_scalar":
        return exact_distortion(q, source, r)
    summary = streams.sharded_moments(mode.seed, mode.n, _ErrorPower(q, source, r),
                                      stream=SOURCE_STREAM, n_jobs=n_jobs)
    return DistortionEstimate(summary.mean, summary.std_error, "mc")


def evaluate(q: Quantizer, source: SourceModel, r: float, mode: EvaluationMode = EXACT,
             n_jobs: int = DEFAULT_N_JOBS) -> QuantizerReport:
    dist = distortion(q, source, r, mode, n_jobs=n_jobs)
    entropy = output_entropy(q, source, mode, n_jobs=n_jobs)
    return QuantizerReport(
        distortion=dist.value,
        distortion_err=dist.error,
        entropy_nats=entropy.value,
        entropy_err=entropy.error,
        r=r,
        method=mode.method,
        n=mode.n,
        seed=mode.seed,
        unreliable=entropy.unreliable,
        entropy_interval=entropy.interval,
    )


def evaluate_lattice_quantizer(lq: LatticeQuantizer, source: SourceModel, r: float, n: int,
                               seed: int, n_jobs: int = DEFAULT_N_JOBS) -> QuantizerReport:
    """Monte Carlo report for a lattice quantizer"""
    return evaluate(lq, source, r, EvaluationMode.mc(n, seed), n_jobs=n_jobs)


def make_almost_regular(pattern: Sequence[float], step: float, source: SourceModel,
                        reconstructions: str = "midpoint", offset: float = 0.0) -> ScalarQuantizer:
    """
    Periodic cell lengths ``step * pattern`` over the source's span.

    ``centroid`` moves every reconstruction to the conditional mean of
    its cell.
    """
    if reconstructions not in RECONSTRUCTION_RULES:
        raise ValidationError(f"reconstructions must be one of {RECONSTRUCTION_RULES}")
    q = ScalarQuantizer.almost_regular(pattern, step, offset=offset, span=source_span(source))
    if reconstructions == "centroid":
        left, right, x_hat = q.cells()
        q = q.with_reconstructions(interval_centroids(scalar_component(source), left, right, x_hat))
    return q


def _calibrate(build: Callable[[float], ScalarQuantizer], source: SourceModel, r: float,
               target_D: float, guess: float) -> ScalarQuantizer:
    if not target_D > 0:
        raise ValidationError(f"target distortion must be positive, got {target_D}")
    aim = target_D * (1.0 - 0.5 * CALIBRATION_RTOL)

    def gap(step: float) -> float:
        return exact_distortion(build(step), source, r).value - aim

    lo, hi = 0.5 * guess, 2.0 * guess
    for _ in range(CALIBRATION_MAX_ITER):
        if gap(lo) < 0:
            break
        lo *= 0.5
    else:
        raise NonConvergenceError("no step small enough for the target distortion",
                                  {"target_D": target_D, "smallest_step": lo})
    for _ in range(60):
        if gap(hi) > 0:
            break
        hi *= 2.0
    else:
        achieved = exact_distortion(build(hi), source, r).value
        raise NonConvergenceError(
            "target distortion is beyond the reach of this quantizer family",
            {"target_D": target_D, "achieved_interval": (gap(lo) + aim, achieved)},
        )

    step = optimize.bisect(gap, lo, hi, xtol=1e-14 * guess, maxiter=CALIBRATION_MAX_ITER)
    q = build(step)
    achieved = exact_distortion(q, source, r).value
    if not target_D * (1.0 - CALIBRATION_RTOL) <= achieved <= target_D:
        raise NonConvergenceError(
            "calibration missed the distortion bracket",
            {"target_D": target_D, "achieved_D": achieved, "step": step},
        )
    logger.debug("Calibrated %s to D=%.6g (achieved %.9g)", q.describe(), target_D, achieved)
    return q


def calibrate_uniform_step(source: SourceModel, r: float, target_D: float,
                           offset: float = 0.0) -> ScalarQuantizer:
    """Uniform midpoint quantizer whose exact distortion sits just below ``target_D``"""
    span = source_span(source)

    def build(step: float) -> ScalarQuantizer:
        return ScalarQuantizer.uniform(step, offset=offset, span=span)

    return _calibrate(build, source, r, target_D, uniform_step_for_distortion(target_D, r))


def calibrate_pattern_step(source: SourceModel, r: float, target_D: float, pattern: Sequence[float],
                           offset: float = 0.0, reconstructions: str = "midpoint") -> ScalarQuantizer:
    """The same bisection on the base step of an almost-regular pattern"""
    pattern = tuple(pattern)

    def build(step: float) -> ScalarQuantizer:
        return make_almost_regular(pattern, step, source, reconstructions=reconstructions, offset=offset)

    guess = uniform_step_for_distortion(target_D, r) / (sum(pattern) / len(pattern))
    return _calibrate(build, source, r, target_D, guess)


def parse_quantizer(spec: str, source: Optional[SourceModel] = None) -> Quantizer:
    """
    Quantizer from its CLI name: ``uniform:step[,offset]``,
    ``pattern:1,2@step`` or ``lattice:E8@scale``.
    """
    kind, sep, rest = spec.strip().partition(":")
    if not sep or not rest:
        raise ValidationError(f"Unsupported quantizer name: {spec!r}")
    try:
        if kind == "lattice":
            name, _, scale_text = rest.partition("@")
            return LatticeQuantizer(parse_lattice(name), float(scale_text) if scale_text else 1.0)
        if source is None:
            raise ValidationError(f"{kind} quantizers need a source to fix their span")
        if kind == "uniform":
            values = [float(v) for v in rest.split(",")]
            if len(values) not in (1, 2):
                raise ValidationError(f"uniform takes step[,offset], got {rest!r}")
            offset = values[1] if len(values) == 2 else 0.0
            return ScalarQuantizer.uniform(values[0], offset=offset, span=source_span(source))
        if kind == "pattern":
            pattern_text, at, step_text = rest.partition("@")
            if not at:
                raise ValidationError(f"pattern quantizers are written pattern:1,2@step, got {spec!r}")
            pattern = [float(v) for v in pattern_text.split(",")]
            return make_almost_regular(pattern, float(step_text), source)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad number in quantizer {spec!r}") from exc
    raise ValidationError(f"Unsupported quantizer kind: {kind!r}")
