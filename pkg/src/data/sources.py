"""
Source models for high-resolution quantization experiments.

A source is a memoryless d-dimensional random vector with a pdf. Scalar
families wrap frozen ``scipy.stats`` distributions; multi-dimensional
sources are products of i.i.d. scalar components.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats

from src.config.settings import (
    INTEGER_PART_MAX_CELLS,
    QUAD_ABS_TOL,
    QUAD_TAIL_SCALES,
)
from src.data import streams
from src.errors import NonConvergenceError, UnsupportedSourceError, ValidationError

logger = logging.getLogger(__name__)

SOURCE_STREAM = 0


@dataclass(frozen=True)
class IntegerPartEntropy:
    """H(floor(X)) with the mass left out of the enumeration"""

    value: float
    residual_mass: float
    n_cells: int
    converged: bool = True


class SourceModel:
    """
    Base class for memoryless sources

    Subclasses provide ``pdf`` and ``sample``; scalar families additionally
    provide CDF-side methods used for exact cell probabilities.
    """

    family = "source"

    def __init__(self, name: str, dimension: int, params: Dict[str, float],
                 analytic_h: Optional[float] = None):
        if dimension < 1:
            raise ValidationError(f"dimension must be >= 1, got {dimension}")
        self.name = name
        self.dimension = dimension
        self.params = dict(params)
        self.analytic_h = analytic_h

    @property
    def is_scalar(self) -> bool:
        return self.dimension == 1

    def _as_points(self, x) -> np.ndarray:
        """Reshape input to (n, d); rejects a wrong trailing dimension"""
        points = np.asarray(x, dtype=float)
        if points.ndim == 0:
            points = points.reshape(1, 1)
        elif points.ndim == 1:
            if self.dimension == 1:
                points = points.reshape(-1, 1)
            else:
                points = points.reshape(1, -1)
        if points.shape[-1] != self.dimension:
            raise ValidationError(
                f"{self.name} expects vectors of length {self.dimension}, got {points.shape[-1]}"
            )
        return points

    def pdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class ScalarSource(SourceModel):
    """A scalar family backed by a frozen scipy.stats distribution"""

    def __init__(self, name: str, params: Dict[str, float], dist, analytic_h: Optional[float],
                 support: Tuple[float, float], scale: float, breakpoints: Sequence[float] = ()):
        super().__init__(name, 1, params, analytic_h)
        self.dist = dist
        self.support = support
        self.scale = scale
        self.breakpoints = tuple(sorted(breakpoints))
        self.median = float(dist.median())

    def pdf(self, x) -> np.ndarray:
        values = np.asarray(x, dtype=float)
        density = self.dist.pdf(values)
        lo, hi = self.support
        return np.where((values < lo) | (values > hi), 0.0, density)

    def cdf(self, x):
        return self.dist.cdf(x)

    def sf(self, x):
        return self.dist.sf(x)

    def ppf(self, q):
        return self.dist.ppf(q)

    def isf(self, q):
        return self.dist.isf(q)

    def mass(self, left, right) -> np.ndarray:
        """
        P(left <= X < right), vectorised.

        Intervals right of the median are differenced on the survival
        function so tail masses keep their relative precision.
        """
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        lower = self.dist.cdf(right) - self.dist.cdf(left)
        upper = self.dist.sf(left) - self.dist.sf(right)
        middle = 1.0 - self.dist.cdf(left) - self.dist.sf(right)
        result = np.where(right <= self.median, lower, np.where(left >= self.median, upper, middle))
        return np.clip(result, 0.0, 1.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.dist.rvs(size=size, random_state=rng), dtype=float).reshape(-1, 1)

    def integration_pieces(self) -> List[Tuple[float, float]]:
        """Intervals covering the effective support with no breakpoint inside"""
        lo, hi = self.support
        lo = max(lo, self.median - QUAD_TAIL_SCALES * self.scale)
        hi = min(hi, self.median + QUAD_TAIL_SCALES * self.scale)
        knots = [lo] + [b for b in self.breakpoints if lo < b < hi] + [hi]
        return list(zip(knots[:-1], knots[1:]))


class GaussianSource(ScalarSource):
    family = "gaussian"

    def __init__(self, mu: float = 0.0, sigma: float = 1.0):
        if not sigma > 0:
            raise ValidationError(f"gaussian scale must be positive, got {sigma}")
        super().__init__(
            name=f"gaussian:{mu:g},{sigma:g}",
            params={"mu": mu, "sigma": sigma},
            dist=stats.norm(loc=mu, scale=sigma),
            analytic_h=0.5 * math.log(2 * math.pi * math.e * sigma ** 2),
            support=(-math.inf, math.inf),
            scale=sigma,
        )
        self.mu = mu
        self.sigma = sigma


class UniformSource(ScalarSource):
    family = "uniform"

    def __init__(self, a: float = 0.0, b: float = 1.0):
        if not b > a:
            raise ValidationError(f"uniform needs a < b, got a={a}, b={b}")
        super().__init__(
            name=f"uniform:{a:g},{b:g}",
            params={"a": a, "b": b},
            dist=stats.uniform(loc=a, scale=b - a),
            analytic_h=math.log(b - a),
            support=(a, b),
            scale=b - a,
            breakpoints=(a, b),
        )
        self.a = a
        self.b = b


class LaplaceSource(ScalarSource):
    family = "laplace"

    def __init__(self, mu: float = 0.0, b: float = 1.0):
        if not b > 0:
            raise ValidationError(f"laplace scale must be positive, got {b}")
        super().__init__(
            name=f"laplace:{mu:g},{b:g}",
            params={"mu": mu, "b": b},
            dist=stats.laplace(loc=mu, scale=b),
            analytic_h=1.0 + math.log(2 * b),
            support=(-math.inf, math.inf),
            scale=b,
            breakpoints=(mu,),
        )
        self.mu = mu
        self.b = b


class ProductSource(SourceModel):
    """d i.i.d. copies of a scalar family"""

    def __init__(self, component: ScalarSource, dimension: int):
        analytic_h = None if component.analytic_h is None else dimension * component.analytic_h
        super().__init__(
            name=f"{component.name}^{dimension}",
            dimension=dimension,
            params=dict(component.params),
            analytic_h=analytic_h,
        )
        self.component = component
        self.support = f"{component.support}^{dimension}"

    def pdf(self, x) -> np.ndarray:
        points = self._as_points(x)
        return np.prod(self.component.pdf(points), axis=1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        draws = self.component.dist.rvs(size=(size, self.dimension), random_state=rng)
        return np.asarray(draws, dtype=float).reshape(size, self.dimension)


FAMILIES = {
    "gaussian": GaussianSource,
    "normal": GaussianSource,
    "uniform": UniformSource,
    "laplace": LaplaceSource,
}


def create_source(spec: str) -> SourceModel:
    """
    Build a source from its CLI name.

    Args:
        spec: ``family:p1,p2`` with an optional ``^d`` product suffix,
            e.g. ``gaussian:0,1`` or ``laplace:0,1^4``

    Returns:
        The source model
    """
    text = spec.strip().lower()
    dimension = 1
    if "^" in text:
        text, _, power = text.partition("^")
        try:
            dimension = int(power)
        except ValueError:
            raise ValidationError(f"bad product dimension in source {spec!r}")
    family, _, arg_text = text.partition(":")
    if family not in FAMILIES:
        raise ValidationError(f"Unsupported source family: {family!r}")
    try:
        args = [float(a) for a in arg_text.split(",")] if arg_text else []
    except ValueError:
        raise ValidationError(f"bad parameters in source {spec!r}")
    if len(args) not in (0, 2):
        raise ValidationError(f"{family} takes two parameters, got {len(args)}")

    scalar = FAMILIES[family](*args)
    if dimension == 1:
        return scalar
    if dimension < 1:
        raise ValidationError(f"product dimension must be >= 1, got {dimension}")
    return ProductSource(scalar, dimension)


def scalar_component(source: SourceModel) -> ScalarSource:
    if isinstance(source, ScalarSource):
        return source
    if isinstance(source, ProductSource):
        return source.component
    raise UnsupportedSourceError(f"{source.name} has no scalar component")


def require_scalar(source: SourceModel) -> ScalarSource:
    if not isinstance(source, ScalarSource):
        raise ValidationError(f"{source.name} is not a scalar source")
    return source


def pdf_eval(source: SourceModel, x) -> float:
    """Density of a single point; exactly 0 outside the support"""
    point = np.asarray(x, dtype=float).reshape(-1)
    if point.size != source.dimension:
        raise ValidationError(
            f"{source.name} expects a vector of length {source.dimension}, got {point.size}"
        )
    if isinstance(source, ScalarSource):
        return float(source.pdf(point[0]))
    return float(source.pdf(point.reshape(1, -1))[0])


class _SampleBlock:
    def __init__(self, source: SourceModel):
        self.source = source

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.source.sample(rng, size)


def sample_batch(source: SourceModel, n: int, seed: int, n_jobs: int = 1) -> np.ndarray:
    """
    n i.i.d. draws as an (n, d) matrix.

    Identical (seed, n) give bit-identical output for any ``n_jobs``.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return streams.draw(seed, n, _SampleBlock(source), stream=SOURCE_STREAM, n_jobs=n_jobs)


def entropy_by_quadrature(source: ScalarSource) -> float:
    """-int f log f over the support, split at breakpoints and +-40 scales"""
    total = 0.0
    for lo, hi in source.integration_pieces():
        value, _ = integrate.quad(
            lambda t: special.entr(source.pdf(t)), lo, hi, epsabs=QUAD_ABS_TOL, limit=200
        )
        total += value
    return total


def differential_entropy(source: SourceModel) -> float:
    """h(X) in nats"""
    if source.analytic_h is not None:
        return source.analytic_h
    if isinstance(source, ScalarSource):
        return entropy_by_quadrature(source)
    if isinstance(source, ProductSource):
        return source.dimension * differential_entropy(source.component)
    raise UnsupportedSourceError(
        f"no differential entropy for non-product source {source.name}"
    )


def _scalar_integer_part_entropy(source: ScalarSource, mass_tolerance: float,
                                 strict: bool) -> IntegerPartEntropy:
    center = math.floor(source.median)
    lo, hi = center, center
    width = 16
    converged = True
    while True:
        lo, hi = center - width, center + width
        n_cells = hi - lo + 1
        residual = float(source.cdf(lo) + source.sf(hi + 1))
        if residual < mass_tolerance:
            break
        if n_cells >= INTEGER_PART_MAX_CELLS:
            if strict:
                raise NonConvergenceError(
                    f"integer-part enumeration of {source.name} did not converge",
                    {"residual_mass": residual, "n_cells": n_cells},
                )
            logger.warning("H(floor X) for %s stopped at %d cells with residual mass %.3g",
                           source.name, n_cells, residual)
            converged = False
            break
        width *= 2

    k = np.arange(lo, hi + 1, dtype=float)
    p = source.mass(k, k + 1)
    value = float(np.sum(special.entr(p)))
    logger.debug("H(floor X) for %s over %d cells, residual %.3g", source.name, n_cells, residual)
    return IntegerPartEntropy(value=value, residual_mass=residual, n_cells=int(n_cells),
                              converged=converged)


def integer_part_entropy(source: SourceModel, mass_tolerance: float = 1e-12,
                         strict: bool = True) -> IntegerPartEntropy:
    """
    H(floor(X)) in nats by summing over integer cells.

    Products add the per-coordinate values. If the residual mass stays
    above ``mass_tolerance`` at the enumeration cap, a sign the source may
    have infinite Renyi information dimension, NonConvergenceError is
    raised; with ``strict=False`` the partial sum is returned instead with
    ``converged=False``.
    """
    if not 0 < mass_tolerance <= 1e-6:
        raise ValidationError(f"mass_tolerance must lie in (0, 1e-6], got {mass_tolerance}")
    if isinstance(source, ScalarSource):
        return _scalar_integer_part_entropy(source, mass_tolerance, strict)
    if isinstance(source, ProductSource):
        one = _scalar_integer_part_entropy(source.component, mass_tolerance / source.dimension,
                                           strict)
        return IntegerPartEntropy(
            value=source.dimension * one.value,
            residual_mass=source.dimension * one.residual_mass,
            n_cells=one.n_cells * source.dimension,
            converged=one.converged,
        )
    raise UnsupportedSourceError(f"integer-part entropy not available for {source.name}")


def moment_log_condition(source: SourceModel) -> float:
    """
    E[log(1 + |X|)], the moment whose finiteness guarantees H(floor X) < inf.

    For products the per-coordinate sum is returned, an upper bound on
    E[log(1 + ||X||)].
    """
    component = scalar_component(source)
    total = 0.0
    for lo, hi in component.integration_pieces():
        value, _ = integrate.quad(
            lambda t: math.log1p(abs(t)) * float(component.pdf(t)), lo, hi,
            epsabs=QUAD_ABS_TOL, limit=200,
        )
        total += value
    return total * source.dimension
