"""
Voronoi-cell sampling and normalized moments of lattices.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from src.config.settings import DEFAULT_N_JOBS, MIN_MOMENT_SAMPLES
from src.data import streams
from src.errors import ValidationError
from src.lattice.decoders import Lattice, nearest_point

logger = logging.getLogger(__name__)

LATTICE_STREAM = 1

MOMENT_COLUMNS = ["lattice", "d", "r", "ell", "per_dim_G", "std_error", "n_samples", "seed"]

HEXAGON_G = 5.0 / (36.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class VoronoiMomentEstimate:
    """Monte Carlo estimate of the normalized r-th moment of a Voronoi cell"""

    lattice: str
    d: int
    r: float
    ell: float
    per_dim_G: float
    std_error: float
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


class _VoronoiBlock:
    """Dithered draws for one stream block: u - Q(u), u uniform on the fundamental parallelepiped"""

    def __init__(self, lat: Lattice):
        self.lat = lat

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        coefficients = rng.random((size, self.lat.dimension))
        u = coefficients @ self.lat.generator
        return u - nearest_point(self.lat, u)


class _NormPower:
    def __init__(self, lat: Lattice, r: float):
        self.sampler = _VoronoiBlock(lat)
        self.r = r

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        y = self.sampler(rng, size)
        return np.linalg.norm(y, axis=1) ** self.r


def sample_voronoi_uniform(lat: Lattice, n: int, seed: int,
                           n_jobs: int = DEFAULT_N_JOBS) -> np.ndarray:
    """
    n i.i.d. points uniform on the Voronoi cell of the origin.

    Rows have the lattice's ambient dimension (d+1 for A^n).
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return streams.draw(seed, n, _VoronoiBlock(lat), stream=LATTICE_STREAM, n_jobs=n_jobs)


def normalized_moment_mc(lat: Lattice, r: float, n: int, seed: int,
                         n_jobs: int = DEFAULT_N_JOBS) -> VoronoiMomentEstimate:
    """
    Estimate ell = E||Y||^r / V^(r/d) for Y uniform on the Voronoi cell.

    The estimate is identical for every ``n_jobs``.
    """
    if not r > 0:
        raise ValidationError(f"r must be positive, got {r}")
    if n < MIN_MOMENT_SAMPLES:
        raise ValidationError(f"moment estimation needs n >= {MIN_MOMENT_SAMPLES}, got {n}")

    summary = streams.sharded_moments(seed, n, _NormPower(lat, r), stream=LATTICE_STREAM, n_jobs=n_jobs)
    norm = lat.volume ** (r / lat.dimension)
    ell = summary.mean / norm
    logger.info("%s r=%g: ell=%.6g over %d samples", lat.name, r, ell, n)
    return VoronoiMomentEstimate(
        lattice=lat.name,
        d=lat.dimension,
        r=r,
        ell=ell,
        per_dim_G=ell / lat.dimension,
        std_error=summary.std_error / norm,
        n_samples=n,
        seed=seed,
    )


def analytic_moment(lat: Lattice, r: float) -> Optional[float]:
    """Closed-form ell where one is known, else None"""
    if lat.family == "Z":
        if lat.dimension == 1:
            return 1.0 / (2 ** r * (1 + r))
        if r == 2:
            return lat.dimension / 12.0
    if lat.family == "A" and lat.dimension == 2 and r == 2:
        return 2 * HEXAGON_G
    return None


def moment_table(lattices: Iterable[Lattice], r: float, n: int, seed: int,
                 n_jobs: int = DEFAULT_N_JOBS) -> pd.DataFrame:
    """One row per lattice in the moment CSV layout"""
    rows = [normalized_moment_mc(lat, r, n, seed, n_jobs=n_jobs).to_dict() for lat in lattices]
    return pd.DataFrame(rows, columns=MOMENT_COLUMNS)
