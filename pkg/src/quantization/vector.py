"""
Lattice vector quantizers: q(x) = scale * nearest_point(x / scale).
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.errors import ValidationError
from src.lattice.decoders import Lattice, nearest_point

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatticeQuantizer:
    lattice: Lattice
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"quantizer scale must be positive, got {self.scale}")

    @property
    def scaled(self) -> Lattice:
        return self.lattice.with_scale(self.lattice.scale * self.scale)

    @property
    def dimension(self) -> int:
        return self.lattice.dimension

    @property
    def cell_volume(self) -> float:
        return self.scaled.volume

    def to_ambient(self, x) -> np.ndarray:
        """Source vectors in decoder coordinates; A^n sources are embedded into the hyperplane"""
        points = np.atleast_2d(np.asarray(x, dtype=float))
        lat = self.scaled
        if points.shape[1] == lat.ambient_dim:
            return points
        if lat.family == "A" and points.shape[1] == lat.dimension:
            return lat.embed(points)
        raise ValidationError(
            f"{lat.name} quantizes vectors of length {lat.dimension}, got {points.shape[1]}"
        )

    def quantize(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Integer labels in the generator basis and the reconstruction points"""
        points = self.to_ambient(x)
        lat = self.scaled
        reconstructions = nearest_point(lat, points)
        return lat.coordinates(reconstructions), reconstructions

    def errors(self, x) -> np.ndarray:
        """Euclidean quantization error norms"""
        points = self.to_ambient(x)
        return np.linalg.norm(points - nearest_point(self.scaled, points), axis=1)

    def describe(self) -> str:
        return f"lattice:{self.lattice.name}@{self.scale:.6g}"
