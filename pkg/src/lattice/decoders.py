"""
Lattice Decoders
================

Exact nearest-point decoders for Z^n, D^n, D^n*, A^n and E8 together
with a brute-force oracle used by the tests.

Ties are resolved by rounding half away from zero; in the D^n parity fix
the lowest-indexed coordinate among those with the largest rounding error
is moved to its second-nearest integer. The two-coset decoders keep the
integer coset when both cosets are equally close. The oracle applies the
same rule, so both return identical points.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from src.errors import NonConvergenceError, ValidationError

logger = logging.getLogger(__name__)

FAMILIES = ("Z", "D", "Dstar", "A", "E8")

HYPERPLANE_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-12


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class Lattice:
    """
    A scaled classic lattice.

    Points are ``scale`` times points of the unscaled family. A^n lives
    in the (d+1)-coordinate hyperplane whose coordinates sum to zero.
    """

    family: str
    dimension: int
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"Unknown lattice family: {self.family!r}")
        if self.family == "E8" and self.dimension != 8:
            raise ValidationError("E8 has dimension 8")
        minimum = 2 if self.family in ("D", "Dstar") else 1
        if self.dimension < minimum:
            raise ValidationError(f"{self.family} needs dimension >= {minimum}, got {self.dimension}")
        if not self.scale > 0:
            raise ValidationError(f"lattice scale must be positive, got {self.scale}")

    @property
    def name(self) -> str:
        return "E8" if self.family == "E8" else f"{self.family}:{self.dimension}"

    @property
    def ambient_dim(self) -> int:
        return self.dimension + 1 if self.family == "A" else self.dimension

    def with_scale(self, scale: float) -> "Lattice":
        return Lattice(self.family, self.dimension, scale)

    @cached_property
    def unit_generator(self) -> np.ndarray:
        """Generator rows of the unscaled lattice"""
        d = self.dimension
        if self.family == "Z":
            return np.eye(d)
        if self.family == "D":
            g = np.zeros((d, d))
            g[0, 0], g[0, 1] = -1.0, -1.0
            for i in range(1, d):
                g[i, i - 1], g[i, i] = 1.0, -1.0
            return g
        if self.family == "Dstar":
            g = np.eye(d)
            g[d - 1, :] = 0.5
            return g
        if self.family == "A":
            g = np.zeros((d, d + 1))
            for i in range(d):
                g[i, i], g[i, i + 1] = 1.0, -1.0
            return g
        # E8: 2e1, e_{i+1} - e_i, and the all-halves glue vector
        g = np.zeros((8, 8))
        g[0, 0] = 2.0
        for i in range(1, 7):
            g[i, i - 1], g[i, i] = -1.0, 1.0
        g[7, :] = 0.5
        return g

    @property
    def generator(self) -> np.ndarray:
        return self.scale * self.unit_generator

    @property
    def volume(self) -> float:
        """Intrinsic d-dimensional volume of a fundamental cell"""
        g = self.unit_generator
        unit = math.sqrt(abs(np.linalg.det(g @ g.T)))
        return unit * self.scale ** self.dimension

    @property
    def covering_radius_bound(self) -> float:
        """Upper bound on the covering radius; safe half-width for the oracle box"""
        d = self.dimension
        if self.family == "E8":
            unit = 1.0
        elif self.family == "D":
            unit = max(1.0, math.sqrt(d) / 2)
        elif self.family == "A":
            unit = math.sqrt(d + 1) / 2
        else:
            unit = math.sqrt(d) / 2
        return unit * self.scale

    @cached_property
    def hyperplane_basis(self) -> np.ndarray:
        """Orthonormal d x (d+1) basis of the sum-zero hyperplane (A^n only)"""
        q, _ = np.linalg.qr(self.unit_generator.T)
        return q.T

    def embed(self, x) -> np.ndarray:
        """Map intrinsic d-vectors into ambient coordinates"""
        points = np.asarray(x, dtype=float)
        if self.family != "A":
            return points
        return points @ self.hyperplane_basis

    def coordinates(self, points) -> np.ndarray:
        """Integer labels of lattice points in the generator basis"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        labels, *_ = np.linalg.lstsq(self.generator.T, points.T, rcond=None)
        return np.rint(labels.T).astype(np.int64)

    def decode(self, x) -> np.ndarray:
        return nearest_point(self, x)


def parse_lattice(spec: str, scale: float = 1.0) -> Lattice:
    """
    Lattice from its CLI name: ``Z:d``, ``D:d``, ``Dstar:d``, ``A:d`` or ``E8``
    """
    text = spec.strip()
    if text.upper() == "E8":
        return Lattice("E8", 8, scale)
    family, sep, dim_text = text.partition(":")
    aliases = {"z": "Z", "d": "D", "dstar": "Dstar", "d*": "Dstar", "a": "A"}
    if not sep or family.lower() not in aliases:
        raise ValidationError(f"Unsupported lattice name: {spec!r}")
    try:
        dimension = int(dim_text)
    except ValueError:
        raise ValidationError(f"bad lattice dimension in {spec!r}")
    return Lattice(aliases[family.lower()], dimension, scale)


def _decode_z(x: np.ndarray) -> np.ndarray:
    return round_half_away(x)


def _decode_d(x: np.ndarray) -> np.ndarray:
    f = round_half_away(x)
    odd = np.mod(f.sum(axis=1), 2) != 0
    if np.any(odd):
        err = np.abs(x[odd] - f[odd])
        # argmax returns the first index among ties
        worst = np.argmax(err, axis=1)
        rows = np.nonzero(odd)[0]
        xv = x[rows, worst]
        fv = f[rows, worst]
        step = np.where(xv > fv, 1.0, np.where(xv < fv, -1.0, 1.0))
        f[rows, worst] = fv + step
    return f


def _closer(x: np.ndarray, first: np.ndarray, second: np.ndarray) -> np.ndarray:
    d1 = np.sum((x - first) ** 2, axis=1)
    d2 = np.sum((x - second) ** 2, axis=1)
    return np.where((d2 < d1)[:, None], second, first)


def _decode_dstar(x: np.ndarray) -> np.ndarray:
    return _closer(x, _decode_z(x), _decode_z(x - 0.5) + 0.5)


def _decode_e8(x: np.ndarray) -> np.ndarray:
    return _closer(x, _decode_d(x), _decode_d(x - 0.5) + 0.5)


def _decode_a(x: np.ndarray) -> np.ndarray:
    f = round_half_away(x)
    deficiency = f.sum(axis=1).astype(np.int64)
    delta = x - f
    if np.any(deficiency > 0):
        # coordinates rounded up the most go down first
        rank = np.argsort(np.argsort(delta, axis=1, kind="stable"), axis=1, kind="stable")
        f -= ((rank < deficiency[:, None]) & (deficiency[:, None] > 0)).astype(float)
    if np.any(deficiency < 0):
        rank = np.argsort(np.argsort(-delta, axis=1, kind="stable"), axis=1, kind="stable")
        f += ((rank < -deficiency[:, None]) & (deficiency[:, None] < 0)).astype(float)
    return f


_DECODERS = {
    "Z": _decode_z,
    "D": _decode_d,
    "Dstar": _decode_dstar,
    "A": _decode_a,
    "E8": _decode_e8,
}


def project_to_hyperplane(points: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Orthogonal projection onto sum(x) = 0, with a flag telling whether anything moved"""
    sums = points.sum(axis=1, keepdims=True)
    off = np.abs(sums) > HYPERPLANE_TOLERANCE * max(1.0, float(np.max(np.abs(points), initial=0.0)))
    if not np.any(off):
        return points, False
    return points - sums / points.shape[1], True


def _check_points(lat: Lattice, x) -> Tuple[np.ndarray, bool]:
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.ndim != 2 or points.shape[1] != lat.ambient_dim:
        raise ValidationError(
            f"{lat.name} decodes vectors of length {lat.ambient_dim}, got shape {np.shape(x)}"
        )
    return points, single


def nearest_point(lat: Lattice, x, return_flag: bool = False):
    """
    Closest lattice point in Euclidean distance.

    Args:
        lat: the lattice
        x: one vector or an (n, ambient_dim) array
        return_flag: also return whether A^n input had to be projected
            onto the sum-zero hyperplane

    Returns:
        Lattice points with the shape of ``x``, or ``(points, projected)``
        when ``return_flag`` is set
    """
    points, single = _check_points(lat, x)
    moved = False
    if lat.family == "A":
        points, moved = project_to_hyperplane(points)
        if moved:
            logger.warning("Input to %s was off the sum-zero hyperplane; projected", lat.name)
    decoded = lat.scale * _DECODERS[lat.family](points / lat.scale)
    decoded = decoded[0] if single else decoded
    return (decoded, moved) if return_flag else decoded


def _axis_values(center: float, radius: float, offset: float) -> np.ndarray:
    lo = math.ceil(center - radius - offset)
    hi = math.floor(center + radius - offset)
    return np.arange(lo, hi + 1, dtype=float) + offset


def _box_candidates(lat: Lattice, x: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """Unscaled lattice points with every coordinate inside x +- radius, and their coset offsets"""
    offsets = (0.0, 0.5) if lat.family in ("Dstar", "E8") else (0.0,)
    groups, shifts = [], []
    for offset in offsets:
        axes = [_axis_values(c, radius, offset) for c in x]
        if any(len(a) == 0 for a in axes):
            continue
        grid = np.array(list(itertools.product(*axes)), dtype=float)
        sums = grid.sum(axis=1)
        if lat.family in ("D", "E8"):
            grid = grid[np.isclose(np.mod(sums, 2.0), 0.0) | np.isclose(np.mod(sums, 2.0), 2.0)]
        elif lat.family == "A":
            grid = grid[np.isclose(sums, 0.0)]
        groups.append(grid)
        shifts.append(np.full(len(grid), offset))
    if not groups:
        return np.empty((0, lat.ambient_dim)), np.empty(0)
    return np.concatenate(groups, axis=0), np.concatenate(shifts)


def _pick(x: np.ndarray, candidates: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """
    Nearest candidate under the decoders' tie rule.

    Among the points at minimal distance: the integer coset before the
    half-integer one, then the fewest unit moves away from the coset's
    half-away rounding of x, then moves on the lowest-indexed coordinates,
    then the lexicographically largest point.
    """
    dist = np.sum((candidates - x) ** 2, axis=1)
    keep = dist <= dist.min() + TIE_TOLERANCE
    best, offsets = candidates[keep], offsets[keep]
    rounded = round_half_away(x[None, :] - offsets[:, None]) + offsets[:, None]
    moves = best - rounded
    keys = [offsets, np.rint(np.sum(moves ** 2, axis=1))]
    keys += [-(moves[:, i] != 0).astype(float) for i in range(best.shape[1])]
    keys += [-best[:, i] for i in range(best.shape[1])]
    # lexsort keys run last-to-first
    order = np.lexsort(keys[::-1])
    return best[order[0]]


def brute_force_nearest(lat: Lattice, x, radius: Optional[float] = None) -> np.ndarray:
    """
    Exhaustive nearest point over the box x +- radius.

    The box is enlarged once if it holds no lattice point. Test oracle only.
    """
    point = np.asarray(x, dtype=float).reshape(-1)
    if point.size != lat.ambient_dim:
        raise ValidationError(f"{lat.name} decodes vectors of length {lat.ambient_dim}")
    if lat.family == "A":
        projected, _ = project_to_hyperplane(point.reshape(1, -1))
        point = projected[0]
    if radius is None:
        radius = lat.covering_radius_bound + 1e-9
    unscaled = point / lat.scale
    unit_radius = radius / lat.scale

    for attempt in range(2):
        candidates, offsets = _box_candidates(lat, unscaled, unit_radius)
        if len(candidates):
            return lat.scale * _pick(unscaled, candidates, offsets)
        logger.debug("Empty oracle box for %s at radius %g, enlarging", lat.name, unit_radius)
        unit_radius *= 2
    raise NonConvergenceError(
        f"no lattice point of {lat.name} within the search box",
        {"radius": unit_radius * lat.scale},
    )
