# Lattice decoders and Voronoi-cell moments
from src.lattice.decoders import Lattice, brute_force_nearest, nearest_point, parse_lattice
from src.lattice.moments import (
    VoronoiMomentEstimate,
    analytic_moment,
    moment_table,
    normalized_moment_mc,
    sample_voronoi_uniform,
)

__all__ = [
    "Lattice",
    "VoronoiMomentEstimate",
    "analytic_moment",
    "brute_force_nearest",
    "moment_table",
    "nearest_point",
    "normalized_moment_mc",
    "parse_lattice",
    "sample_voronoi_uniform",
]
