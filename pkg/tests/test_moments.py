import numpy as np
import pytest

from src.config.settings import STREAM_BLOCK
from src.errors import ValidationError
from src.lattice.decoders import nearest_point, parse_lattice
from src.lattice.moments import (
    HEXAGON_G,
    MOMENT_COLUMNS,
    analytic_moment,
    moment_table,
    normalized_moment_mc,
    sample_voronoi_uniform,
)


def test_scalar_cell_is_the_unit_interval():
    y = sample_voronoi_uniform(parse_lattice("Z:1"), 1_000_000, seed=1)[:, 0]
    assert np.all(np.abs(y) <= 0.5)
    second = y ** 2
    assert abs(second.mean() - 1 / 12) <= 3 * second.std(ddof=1) / np.sqrt(y.size)
    assert abs(y.mean()) <= 3 * y.std(ddof=1) / np.sqrt(y.size)


def test_samples_decode_to_the_origin():
    lat = parse_lattice("A:2")
    y = sample_voronoi_uniform(lat, 2000, seed=2)
    assert y.shape == (2000, 3)
    np.testing.assert_allclose(y.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_array_equal(nearest_point(lat, y), 0.0)


def test_hexagonal_mean_is_zero():
    y = sample_voronoi_uniform(parse_lattice("A:2"), 200_000, seed=3)
    err = 4 * y.std(axis=0, ddof=1) / np.sqrt(len(y))
    assert np.all(np.abs(y.mean(axis=0)) <= err + 1e-12)


def test_cube_moment():
    estimate = normalized_moment_mc(parse_lattice("Z:3"), 2.0, 100_000, seed=4)
    assert estimate.ell == pytest.approx(0.25, abs=4 * estimate.std_error)
    assert estimate.per_dim_G == pytest.approx(estimate.ell / 3)
    assert estimate.n_samples == 100_000


def test_hexagon_moment():
    estimate = normalized_moment_mc(parse_lattice("A:2"), 2.0, 200_000, seed=5)
    assert estimate.per_dim_G == pytest.approx(0.080188, abs=4 * estimate.std_error / 2 + 1e-6)


def test_scaling_leaves_the_normalized_moment_unchanged():
    a = normalized_moment_mc(parse_lattice("D:3"), 2.0, 20_000, seed=6)
    b = normalized_moment_mc(parse_lattice("D:3", scale=3.0), 2.0, 20_000, seed=6)
    assert b.ell == pytest.approx(a.ell, rel=1e-9)


def test_estimate_does_not_depend_on_worker_count():
    lat = parse_lattice("D:4")
    n = STREAM_BLOCK + 1000
    assert normalized_moment_mc(lat, 2.0, n, 7, n_jobs=1) == normalized_moment_mc(lat, 2.0, n, 7, n_jobs=2)


def test_guards():
    lat = parse_lattice("Z:2")
    with pytest.raises(ValidationError):
        normalized_moment_mc(lat, 2.0, 100, seed=1)
    with pytest.raises(ValidationError):
        normalized_moment_mc(lat, 0.0, 20_000, seed=1)
    with pytest.raises(ValidationError):
        sample_voronoi_uniform(lat, 0, seed=1)


def test_analytic_moments():
    assert analytic_moment(parse_lattice("Z:1"), 1.0) == pytest.approx(0.25)
    assert analytic_moment(parse_lattice("Z:1"), 2.0) == pytest.approx(1 / 12)
    assert analytic_moment(parse_lattice("Z:4"), 2.0) == pytest.approx(1 / 3)
    assert analytic_moment(parse_lattice("A:2"), 2.0) == pytest.approx(2 * 0.080188, abs=2e-6)
    assert 2 * HEXAGON_G == analytic_moment(parse_lattice("A:2"), 2.0)
    assert analytic_moment(parse_lattice("E8"), 2.0) is None
    assert analytic_moment(parse_lattice("Z:3"), 1.0) is None


def test_moment_table_layout():
    table = moment_table([parse_lattice("Z:2"), parse_lattice("A:2")], 2.0, 10_000, seed=8)
    assert list(table.columns) == MOMENT_COLUMNS
    assert list(table["lattice"]) == ["Z:2", "A:2"]


@pytest.mark.slow
def test_e8_moment():
    estimate = normalized_moment_mc(parse_lattice("E8"), 2.0, 1_000_000, seed=9)
    assert estimate.per_dim_G == pytest.approx(0.0716821, abs=5e-4)
    assert estimate.std_error / 8 < 2e-4
