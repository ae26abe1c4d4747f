import math

import numpy as np
import pytest

from src.bounds.analytic import (
    BOUND_KINDS,
    FIGURE1_COLUMNS,
    BoundPoint,
    bound_point,
    excess_rate_lb,
    excess_rate_lb_per_dim_quadratic,
    figure1_table,
    gaussian_rate_distortion,
    gish_pierce_constant,
    interval_moment,
    nats_to_bits,
    shannon_lower_bound,
    slb_constant,
    tessellating_excess,
    tessellating_rate,
    unit_ball_volume,
    zador_rc_ub_per_dim,
    zador_scalar_rate,
)
from src.errors import ValidationError
from src.lattice.decoders import parse_lattice
from src.lattice.moments import normalized_moment_mc

H_GAUSS = 0.5 * math.log(2 * math.pi * math.e)


@pytest.mark.parametrize("d,volume", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_unit_ball_volume(d, volume):
    assert unit_ball_volume(d) == pytest.approx(volume, rel=1e-12)


class TestExcessRateLowerBound:
    def test_scalar_quadratic(self):
        value = excess_rate_lb(1, 2.0)
        assert value == pytest.approx(0.17649, abs=1e-5)
        assert nats_to_bits(value) == pytest.approx(0.25462, abs=1e-5)
        assert value == pytest.approx(gish_pierce_constant(), rel=1e-12)

    def test_ten_dimensions(self):
        assert nats_to_bits(excess_rate_lb_per_dim_quadratic(10)) == pytest.approx(0.1196, abs=1e-4)

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_order_equal_to_dimension(self, d):
        assert excess_rate_lb(d, float(d)) == pytest.approx(math.log(math.e / 2), rel=1e-12)

    @pytest.mark.parametrize("d", range(1, 25))
    def test_per_dimension_closed_form(self, d):
        assert excess_rate_lb_per_dim_quadratic(d) == pytest.approx(excess_rate_lb(d, 2.0) / d, rel=1e-10)

    def test_per_dimension_decreasing(self):
        values = [excess_rate_lb_per_dim_quadratic(d) for d in range(1, 25)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValidationError):
            excess_rate_lb(0, 2.0)
        with pytest.raises(ValidationError):
            excess_rate_lb(2, 0.0)


class TestShannonLowerBound:
    def test_gaussian_matches_rate_distortion(self):
        assert shannon_lower_bound(H_GAUSS, 1, 2.0, 0.01) == pytest.approx(0.5 * math.log(100), rel=1e-12)
        assert gaussian_rate_distortion(1.0, 0.01) == pytest.approx(0.5 * math.log(100), rel=1e-12)

    def test_unit_distortion(self):
        assert shannon_lower_bound(0.7, 3, 1.5, 1.0) == pytest.approx(0.7 - slb_constant(3, 1.5))

    def test_rate_distortion_floor(self):
        assert gaussian_rate_distortion(1.0, 2.0) == 0.0

    def test_positive_distortion_required(self):
        with pytest.raises(ValidationError):
            shannon_lower_bound(0.0, 1, 2.0, 0.0)


class TestTessellating:
    def test_interval_reaches_the_bound(self):
        assert tessellating_excess(1 / 12, 1, 2.0) == pytest.approx(excess_rate_lb(1, 2.0), rel=1e-12)

    @pytest.mark.parametrize("r", [0.5, 1.0, 1.5, 2.0, 3.0, 6.0])
    def test_interval_is_tight_for_every_order(self, r):
        assert tessellating_excess(interval_moment(r), 1, r) == pytest.approx(excess_rate_lb(1, r), rel=1e-12)

    def test_hexagon(self):
        G = 0.080188
        per_dim = nats_to_bits(tessellating_excess(2 * G, 2, 2.0) / 2)
        assert per_dim == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * G), rel=1e-12)

    def test_rate_is_slb_plus_excess(self):
        h, D, ell = 1.3, 1e-3, 0.08
        gap = tessellating_rate(h, 1, 2.0, D, ell) - shannon_lower_bound(h, 1, 2.0, D)
        assert gap == pytest.approx(tessellating_excess(ell, 1, 2.0), rel=1e-10)

    def test_zador_scalar_rate(self):
        assert zador_scalar_rate(H_GAUSS, 1e-4) == pytest.approx(
            tessellating_rate(H_GAUSS, 1, 2.0, 1e-4, 1 / 12), rel=1e-12)


def test_interval_moment():
    assert interval_moment(2.0) == pytest.approx(1 / 12)
    assert interval_moment(1.0) == pytest.approx(1 / 4)
    values = [interval_moment(r) for r in (1, 2, 4, 8, 16, 32)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-10


class TestZador:
    def test_scalar_value(self):
        assert zador_rc_ub_per_dim(1) == pytest.approx(0.5 * math.log(math.pi * math.e), rel=1e-12)

    def test_decreasing_over_figure_range(self):
        values = [zador_rc_ub_per_dim(d) for d in range(1, 25)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_vanishes(self):
        assert zador_rc_ub_per_dim(10_000) < 1e-3

    @pytest.mark.parametrize("d", range(1, 25))
    def test_above_lower_bound(self, d):
        assert zador_rc_ub_per_dim(d) >= excess_rate_lb_per_dim_quadratic(d)


class TestFigure1Table:
    def test_rows(self):
        table = figure1_table(range(1, 25), {
            1: [{"lattice": "Z:1", "ell": 1 / 12, "moment_source": "analytic", "moment_std_err": 0.0}],
            2: [{"lattice": "A:2", "ell": 2 * 0.080188, "moment_source": "analytic", "moment_std_err": 0.0}],
        })
        assert list(table.columns) == FIGURE1_COLUMNS
        assert len(table) == 24
        first = table.iloc[0]
        assert first["lb_bits_per_dim"] == pytest.approx(0.2546, abs=1e-4)
        assert first["lattice_ub_bits_per_dim"] == pytest.approx(first["lb_bits_per_dim"], rel=1e-12)
        tenth = table[table["d"] == 10].iloc[0]
        assert tenth["lb_bits_per_dim"] == pytest.approx(0.1196, abs=1e-4)
        assert np.isnan(tenth["lattice_ub_bits_per_dim"])
        assert (table["zador_ub_bits_per_dim"] >= table["lb_bits_per_dim"]).all()

    def test_missing_moment_leaves_blank(self):
        table = figure1_table([12], {12: [{"lattice": "K:12", "ell": None}]})
        row = table.iloc[0]
        assert row["lattice"] == "K:12"
        assert np.isnan(row["lattice_ub_bits_per_dim"])


class TestBoundPoint:
    def test_excess_lower_bound(self):
        point = bound_point("excess_lb", 10, per_dim=True)
        assert isinstance(point, BoundPoint)
        assert point.per_dim and point.d == 10 and point.D is None
        assert nats_to_bits(point.value) == pytest.approx(0.1196, abs=1e-4)
        assert bound_point("excess_lb", 10).value == pytest.approx(10 * point.value, rel=1e-12)

    def test_general_order(self):
        assert bound_point("excess_lb", 3, r=1.5).value == pytest.approx(excess_rate_lb(3, 1.5), rel=1e-12)

    def test_zador(self):
        assert bound_point("zador_ub", 4, per_dim=True).value == zador_rc_ub_per_dim(4)
        with pytest.raises(ValidationError):
            bound_point("zador_ub", 4, r=1.0)

    def test_shannon_lower_bound_carries_distortion(self):
        point = bound_point("shannon_lb", 1, D=0.01, h=H_GAUSS)
        assert point.D == 0.01
        assert point.value == pytest.approx(0.5 * math.log(100), rel=1e-12)
        with pytest.raises(ValidationError):
            bound_point("shannon_lb", 1, D=0.01)

    def test_every_kind_is_finite(self):
        for kind in BOUND_KINDS:
            for d in (1, 2, 8, 24):
                assert math.isfinite(bound_point(kind, d, D=1e-3, h=0.0).value)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            bound_point("gap", 2)


@pytest.mark.parametrize("name", ["Z:2", "A:2", "D:3", "Dstar:3", "D:4", "E8"])
def test_lattice_bound_sits_above_lower_bound(name):
    lat = parse_lattice(name)
    d = lat.dimension
    estimate = normalized_moment_mc(lat, 2.0, 20_000, seed=11)
    lattice_ub = tessellating_excess(estimate.ell, d, 2.0) / d
    slack = 3 * 0.5 * estimate.std_error / estimate.ell
    assert lattice_ub >= excess_rate_lb_per_dim_quadratic(d) - slack
