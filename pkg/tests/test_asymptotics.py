import math

import numpy as np
import pytest

from src.asymptotics import pipeline
from src.asymptotics.pipeline import (
    CONCENTRATION_COLUMNS,
    EXCESS_COLUMNS,
    QuantizerFamily,
    concentration_curve,
    concentration_table,
    excess_rate_curve,
    excess_table,
    parse_family,
    reference_rate,
)
from src.asymptotics.statistics import (
    concentration_statistic,
    lemma3_check,
    optimal_cell_ratio,
    piecewise_density_tv,
    tv_piecewise,
    weighted_cell_moment,
    window_measures,
)
from src.bounds.analytic import excess_rate_lb, nats_to_bits
from src.data.sources import GaussianSource, create_source
from src.errors import NonConvergenceError, ValidationError
from src.quantization.evaluation import calibrate_pattern_step, calibrate_uniform_step, exact_distortion
from src.quantization.scalar import ScalarQuantizer, source_span, uniform_step_for_distortion

GISH_PIERCE_BITS = 0.25462


def asymptotic_quantizer(source, D, r=2.0):
    return ScalarQuantizer.uniform(uniform_step_for_distortion(D, r), span=source_span(source))


class TestExcessRate:
    def test_gaussian_converges_to_the_scalar_constant(self, gaussian):
        curve = excess_rate_curve(gaussian, 2.0, [1e-5])
        assert not curve.partial
        assert curve.points[0].excess_bits == pytest.approx(GISH_PIERCE_BITS, abs=0.01)

    def test_curve_stays_above_the_bound(self, gaussian):
        curve = excess_rate_curve(gaussian, 2.0, [1e-2, 1e-3, 1e-4, 1e-5])
        assert [p.D for p in curve.points] == [1e-2, 1e-3, 1e-4, 1e-5]
        floor = nats_to_bits(excess_rate_lb(1, 2.0)) - 0.02
        assert all(p.excess_bits >= floor for p in curve.points if p.D <= 1e-3)
        assert abs(curve.points[-1].excess_bits - GISH_PIERCE_BITS) < 0.01
        for point in curve.points:
            assert point.achieved_D <= point.D

    def test_excess_decreases_towards_the_limit(self, gaussian):
        curve = excess_rate_curve(gaussian, 2.0, [1e-2, 1e-3, 1e-4, 1e-5])
        excess = [p.excess_bits for p in curve.points]
        assert all(b < a for a, b in zip(excess, excess[1:]))

    def test_laplace_shares_the_limit(self, laplace):
        curve = excess_rate_curve(laplace, 2.0, [1e-5])
        assert curve.points[0].excess_bits == pytest.approx(GISH_PIERCE_BITS, abs=0.01)

    @pytest.mark.parametrize("D", [1 / 1200, 1e-5])
    def test_uniform_source_edge_cells(self, uniform01, D):
        curve = excess_rate_curve(uniform01, 2.0, [D])
        assert curve.points[0].excess_bits == pytest.approx(GISH_PIERCE_BITS, abs=0.02)

    def test_parallel_points_keep_input_order(self, gaussian):
        serial = excess_rate_curve(gaussian, 2.0, [1e-2, 1e-3])
        parallel = excess_rate_curve(gaussian, 2.0, [1e-2, 1e-3], n_jobs=2)
        assert [p.D for p in parallel.points] == [1e-2, 1e-3]
        assert [p.excess for p in parallel.points] == pytest.approx([p.excess for p in serial.points])

    def test_failing_point_ends_the_curve(self, gaussian, monkeypatch):
        original = pipeline.excess_rate_point

        def flaky(source, r, D, family):
            if D < 1e-3:
                raise NonConvergenceError("bracket failure", {"target_D": D})
            return original(source, r, D, family)

        monkeypatch.setattr(pipeline, "excess_rate_point", flaky)
        curve = excess_rate_curve(gaussian, 2.0, [1e-2, 1e-3, 1e-4, 1e-5])
        assert curve.partial
        assert [p.D for p in curve.points] == [1e-2, 1e-3]
        assert "bracket failure" in curve.error

    @pytest.mark.parametrize("targets", [[1e-3, 1e-2], [1e-3, 1e-3], [], [1e-3, -1.0]])
    def test_targets_must_decrease(self, gaussian, targets):
        with pytest.raises(ValidationError):
            excess_rate_curve(gaussian, 2.0, targets)

    def test_vector_sources_are_rejected(self):
        with pytest.raises(ValidationError):
            excess_rate_curve(create_source("gaussian:0,1^2"), 2.0, [1e-3])

    def test_reference_rates(self, laplace):
        assert reference_rate(GaussianSource(0.0, 2.0), 2.0, 1e-3) == pytest.approx(0.5 * math.log(4e3))
        expected = 1 + math.log(2) - math.log(1e-3) - (1 + math.log(2) - 0.0)
        assert reference_rate(laplace, 1.0, 1e-3) == pytest.approx(expected, rel=1e-12)

    def test_table_layout(self, gaussian):
        table = excess_table(excess_rate_curve(gaussian, 2.0, [1e-2], QuantizerFamily("asymptotic")))
        assert list(table.columns) == EXCESS_COLUMNS
        assert len(table) == 1


class TestFamilies:
    def test_parsing(self):
        assert parse_family("uniform") == QuantizerFamily("uniform")
        assert parse_family("uniform_midpoint").kind == "uniform"
        assert parse_family("asymptotic").kind == "asymptotic"
        assert parse_family("pattern:1,2").pattern == (1.0, 2.0)
        with pytest.raises(ValidationError):
            parse_family("pattern:a")
        with pytest.raises(ValidationError):
            parse_family("lloyd")

    def test_asymptotic_family_skips_calibration(self, gaussian):
        q = QuantizerFamily("asymptotic").build(gaussian, 2.0, 1e-4)
        assert q.step == pytest.approx(uniform_step_for_distortion(1e-4, 2.0))


class TestConcentration:
    def test_optimal_ratio(self):
        assert optimal_cell_ratio(2.0) == 12.0
        assert optimal_cell_ratio(1.0) == 4.0

    @pytest.mark.parametrize("variant", ["theorem2_lambda", "corollary_delta"])
    def test_uniform_quantizer_concentrates(self, gaussian, variant):
        q = asymptotic_quantizer(gaussian, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        result = concentration_statistic(q, gaussian, 2.0, D, rho=10.0, theta=0.1, variant=variant)
        assert result.mass >= 1 - result.tail_mass - 1e-12
        assert result.tail_mass < 1e-12

    @pytest.mark.parametrize("variant", ["theorem2_lambda", "corollary_delta"])
    def test_two_cell_pattern_does_not(self, gaussian, variant):
        q = calibrate_pattern_step(gaussian, 2.0, 1e-4, (1.0, 2.0))
        D = exact_distortion(q, gaussian, 2.0).value
        result = concentration_statistic(q, gaussian, 2.0, D, rho=10.0, theta=1.0, variant=variant)
        assert result.mass < 0.05

    @pytest.mark.parametrize("r", [2.0, pytest.param(1.0, marks=pytest.mark.slow)])
    @pytest.mark.parametrize("variant", ["theorem2_lambda", "corollary_delta"])
    def test_calibrated_families_at_half_width(self, gaussian, r, variant):
        targets = [1e-4, 1e-5]
        uniform = concentration_curve(gaussian, r, targets, rho=10.0, theta=0.5,
                                      family=parse_family("uniform"), variant=variant)
        pattern = concentration_curve(gaussian, r, targets, rho=10.0, theta=0.5,
                                      family=parse_family("pattern:1,2"), variant=variant)
        assert all(result.mass >= 0.99 for result in uniform)
        assert all(result.mass <= 0.9 for result in pattern)

    def test_small_window_caps_every_cell(self, gaussian):
        q = asymptotic_quantizer(gaussian, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        result = concentration_statistic(q, gaussian, 2.0, D, rho=1.0, theta=1.0)
        assert result.mass == 0.0

    def test_declared_distortion_must_match(self, gaussian):
        q = asymptotic_quantizer(gaussian, 1e-4)
        with pytest.raises(ValidationError):
            concentration_statistic(q, gaussian, 2.0, 2e-4, rho=10.0, theta=0.1)

    def test_unknown_variant(self, gaussian):
        q = asymptotic_quantizer(gaussian, 1e-4)
        with pytest.raises(ValidationError):
            concentration_statistic(q, gaussian, 2.0, 1e-4, 10.0, 0.1, variant="lemma")

    def test_curve_and_table(self, gaussian):
        results = concentration_curve(gaussian, 2.0, [1e-3, 1e-4], rho=10.0, theta=0.1,
                                      family=QuantizerFamily("asymptotic"))
        assert [r.mass > 0.999 for r in results] == [True, True]
        table = concentration_table(results)
        assert list(table.columns) == CONCENTRATION_COLUMNS
        assert len(table) == 2


class TestWindows:
    def test_window_measure_bounds(self, gaussian):
        q = calibrate_uniform_step(gaussian, 2.0, 1e-3)
        eps = 0.05
        measures = window_measures(q, eps)
        assert np.all(np.isfinite(measures.Lambda))
        assert np.all(measures.Lambda >= 0)
        assert np.all(measures.Lambda <= np.minimum(q.lengths, 2 * eps) + 1e-15)

    def test_lemma3_holds_for_a_calibrated_quantizer(self, gaussian):
        q = calibrate_uniform_step(gaussian, 2.0, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        result = lemma3_check(q, gaussian, 2.0, D, kappa=0.01)
        assert result.passed
        assert result.lhs_a < result.bound_a
        assert result.lhs_b < result.bound_b

    def test_lemma3_tiny_window(self, gaussian):
        q = calibrate_uniform_step(gaussian, 2.0, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        result = lemma3_check(q, gaussian, 2.0, D, kappa=1e6)
        assert result.passed
        assert result.lhs_a > 0.9

    def test_lemma3_negative_control(self, gaussian):
        q = calibrate_uniform_step(gaussian, 2.0, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        assert not lemma3_check(q, gaussian, 2.0, D / 100, kappa=0.01).passed


class TestPiecewiseDensity:
    def test_exact_for_piecewise_constant_source(self, uniform01):
        q = ScalarQuantizer.uniform(0.125, span=(0.0, 1.0))
        assert tv_piecewise(q, uniform01) == pytest.approx(0.0, abs=1e-12)

    def test_shrinks_with_the_step(self, gaussian):
        values = [tv_piecewise(ScalarQuantizer.uniform(step, span=source_span(gaussian)), gaussian)
                  for step in (0.5, 0.05, 0.005)]
        assert values[0] > values[1] > values[2]

    def test_nonincreasing_under_halving(self, gaussian):
        steps = [0.5 / 2 ** k for k in range(6)]
        values = [tv_piecewise(ScalarQuantizer.uniform(step, span=source_span(gaussian)), gaussian)
                  for step in steps]
        assert all(b <= a + 1e-6 for a, b in zip(values, values[1:]))

    def test_fine_quantizer(self, gaussian):
        result = piecewise_density_tv(ScalarQuantizer.uniform(0.01, span=source_span(gaussian)), gaussian)
        assert result.value <= 0.05
        assert result.value == pytest.approx(result.bounded + result.tail_mass)


class TestWeightedCellMoment:
    def test_aligned_uniform_source_is_exact(self, uniform01):
        q = ScalarQuantizer.uniform(0.1, span=(0.0, 1.0))
        D = exact_distortion(q, uniform01, 2.0).value
        assert D == pytest.approx(0.01 / 12, rel=1e-9)
        assert weighted_cell_moment(q, uniform01, 2.0, D).value == pytest.approx(12.0, rel=1e-9)

    def test_uniform_quantizer_near_the_optimum(self, gaussian):
        q = calibrate_uniform_step(gaussian, 2.0, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        stat = weighted_cell_moment(q, gaussian, 2.0, D)
        assert 12 - 1e-3 <= stat.value <= 12.5

    def test_windowed_form(self, gaussian):
        q = calibrate_uniform_step(gaussian, 2.0, 1e-4)
        D = exact_distortion(q, gaussian, 2.0).value
        stat = weighted_cell_moment(q, gaussian, 2.0, D, window_rho=10.0)
        assert 12 - 1e-3 <= stat.value <= 12.5

    def test_positive_distortion(self, gaussian):
        with pytest.raises(ValidationError):
            weighted_cell_moment(asymptotic_quantizer(gaussian, 1e-4), gaussian, 2.0, 0.0)
