"""
Soliton Check Tests
===================

Each identity is confirmed on an example where it holds and refuted on a control where it
does not.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from qsoliton.charts import ScalarField
from qsoliton.geometry import LocalGeometry
from qsoliton.manifolds import build
from qsoliton.models import Verdict
from qsoliton.qtensors import QSpec
from qsoliton.tools.verify import (
    SampleSet,
    SolitonData,
    bianchi_check,
    compact_integral_identity,
    evolution_identities,
    f_lambda_check,
    flatness_hypotheses,
    hamilton_scalar,
    hamilton_tensor,
    jet_consistency_check,
    laplacian_trace_check,
    quadrature_rule,
    rigid_conditions_check,
    rigidity_check,
    soliton_residual,
    trace_bounds_check,
)

# ============================================================================
# Soliton data
# ============================================================================


def test_classification_and_regime(gaussian, sphere_example):
    assert gaussian.soliton.classification == "shrinking"
    assert gaussian.soliton.regime.value == "exact"
    hyperbolic = build("hyperbolic_expander")
    assert hyperbolic.soliton.classification == "expanding"
    steady = replace(gaussian.soliton, lam=0.0)
    assert steady.classification == "steady"


def test_normalized_shifts_potential(cylinder):
    S = cylinder.soliton
    shifted = S.normalized(1.0)
    assert shifted.normalization_constant == pytest.approx(1.0)
    assert shifted.q is S.q
    p = [0.0, 0.0, 1.0, 2.0]
    value, _ = shifted.f.value_and_gradient(p)
    assert value == pytest.approx(S.f.value_and_gradient(p)[0] + 1.0)


def test_steady_soliton_cannot_be_normalized(gaussian):
    with pytest.raises(ValueError, match="steady"):
        replace(gaussian.soliton, lam=0.0).normalized(1.0)


def test_sample_set_is_deterministic(gaussian):
    a = SampleSet(gaussian.chart, 8, seed=3)
    b = SampleSet(gaussian.chart, 8, seed=3)
    assert len(a) == 8
    assert (a.points == b.points).all()
    assert all(gaussian.chart.domain.contains(p) for p in a.points)


def test_threaded_map_keeps_sample_order(gaussian):
    serial = SampleSet(gaussian.chart, 6, seed=1)
    threaded = SampleSet(gaussian.chart, 6, seed=1, workers=3)

    def first_coordinate(geometry):
        return float(geometry.point[0])

    assert serial.map(first_coordinate, 0) == threaded.map(first_coordinate, 0)


# ============================================================================
# Jets, curvature and the soliton equation
# ============================================================================


def test_jet_consistency_on_gaussian(gaussian, samples_for, fast_settings):
    report = jet_consistency_check(
        gaussian.soliton, samples_for(gaussian), fast_settings, max_points=4
    )
    assert report.verdict == Verdict.PASS
    assert report.samples == 4


@pytest.mark.parametrize("name", ["gaussian", "round_sphere"])
def test_bianchi_identities(name, samples_for, fast_settings):
    example = build(name)
    report = bianchi_check(example.soliton, samples_for(example, 6), fast_settings)
    assert report.verdict == Verdict.PASS


@pytest.mark.parametrize("fixture", ["gaussian", "cylinder", "sphere_example"])
def test_soliton_residual_vanishes(fixture, request, samples_for, fast_settings):
    example = request.getfixturevalue(fixture)
    report = soliton_residual(example.soliton, samples_for(example), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["tracing_max"] <= fast_settings.tolerance_exact


def test_soliton_residual_rejects_wrong_lambda(gaussian, samples_for, fast_settings):
    wrong = replace(gaussian.soliton, lam=0.3)
    report = soliton_residual(wrong, samples_for(gaussian), fast_settings)
    assert report.verdict == Verdict.FAIL
    # |(0.5 - 0.3) g| = 0.2 sqrt(2) at every point
    assert report.residual_max == pytest.approx(0.2 * math.sqrt(2), rel=1e-9)


def test_soliton_residual_rejects_height_potential(samples_for, fast_settings):
    height = build("round_sphere", {"stationary": False})
    report = soliton_residual(height.soliton, samples_for(height), fast_settings)
    assert report.verdict == Verdict.FAIL


# ============================================================================
# Hamilton identities
# ============================================================================


def test_hamilton_constant_of_gaussian(gaussian, samples_for, fast_settings):
    H, report = hamilton_scalar(gaussian.soliton, samples_for(gaussian), fast_settings)
    assert H.name == "H"
    assert report.verdict == Verdict.PASS
    assert report.constants.C == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("a,C", [(1.0, 0.0), (0.0, 1.0), (2.5, -1.5)])
def test_hamilton_constant_of_cylinder(a, C, samples_for, fast_settings):
    """C = 1 - a for f = |x|^2 / 4 + a"""
    example = build("cylinder_shrinker", {"a": a})
    _, report = hamilton_scalar(example.soliton, samples_for(example), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.constants.C == pytest.approx(C, abs=1e-10)


def test_hamilton_scalar_fails_off_soliton(gaussian, samples_for, fast_settings):
    wrong = replace(gaussian.soliton, lam=0.3)
    _, report = hamilton_scalar(wrong, samples_for(gaussian), fast_settings)
    assert report.verdict == Verdict.FAIL
    assert report.constants.C is None


def test_hamilton_tensor(cylinder, samples_for, fast_settings):
    report = hamilton_tensor(cylinder.soliton, samples_for(cylinder), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["ratio_to_grad_f_max"] <= 1e-8


@pytest.mark.slow
def test_hamilton_tensor_fails_for_bach_product(samples_for, fast_settings):
    """Q(grad f) = c^2 grad f has no matching gradient of the constant trace"""
    example = build("bach_product")
    report = hamilton_tensor(example.soliton, samples_for(example, 4), fast_settings)
    assert report.verdict == Verdict.FAIL
    assert report.details["ratio_to_grad_f_max"] == pytest.approx(
        example.spec.params["c2"], rel=1e-6
    )


def test_f_lambda_on_cylinder(cylinder, samples_for, fast_settings):
    report = f_lambda_check(
        cylinder.soliton, samples=samples_for(cylinder), settings=fast_settings
    )
    assert report.verdict == Verdict.PASS
    assert report.constants.Lambda == 0.5
    # F = |grad f|^2 / 2 - f / 2 = -a / 2
    assert report.details["anchor_value"] == pytest.approx(-0.5)
    assert report.details["sub_verdicts_agree"] is True


def test_f_lambda_with_wrong_lambda(gaussian, samples_for, fast_settings):
    report = f_lambda_check(
        gaussian.soliton, 0.3, samples=samples_for(gaussian), settings=fast_settings
    )
    assert report.verdict == Verdict.FAIL
    assert report.details["constancy_verdict"] == "fail"
    assert report.details["dual_identity_verdict"] == "fail"
    assert report.details["sub_verdicts_agree"] is True


# ============================================================================
# Trace identities and rigidity
# ============================================================================


def test_laplacian_trace_on_cylinder(cylinder, samples_for, fast_settings):
    report = laplacian_trace_check(cylinder.soliton, samples_for(cylinder, 3), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["trace_free"] is False
    assert "ricci_drift_max" in report.details


def test_laplacian_trace_needs_hamilton_identity(plane, fast_settings):
    """q = x dx^2 with f = y^2 / 2: Q(grad f) = 0 but grad tr(q) / 2 = dx / 2"""
    S = SolitonData(
        plane,
        ScalarField.from_expression("f", "y^2/2", plane),
        0.5,
        QSpec.from_text("custom { q[0][0] = x }"),
    )
    report = laplacian_trace_check(S, SampleSet(plane, 6, seed=2), fast_settings)
    assert report.verdict == Verdict.INAPPLICABLE


def test_rigidity_of_gaussian(gaussian, samples_for, fast_settings):
    report = rigidity_check(gaussian.soliton, samples_for(gaussian), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.constants.c == pytest.approx(0.0, abs=1e-12)


def test_rigidity_of_critical_potential(sphere_example, samples_for, fast_settings):
    report = rigidity_check(sphere_example.soliton, samples_for(sphere_example), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.constants.c is None
    assert report.details["critical_samples"] == fast_settings.samples


def test_rigid_conditions(cylinder, samples_for, fast_settings):
    report = rigid_conditions_check(
        cylinder.soliton, 0.5, samples=samples_for(cylinder), settings=fast_settings
    )
    assert report.verdict == Verdict.PASS
    assert report.details["branch"] == "Lambda != 0"


def test_rigid_conditions_fail_for_mismatched_lambda(gaussian, samples_for, fast_settings):
    report = rigid_conditions_check(
        gaussian.soliton, 0.3, samples=samples_for(gaussian), settings=fast_settings
    )
    assert report.verdict == Verdict.FAIL


def test_rigid_conditions_steady_branch(gaussian, samples_for, fast_settings):
    """|grad f| = |x| / 2 is not constant"""
    report = rigid_conditions_check(
        gaussian.soliton, 0.0, samples=samples_for(gaussian), settings=fast_settings
    )
    assert report.details["branch"] == "Lambda = 0"
    assert report.verdict == Verdict.FAIL


@pytest.mark.parametrize(
    "fixture,extreme",
    [("gaussian", "q-flat"), ("cylinder", "interior"), ("sphere_example", "einstein")],
)
def test_trace_bounds_extremes(fixture, extreme, request, samples_for, fast_settings):
    example = request.getfixturevalue(fixture)
    report = trace_bounds_check(example.soliton, samples_for(example, 8), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["extreme"] == extreme


def test_trace_bounds_inapplicable_for_steady(gaussian, samples_for, fast_settings):
    steady = replace(gaussian.soliton, lam=0.0)
    report = trace_bounds_check(steady, samples_for(gaussian), fast_settings)
    assert report.verdict == Verdict.INAPPLICABLE
    assert report.notes == ["lambda = 0"]


def test_flatness_hypotheses(gaussian, cylinder, samples_for, fast_settings):
    report = flatness_hypotheses(gaussian.soliton, samples_for(gaussian, 6), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["hypotheses"]["i"] is True
    assert report.details["parabolicity"] == "not decidable"

    report = flatness_hypotheses(cylinder.soliton, samples_for(cylinder, 4), fast_settings)
    assert report.verdict == Verdict.INAPPLICABLE


# ============================================================================
# Compact integral identity
# ============================================================================


def test_quadrature_integrates_sphere_volume(sphere_example, fast_settings):
    chart = sphere_example.chart
    points, weights = quadrature_rule(chart, fast_settings.quadrature_nodes)
    dV = [np.sqrt(np.linalg.det(LocalGeometry(chart, p, 0).g.value)) for p in points]
    assert float(np.dot(dV, weights)) == pytest.approx(8 * math.pi, rel=1e-8)


def test_compact_integral_on_stationary_sphere(sphere_example, fast_settings):
    report = compact_integral_identity(sphere_example.soliton, settings=fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["stationary"] is True
    assert report.details["volume_error"] < 1e-8


def test_compact_integral_rejects_height_potential(fast_settings):
    height = build("round_sphere", {"stationary": False})
    report = compact_integral_identity(height.soliton, settings=fast_settings)
    assert report.verdict == Verdict.FAIL
    assert report.details["hessian_integral"] > 0
    assert "data is not a soliton at the quadrature nodes" in report.notes


def test_compact_integral_needs_compact_chart(gaussian, fast_settings):
    report = compact_integral_identity(gaussian.soliton, settings=fast_settings)
    assert report.verdict == Verdict.INAPPLICABLE


# ============================================================================
# Evolution identities
# ============================================================================


@pytest.mark.slow
def test_evolution_identities_on_cylinder(cylinder, samples_for, fast_settings):
    report = evolution_identities(cylinder.soliton, samples_for(cylinder, 2), fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["evolution_sign"] == "+"


def test_evolution_identities_for_zero_q(gaussian, samples_for, fast_settings):
    report = evolution_identities(gaussian.soliton, samples_for(gaussian, 6), fast_settings)
    assert report.verdict == Verdict.PASS
    assert "evolution_sign" not in report.details
