"""
q-Registry Tests
================
"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from qsoliton.errors import DimensionError, ExpressionError, NumericalFailure
from qsoliton.geometry import LocalGeometry
from qsoliton.manifolds import (
    bach_constant,
    cross_checked_bach_constant,
    euclidean,
    finite_difference_twin,
    hyperbolic,
    product_chart,
    sphere,
)
from qsoliton.qtensors import QKind, QSpec, bach_tensor, instantiate


@pytest.fixture
def polar_sphere():
    """S^2(sqrt 2): Ric = g / 2, R = 1."""
    return product_chart([sphere(2, math.sqrt(2), "polar")], "sphere")


def _at(chart, fields, p=(1.0, 2.0)):
    return LocalGeometry(chart, list(p), fields.cost + 1)


# ============================================================================
# Parsing
# ============================================================================


@pytest.mark.parametrize(
    "text,kind,rho",
    [
        ("zero", QKind.ZERO, 0.0),
        ("ricci", QKind.RICCI, 0.0),
        ("  bourguignon rho=0.25 ", QKind.BOURGUIGNON, 0.25),
        ("bach", QKind.BACH, 0.0),
    ],
)
def test_parse_named_kinds(text, kind, rho):
    spec = QSpec.from_text(text)
    assert spec.kind == kind
    assert spec.rho == rho
    assert QSpec.from_text(spec.to_text()) == spec


def test_parse_custom_components():
    spec = QSpec.from_text("custom { q[0][0] = x^2; q[0][1] = x*y }")
    assert spec.kind == QKind.CUSTOM
    assert spec.components == {"00": "x^2", "01": "x*y"}
    assert QSpec.from_text(spec.to_text()) == spec


@pytest.mark.parametrize(
    "text,message",
    [
        ("einstein", "Unknown q kind"),
        ("ricci rho=0.1", "Unexpected option"),
        ("bourguignon rho=abc", "rho must be a number"),
        ("custom q[0][0] = 1", "braced body"),
        ("custom { p[0][0] = 1 }", "Bad custom q component"),
        ("   ", "Empty q text"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(ExpressionError, match=message):
        QSpec.from_text(text)


def test_custom_kind_needs_components():
    with pytest.raises(ValueError, match="custom q needs at least one component"):
        QSpec(kind=QKind.CUSTOM)


# ============================================================================
# Fields
# ============================================================================


def test_ricci_flow_tensor_on_sphere(polar_sphere):
    """q = -2 Ric = -g: trace -2, squared norm 2"""
    fields = instantiate(QSpec.from_text("ricci"), polar_sphere)
    geometry = _at(polar_sphere, fields)
    np.testing.assert_allclose(
        geometry.field(fields.q).value, -geometry.g.value, atol=1e-10
    )
    np.testing.assert_allclose(geometry.field(fields.Q).value, -np.eye(2), atol=1e-10)
    assert float(geometry.scalar_field(fields.trace).value) == pytest.approx(-2.0)
    assert float(geometry.scalar_field(fields.norm2).value) == pytest.approx(2.0)


def test_bourguignon_tensor_on_sphere(polar_sphere):
    """q = -2 (Ric - rho R g) = -(1 - 2 rho) g with R = 1"""
    fields = instantiate(QSpec.from_text("bourguignon rho=0.25"), polar_sphere)
    geometry = _at(polar_sphere, fields)
    np.testing.assert_allclose(
        geometry.field(fields.q).value, -0.5 * geometry.g.value, atol=1e-10
    )


def test_zero_and_custom_tensors(plane):
    zero = instantiate(QSpec.from_text("zero"), plane)
    geometry = _at(plane, zero, (0.5, 1.5))
    assert np.all(geometry.field(zero.q).value == 0.0)

    custom = instantiate(QSpec.from_text("custom { q[0][1] = x*y }"), plane)
    geometry = _at(plane, custom, (0.5, 1.5))
    np.testing.assert_allclose(geometry.field(custom.q).value, [[0, 0.75], [0.75, 0]])
    assert float(geometry.scalar_field(custom.trace).value) == pytest.approx(0.0)


def test_custom_mirrored_entries_must_agree(plane):
    with pytest.raises(ExpressionError, match=r"custom\[1\]\[0\] disagrees"):
        instantiate(QSpec.from_text("custom { q[0][1] = x; q[1][0] = 2*y }"), plane)


def test_custom_mirrored_entries_equal_up_to_algebra(plane):
    spec = QSpec.from_text("custom { q[0][1] = x*(y + 1); q[1][0] = x*y + x }")
    custom = instantiate(spec, plane)
    q = _at(plane, custom, (1.0, 1.0)).field(custom.q).value
    np.testing.assert_allclose(q, q.T)
    np.testing.assert_allclose(q, [[0, 2], [2, 0]])


def test_custom_component_out_of_range(plane):
    with pytest.raises(ExpressionError, match="out of range"):
        instantiate(QSpec.from_text("custom { q[2][0] = 1 }"), plane)


def test_bach_needs_four_dimensions(plane):
    with pytest.raises(DimensionError, match="4-dimensional"):
        instantiate(QSpec.from_text("bach"), plane)
    with pytest.raises(DimensionError, match="4-dimensional"):
        bach_tensor(plane, [0.0, 0.0])


# ============================================================================
# Bach tensor of N^2 x R^2
# ============================================================================


@pytest.mark.parametrize("factor", [sphere(2, 1.0), hyperbolic(2, 1.0)])
def test_bach_tensor_of_surface_times_plane(factor):
    """B = -c^2 g_N + c^2 g_R2 with c^2 = K^2 / 6 for a surface of curvature K = +-1"""
    chart = product_chart([factor, euclidean(2)], "bach")
    c2 = bach_constant(chart, 2)
    assert c2 == pytest.approx(1 / 6, rel=1e-8)
    p = chart.anchor
    B = bach_tensor(chart, p)
    g = chart.metric_values(p)
    expected = np.diag([-c2, -c2, c2, c2]) @ g
    np.testing.assert_allclose(B, expected, atol=1e-8)


def test_bach_tensor_vanishes_on_flat_space():
    chart = product_chart([euclidean(4, half_width=2.0)], "R4")
    np.testing.assert_allclose(bach_tensor(chart, [0.1, 0.2, 0.3, 0.4]), 0.0, atol=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("factor", [sphere(2, 1.0), hyperbolic(2, 1.0)])
def test_bach_constant_matches_finite_differences(factor):
    chart = product_chart([factor, euclidean(2)], "bach")
    assert not finite_difference_twin(chart).exact
    c2, c2_fd = cross_checked_bach_constant(chart, 2)
    assert c2 == pytest.approx(1 / 6, rel=1e-8)
    assert c2_fd == pytest.approx(c2, rel=1e-3)


def test_bach_constant_disagreement_raises():
    chart = product_chart([sphere(2, 1.0), euclidean(2)], "bach")
    # curvature 1/4 on the twin: c^2 = 1/96 instead of 1/6
    wrong = product_chart([sphere(2, 2.0), euclidean(2)], "wrong")
    with patch("qsoliton.manifolds.finite_difference_twin", return_value=wrong):
        with pytest.raises(NumericalFailure, match="Bach constant disagrees"):
            cross_checked_bach_constant(chart, 2)
