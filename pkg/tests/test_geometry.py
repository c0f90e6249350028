"""
Local Geometry Tests
====================

Curvature and differential operators on charts with closed-form answers.
"""

import math

import numpy as np
import pytest

from qsoliton.charts import (
    Domain,
    ExpressionChart,
    FiniteDifferenceChart,
    ScalarField,
    TensorField,
)
from qsoliton.errors import (
    CriticalPointError,
    DimensionError,
    DomainError,
    JetOrderError,
    MetricError,
)
from qsoliton.geometry import (
    LocalGeometry,
    curvature_at,
    divergence_02,
    f_laplacian,
    hessian,
    kulkarni_nomizu,
    laplacian,
    orthogonal_complement,
    radial_curvature,
)
from qsoliton.manifolds import euclidean, hyperbolic, product_chart, sphere


def _stereographic_metric(p):
    return 4.0 / (1.0 + float(p @ p)) ** 2 * np.eye(2)


# ============================================================================
# Curvature
# ============================================================================


def test_flat_plane_has_no_curvature(plane):
    bundle = curvature_at(plane, [0.3, -1.2])
    assert np.max(np.abs(bundle.riemann)) == 0.0
    assert bundle.scalar == 0.0


@pytest.mark.parametrize(
    "radius,chart,point",
    [
        (1.0, "stereographic", [0.3, -0.2]),
        (2.0, "stereographic", [1.1, 0.4]),
        (math.sqrt(2), "polar", [1.0, 2.0]),
    ],
)
def test_round_sphere_is_einstein(radius, chart, point):
    """Ric = (n - 1)/R^2 g and R = n(n - 1)/R^2 on S^2(R)"""
    factor = sphere(2, radius, chart)
    c = product_chart([factor], "sphere")
    bundle = curvature_at(c, point)
    np.testing.assert_allclose(
        bundle.ricci, factor.einstein * c.metric_values(point), atol=1e-10
    )
    assert bundle.scalar == pytest.approx(2 / radius**2, rel=1e-10)


def test_hyperbolic_ball_has_negative_scalar_curvature():
    c = product_chart([hyperbolic(3, 1.0)], "H3")
    assert curvature_at(c, [0.1, -0.2, 0.05]).scalar == pytest.approx(-6.0, rel=1e-10)


def test_finite_difference_chart_matches_exact_curvature():
    domain = Domain(lower=[-2, -2], upper=[2, 2])
    exact = ExpressionChart(
        ["u", "v"], [["4/(1+u^2+v^2)^2", "0"], ["0", "4/(1+u^2+v^2)^2"]], domain
    )
    approx = FiniteDifferenceChart(["u", "v"], _stereographic_metric, domain, label="fd")
    p = [0.4, -0.3]
    assert not approx.exact
    expected = curvature_at(exact, p).scalar
    assert curvature_at(approx, p).scalar == pytest.approx(expected, abs=1e-5)


def test_first_bianchi_identity_on_sphere():
    c = product_chart([sphere(3, 1.5)], "S3")
    riemann = curvature_at(c, [0.2, 0.1, -0.3]).riemann
    cyclic = riemann + np.einsum("lijk->ljki", riemann) + np.einsum("lijk->lkij", riemann)
    assert np.max(np.abs(cyclic)) < 1e-10


# ============================================================================
# Operators
# ============================================================================


def test_hessian_of_quadratic_in_flat_space(plane):
    f = ScalarField.from_expression("f", "(x^2 + y^2)/2", plane)
    np.testing.assert_allclose(hessian(plane, f, [1.0, -2.0]), np.eye(2), atol=1e-12)


def test_height_function_is_first_eigenfunction():
    """Laplacian of R cos(th) on S^2(R) is -2/R^2 times itself"""
    R = math.sqrt(2)
    c = product_chart([sphere(2, R, "polar")], "sphere")
    h = ScalarField.from_expression("h", f"{R!r}*cos(th1)", c)
    p = [1.0, 2.0]
    assert laplacian(c, h, p) == pytest.approx(-2 / R**2 * R * math.cos(1.0), rel=1e-10)


def test_f_laplacian_subtracts_drift(plane):
    u = ScalarField.from_expression("u", "x^2", plane)
    f = ScalarField.from_expression("f", "y", plane)
    # Delta u = 2 and <grad f, grad u> = 0
    assert f_laplacian(plane, u, f, [0.5, 0.5]) == pytest.approx(2.0)
    g = ScalarField.from_expression("g", "x", plane)
    assert f_laplacian(plane, u, g, [0.5, 0.5]) == pytest.approx(2.0 - 1.0)


def test_metric_is_divergence_free():
    c = product_chart([sphere(2, 1.0)], "sphere")
    np.testing.assert_allclose(
        divergence_02(c, TensorField.metric(), [0.3, 0.7]), np.zeros(2), atol=1e-12
    )


def test_radial_curvature_raises_at_critical_point(plane):
    f = ScalarField.from_expression("f", "x^2 + y^2", plane)
    with pytest.raises(CriticalPointError, match="grad f vanishes"):
        radial_curvature(plane, f, [0.0, 0.0], [1.0, 0.0])


def test_radial_curvature_of_sphere_height():
    """R(X, grad h)grad h = |grad h|^2 X / R^2 for X orthogonal to grad h"""
    R = 1.0
    c = product_chart([sphere(2, R, "polar")], "sphere")
    h = ScalarField.from_expression("h", "cos(th1)", c)
    p = np.array([1.0, 2.0])
    geometry = LocalGeometry(c, p, 2)
    df = geometry.scalar_field(h).grad().value
    g = c.metric_values(p)
    gradient = np.linalg.solve(g, df)
    X = orthogonal_complement(g, gradient)[:, 0]
    value = radial_curvature(c, h, p, X)
    grad2 = float(gradient @ g @ gradient)
    np.testing.assert_allclose(value, grad2 * X / R**2, atol=1e-10)


def test_orthogonal_complement_is_orthonormal():
    g = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 3.0]])
    v = np.array([1.0, -1.0, 0.5])
    basis = orthogonal_complement(g, v)
    assert basis.shape == (3, 2)
    np.testing.assert_allclose(basis.T @ g @ basis, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(basis.T @ g @ v, np.zeros(2), atol=1e-12)


# ============================================================================
# Errors
# ============================================================================


def test_point_outside_domain(plane):
    with pytest.raises(DomainError, match="outside the domain"):
        curvature_at(plane, [6.0, 0.0])


def test_indefinite_metric_is_rejected():
    chart = ExpressionChart(
        ["x", "y"], [["1", "0"], ["0", "-1"]], Domain(lower=[-1, -1], upper=[1, 1])
    )
    with pytest.raises(MetricError, match="not positive definite"):
        curvature_at(chart, [0.0, 0.0])


def test_schouten_needs_dimension_three(plane):
    geometry = LocalGeometry(plane, [0.0, 0.0], 2)
    with pytest.raises(DimensionError, match="dimension >= 3"):
        geometry.schouten


def test_curvature_needs_second_order_jets(plane):
    geometry = LocalGeometry(plane, [0.0, 0.0], 1)
    with pytest.raises(JetOrderError, match="needs metric order 2"):
        geometry.riemann


# ============================================================================
# Weyl and Kulkarni-Nomizu
# ============================================================================


def test_constant_curvature_is_half_kulkarni_nomizu_square():
    """Rm = (K / 2) g o g with K = 1/2 on S^2(sqrt 2)"""
    c = product_chart([sphere(2, math.sqrt(2), "polar")], "sphere")
    geometry = LocalGeometry(c, [1.0, 2.0], 2)
    expected = kulkarni_nomizu(geometry.g, geometry.g).value * 0.25
    np.testing.assert_allclose(geometry.riemann_lowered.value, expected, atol=1e-10)


def test_weyl_vanishes_in_dimension_three():
    c = product_chart([sphere(3, 1.0, "polar")], "S3")
    geometry = LocalGeometry(c, [1.0, 1.2, 2.0], 2)
    np.testing.assert_allclose(geometry.weyl.value, 0.0, atol=1e-10)


def test_weyl_of_sphere_times_plane_is_nonzero():
    c = product_chart([sphere(2, 1.0), euclidean(2)], "S2xR2")
    geometry = LocalGeometry(c, [0.2, 0.1, 0.0, 0.0], 2)
    assert np.max(np.abs(geometry.weyl.value)) > 0.1
