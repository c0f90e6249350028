"""
Example Library Tests
=====================
"""

import math

import numpy as np
import pytest

from qsoliton.errors import UnknownExampleError
from qsoliton.manifolds import (
    CATALOG,
    available,
    build,
    euclidean,
    hyperbolic,
    parameters,
    point,
    product_chart,
    rigid_factory,
    sphere,
    sphere_volume,
)
from qsoliton.models import CHECK_NAMES, Verdict

# ============================================================================
# Catalog
# ============================================================================


def test_catalog_lists_every_example():
    assert available() == [
        "gaussian",
        "round_sphere",
        "cylinder_shrinker",
        "bach_product",
        "rigid_generic",
        "hyperbolic_expander",
    ]
    assert set(available()) == set(CATALOG)


@pytest.mark.parametrize("name", ["gaussian", "round_sphere", "cylinder_shrinker"])
def test_expected_tables_cover_every_check(name):
    expected = build(name).spec.expected
    assert list(expected) == list(CHECK_NAMES)


def test_parameters_schema_uses_aliases():
    schema = parameters("gaussian")
    assert "lambda" in schema["properties"]
    assert schema["properties"]["dim"]["maximum"] == 6


def test_unknown_example():
    with pytest.raises(UnknownExampleError, match="Unknown example 'torus'"):
        build("torus")
    with pytest.raises(UnknownExampleError, match="available"):
        parameters("torus")


@pytest.mark.parametrize(
    "name,params",
    [
        ("gaussian", {"dim": 9}),
        ("gaussian", {"lambda": -1.0}),
        ("cylinder_shrinker", {"colour": "red"}),
        ("rigid_generic", {"linear": [1.0]}),
        ("rigid_generic", {"factor": "point", "Lambda": 0.0}),
    ],
)
def test_invalid_parameters(name, params):
    with pytest.raises(ValueError, match=f"Invalid parameters for {name}"):
        build(name, params)


def test_rigid_generic_needs_einstein_constant():
    with pytest.raises(ValueError, match="rigid ricci soliton needs Lambda"):
        build("rigid_generic", {"factor": "sphere", "radius": 1.0, "Lambda": 0.5})


def test_height_variant_only_gates_definite_checks():
    expected = build("round_sphere", {"stationary": False}).spec.expected
    assert expected == {"soliton_residual": Verdict.FAIL, "compact_integral": Verdict.FAIL}


# ============================================================================
# Factors and product charts
# ============================================================================


@pytest.mark.parametrize(
    "n,radius,volume",
    [(1, 1.0, 2 * math.pi), (2, 1.0, 4 * math.pi), (2, math.sqrt(2), 8 * math.pi),
     (3, 1.0, 2 * math.pi**2)],
)
def test_sphere_volume(n, radius, volume):
    assert sphere_volume(n, radius) == pytest.approx(volume)


def test_factor_validation():
    with pytest.raises(ValueError, match="n >= 2"):
        sphere(1, 1.0)
    with pytest.raises(ValueError, match="n >= 2"):
        hyperbolic(1)


def test_cylinder_product_structure(cylinder):
    chart = cylinder.chart
    assert chart.dim == 4
    assert chart.product is not None
    assert chart.product.flat_axes == [2, 3]
    assert chart.product.factor_volume == pytest.approx(8 * math.pi)
    assert chart.quadrature is None
    assert not chart.compact


def test_polar_sphere_declares_quadrature(sphere_example):
    chart = sphere_example.chart
    assert chart.quadrature is not None
    assert chart.quadrature.periodic == [False, True]
    assert chart.quadrature.total_volume == pytest.approx(8 * math.pi)
    assert chart.compact


def test_product_distance_is_pythagorean():
    chart = product_chart([hyperbolic(2), euclidean(1)], "H2xR")
    a = np.array([0.0, 0.0, 0.0])
    b = np.array([0.3, 0.0, 4.0])
    expected = math.hypot(2 * math.atanh(0.3), 4.0)
    assert chart.distance(a, b) == pytest.approx(expected, rel=1e-12)


def test_minimizing_length_is_capped_by_sphere_injectivity():
    chart = product_chart([sphere(2, 1.0), euclidean(1)], "S2xR")
    x0 = chart.anchor
    g = chart.metric_values(x0)
    along_sphere = np.array([1.0, 0.0, 0.0]) / math.sqrt(g[0, 0])
    assert chart.minimizing_length(x0, along_sphere) == pytest.approx(math.pi)
    assert chart.minimizing_length(x0, np.array([0.0, 0.0, 1.0])) == math.inf


def test_rigid_factory_over_a_point():
    chart, S = rigid_factory(point(), 3, 0.5, linear=[1.0, 0.0, -2.0], offset=0.25)
    assert chart.dim == 3
    assert S.lam == 0.5
    value, gradient = S.f.value_and_gradient([1.0, 1.0, 1.0])
    # 0.25 |x|^2 + x1 - 2 x3 + 0.25
    assert value == pytest.approx(0.75 + 1.0 - 2.0 + 0.25)
    np.testing.assert_allclose(gradient, [1.5, 0.5, -1.5])


def test_bach_product_records_constant():
    example = build("bach_product", {"curvature": "negative"})
    assert example.spec.params["c2"] == pytest.approx(1 / 6, rel=1e-8)
    assert example.spec.params["c2_fd"] == pytest.approx(example.spec.params["c2"], rel=1e-3)
    assert example.soliton.lam == pytest.approx(example.spec.params["c2"] / 2)
    assert example.soliton.qspec.kind.value == "bach"
