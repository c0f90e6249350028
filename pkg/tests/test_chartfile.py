"""
Chart File Tests
================
"""

import math

import numpy as np
import pytest

from qsoliton.errors import ExpressionError
from qsoliton.manifolds import build
from qsoliton.models import Verdict
from qsoliton.tools.verify import soliton_residual
from qsoliton.utils.chartfile import export_chart, load_chart_file, parse_chart_file

MINIMAL = """coordinates = x y
domain.lower = -1 -1
domain.upper = 1 1
metric[0][0] = 1
metric[1][1] = 1
"""


# ============================================================================
# Parsing
# ============================================================================


def test_parse_cylinder_chart(cylinder_chart_text):
    document = parse_chart_file(cylinder_chart_text)
    assert document.label == "cylinder"
    assert document.coordinates == ["u1", "u2", "x1", "x2"]
    assert document.constants == {"R": pytest.approx(math.sqrt(2)), "a": 1.0}
    assert document.lam == 0.5
    assert document.Lambda == 0.5
    assert document.product_flat == [2, 3]
    assert document.metric[(2, 2)] == "1"
    assert (0, 1) not in document.metric


def test_cylinder_chart_builds_a_soliton(cylinder_chart_text, fast_settings):
    chart, soliton = parse_chart_file(cylinder_chart_text).build()
    assert chart.dim == 4
    assert chart.product.flat_axes == [2, 3]
    assert soliton is not None
    report = soliton_residual(soliton, settings=fast_settings)
    assert report.verdict == Verdict.PASS


def test_chart_without_potential_has_no_soliton():
    chart, soliton = parse_chart_file(MINIMAL).build()
    assert soliton is None
    np.testing.assert_allclose(chart.metric_values(np.zeros(2)), np.eye(2))


def test_off_diagonal_entry_fills_both_slots():
    text = MINIMAL + "metric[1][0] = x/4\n"
    table = parse_chart_file(text).metric_table()
    assert table[0][1] == table[1][0] == "x/4"


def test_comments_and_blank_lines_are_ignored():
    text = "# header\n\n" + MINIMAL + "anchor = 0.5 0  # off-centre\n"
    assert parse_chart_file(text).anchor == [0.5, 0.0]


def test_quadrature_needs_volume():
    document = parse_chart_file(MINIMAL + "quadrature.periodic = false true\n")
    with pytest.raises(ExpressionError, match="needs quadrature.volume"):
        document.chart()


# ============================================================================
# Errors
# ============================================================================


@pytest.mark.parametrize(
    "extra,message",
    [
        ("colour = red", "line 6: unknown key 'colour'"),
        ("label = a\nlabel = b", "line 7: label already set on line 6"),
        ("anchor = 0 zero", "line 6: anchor expects numbers"),
        ("quadrature.periodic = yes", "line 6: quadrature.periodic expects true/false"),
        (
            "metric[0][1] = 1\nmetric[1][0] = 2",
            "line 7: metric\\[1\\]\\[0\\] disagrees with its symmetric entry",
        ),
        ("metric[2][2] = 1", "line 6: metric index out of range"),
        ("potential = (x + y", "line 6: Cannot parse expression"),
        ("potential = z", "line 6: Unknown symbols"),
        ("q = einstein", "line 6: Unknown q kind"),
        ("constants = k=big", "line 6: bad constant"),
        ("lambda = 0.5 0.5", "line 6: lambda expects one number"),
        ("just some words", "line 6: expected 'key = value'"),
    ],
)
def test_errors_carry_line_numbers(extra, message):
    with pytest.raises(ExpressionError, match=message):
        parse_chart_file(MINIMAL + extra + "\n")


def test_missing_coordinates():
    text = "domain.lower = 0\ndomain.upper = 1\n"
    with pytest.raises(ExpressionError, match="missing coordinates"):
        parse_chart_file(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ExpressionError, match="Cannot read chart file"):
        load_chart_file(tmp_path / "absent.chart")


def test_load_from_disk(tmp_path, cylinder_chart_text):
    path = tmp_path / "cylinder.chart"
    path.write_text(cylinder_chart_text, encoding="utf-8")
    assert load_chart_file(path).label == "cylinder"


# ============================================================================
# Export
# ============================================================================


@pytest.mark.parametrize("name", ["cylinder_shrinker", "round_sphere", "hyperbolic_expander"])
def test_export_reparses_to_the_same_data(name):
    example = build(name)
    text = export_chart(example.chart, example.soliton)
    chart, soliton = parse_chart_file(text).build()

    p = example.chart.anchor + 0.1
    np.testing.assert_allclose(
        chart.metric_values(p), example.chart.metric_values(p), rtol=1e-12, atol=1e-14
    )
    assert soliton.lam == example.soliton.lam
    assert soliton.qspec == example.soliton.qspec
    assert soliton.Lambda == example.soliton.Lambda
    expected, _ = example.soliton.f.value_and_gradient(p)
    actual, _ = soliton.f.value_and_gradient(p)
    assert actual == pytest.approx(expected, rel=1e-12)


def test_export_keeps_product_and_quadrature(cylinder, sphere_example):
    cylinder_text = export_chart(cylinder.chart)
    assert "product.flat = 2 3" in cylinder_text
    assert "potential" not in cylinder_text
    sphere_text = export_chart(sphere_example.chart, sphere_example.soliton)
    assert "quadrature.periodic = false true" in sphere_text
