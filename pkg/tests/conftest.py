"""
Shared fixtures: reduced sample budgets and a handful of library examples.
"""

from pathlib import Path

import pytest

from qsoliton.charts import Domain, ExpressionChart
from qsoliton.config import settings
from qsoliton.manifolds import build
from qsoliton.tools.verify import SampleSet

ROOT = Path(__file__).resolve().parent.parent
SCHEMA_PATH = ROOT / "schemas" / "run-report.schema.json"


@pytest.fixture
def fast_settings():
    """Engine settings small enough for unit tests."""
    return settings.model_copy(
        update={
            "samples": 16,
            "ball_samples": 24,
            "growth_samples": 24,
            "mc_points": 4096,
            "quadrature_nodes": 16,
            "probe_geodesics": 4,
            "geodesic_step": 1e-2,
            "geodesic_length": 8.0,
        }
    )


@pytest.fixture
def plane():
    """Flat R^2 on [-5, 5]^2."""
    return ExpressionChart(
        ["x", "y"],
        [["1", "0"], ["0", "1"]],
        Domain(lower=[-5, -5], upper=[5, 5]),
        label="plane",
    )


@pytest.fixture
def gaussian():
    return build("gaussian", {"dim": 2, "lambda": 0.5})


@pytest.fixture
def cylinder():
    return build("cylinder_shrinker", {"k": 2, "a": 1.0})


@pytest.fixture
def sphere_example():
    return build("round_sphere")


@pytest.fixture
def samples_for(fast_settings):
    """Factory: a small SampleSet on the chart of an example."""

    def _make(example, count=None):
        return SampleSet(example.chart, count or fast_settings.samples, fast_settings.seed)

    return _make


@pytest.fixture
def report_schema():
    import json

    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


@pytest.fixture
def cylinder_chart_text():
    return """# S^2(sqrt 2) x R^2 in stereographic coordinates
label = cylinder
coordinates = u1 u2 x1 x2
constants = R=1.4142135623730951 a=1.0
domain.lower = -2.8 -2.8 -20 -20
domain.upper = 2.8 2.8 20 20
anchor = 0 0 0 0
metric[0][0] = 4*R^4/(R^2+u1^2+u2^2)^2
metric[1][1] = 4*R^4/(R^2+u1^2+u2^2)^2
metric[2][2] = 1
metric[3][3] = 1
potential = (x1^2 + x2^2)/4 + a
lambda = 0.5
Lambda = 0.5
q = ricci
product.flat = 2 3
product.volume = 25.132741228718345
"""
