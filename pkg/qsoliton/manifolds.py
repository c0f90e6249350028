"""
Example Manifolds
=================

Closed-form charts and solitons with known answers: every example declares the verdict each
check must produce, which makes the library the regression surface of the engine.

Factors (point, Euclidean, round sphere in stereographic or polar coordinates, hyperbolic
ball) carry their metric expressions, distances, volumes and injectivity radii; examples are
products of factors.

Examples:
    gaussian             flat R^n, f = lambda |x|^2 / 2, q = 0
    round_sphere         S^n(R) Einstein as a stationary soliton (or f = height, a non-soliton)
    cylinder_shrinker    S^2(sqrt 2) x R^k, f = |x|^2 / 4 + a, q = ricci
    bach_product         N^2 x R^2 with N of curvature +-1, q = bach
    rigid_generic        N x R^k with f = Lambda |x|^2 / 2 + L(x) + b, q = ricci
    hyperbolic_expander  H^n, f constant, q = ricci

Usage:
    example = build("cylinder_shrinker", {"k": 2})
    example.soliton, example.spec.expected
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from math import gamma, pi, sqrt
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from qsoliton.charts import (
    Chart,
    Domain,
    ExpressionChart,
    FiniteDifferenceChart,
    ProductStructure,
    Quadrature,
    ScalarField,
)
from qsoliton.config import settings as default_settings
from qsoliton.errors import NumericalFailure, UnknownExampleError
from qsoliton.models import CHECK_NAMES, ExampleSpec, Verdict
from qsoliton.qtensors import QSpec, bach_tensor
from qsoliton.tools.verify import SolitonData

logger = logging.getLogger(__name__)

PASS, FAIL, INAPPLICABLE = Verdict.PASS, Verdict.FAIL, Verdict.INAPPLICABLE

# Fourth-order stencil step for the finite-difference Bach cross-check
BACH_STEPS = {4: 1e-2}


# ============================================================================
# Factors
# ============================================================================


@dataclass(frozen=True)
class Factor:
    """One Riemannian factor in a single chart."""

    name: str
    coordinates: list[str]
    metric: list[list[str]]
    lower: list[float]
    upper: list[float]
    anchor: list[float]
    distance: Callable[[np.ndarray, np.ndarray], float]
    einstein: float = 0.0
    volume: float | None = None
    injectivity: float = float("inf")
    margin: float = 0.0
    periodic: list[bool] | None = None
    height: str | None = None

    @property
    def dim(self) -> int:
        return len(self.coordinates)


def sphere_volume(n: int, radius: float) -> float:
    return 2 * pi ** ((n + 1) / 2) / gamma((n + 1) / 2) * radius**n


def _angle(a: np.ndarray, b: np.ndarray, radius: float) -> float:
    chord = float(np.linalg.norm(a - b))
    return 2 * radius * float(np.arcsin(min(1.0, chord / (2 * radius))))


def point() -> Factor:
    return Factor("point", [], [], [], [], [], lambda a, b: 0.0, volume=1.0)


def euclidean(k: int, half_width: float = 10.0, prefix: str = "x") -> Factor:
    names = [f"{prefix}{i + 1}" for i in range(k)]
    metric = [["1" if i == j else "0" for j in range(k)] for i in range(k)]
    return Factor(
        f"R^{k}",
        names,
        metric,
        [-half_width] * k,
        [half_width] * k,
        [0.0] * k,
        lambda a, b: float(np.linalg.norm(a - b)),
    )


def _stereographic_embedding(y: np.ndarray, radius: float) -> np.ndarray:
    s = float(y @ y)
    R2 = radius * radius
    return np.append(2 * R2 * y, radius * (s - R2)) / (R2 + s)


def _polar_embedding(angles: np.ndarray, radius: float) -> np.ndarray:
    out, prod = [], radius
    for theta in angles[:-1]:
        out.append(prod * np.cos(theta))
        prod *= np.sin(theta)
    out += [prod * np.cos(angles[-1]), prod * np.sin(angles[-1])]
    return np.array(out)


def sphere(
    n: int, radius: float, chart: Literal["stereographic", "polar"] = "stereographic"
) -> Factor:
    """Round S^n(radius); stereographic charts omit a cap around the projection pole."""
    if n < 2:
        raise ValueError(f"Sphere factors need n >= 2, got {n}")
    R = radius
    einstein = (n - 1) / R**2
    if chart == "stereographic":
        names = [f"u{i + 1}" for i in range(n)]
        s = "+".join(f"{u}^2" for u in names)
        conformal = f"{4 * R**4!r}/({R * R!r}+{s})^2"
        metric = [[conformal if i == j else "0" for j in range(n)] for i in range(n)]
        return Factor(
            f"S^{n}({R:g})",
            names,
            metric,
            [-2 * R] * n,
            [2 * R] * n,
            [0.0] * n,
            lambda a, b: _angle(
                _stereographic_embedding(a, R), _stereographic_embedding(b, R), R
            ),
            einstein=einstein,
            volume=sphere_volume(n, R),
            injectivity=pi * R,
            height=f"{R!r}*({s}-{R * R!r})/({R * R!r}+{s})",
        )

    names = [f"th{i + 1}" for i in range(n - 1)] + ["ph"]
    diagonal, prefix = [], ""
    for name in names:
        diagonal.append(f"{R * R!r}{prefix}")
        prefix += f"*sin({name})^2"
    metric = [[diagonal[i] if i == j else "0" for j in range(n)] for i in range(n)]
    return Factor(
        f"S^{n}({R:g}) polar",
        names,
        metric,
        [0.0] * n,
        [pi] * (n - 1) + [2 * pi],
        [pi / 2] * (n - 1) + [pi],
        lambda a, b: _angle(_polar_embedding(a, R), _polar_embedding(b, R), R),
        einstein=einstein,
        volume=sphere_volume(n, R),
        injectivity=pi * R,
        margin=0.15,
        periodic=[False] * (n - 1) + [True],
        height=f"{R!r}*cos(th1)",
    )


def hyperbolic(n: int, radius: float = 1.0) -> Factor:
    """Hyperbolic space of curvature -1/radius^2 in the Poincare ball."""
    if n < 2:
        raise ValueError(f"Hyperbolic factors need n >= 2, got {n}")
    R = radius
    names = [f"w{i + 1}" for i in range(n)]
    s = "+".join(f"{w}^2" for w in names)
    conformal = f"{4 * R * R!r}/(1-({s}))^2"
    half = 0.7 / sqrt(n)

    def distance(a: np.ndarray, b: np.ndarray) -> float:
        ratio = 2 * float((a - b) @ (a - b)) / ((1 - float(a @ a)) * (1 - float(b @ b)))
        return R * float(np.arccosh(1 + ratio))

    return Factor(
        f"H^{n}({R:g})",
        names,
        [[conformal if i == j else "0" for j in range(n)] for i in range(n)],
        [-half] * n,
        [half] * n,
        [0.0] * n,
        distance,
        einstein=-(n - 1) / R**2,
    )


def product_chart(
    factors: Sequence[Factor], label: str, flat: int | None = None
) -> ExpressionChart:
    """Block-diagonal product chart with product distance and minimizing lengths.

    ``flat`` names the index of a Euclidean factor whose complement is compact; the chart then
    declares its product structure for exact sublevel volumes.
    """
    coordinates = [c for f in factors for c in f.coordinates]
    n = len(coordinates)
    metric = [["0"] * n for _ in range(n)]
    slices, start = [], 0
    for f in factors:
        for i in range(f.dim):
            for j in range(f.dim):
                metric[start + i][start + j] = f.metric[i][j]
        slices.append(slice(start, start + f.dim))
        start += f.dim

    def distance(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sqrt(sum(f.distance(a[s], b[s]) ** 2 for f, s in zip(factors, slices))))

    def minimizing_length(x0: np.ndarray, v: np.ndarray) -> float:
        g = chart.metric_values(x0)
        cap = float("inf")
        for f, s in zip(factors, slices):
            speed = float(np.sqrt(max(v[s] @ g[s, s] @ v[s], 0.0)))
            if speed > 1e-12 and np.isfinite(f.injectivity):
                cap = min(cap, f.injectivity / speed)
        return cap

    quadrature = None
    if all(f.periodic is not None for f in factors if f.dim):
        quadrature = Quadrature(
            periodic=[p for f in factors for p in (f.periodic or [])],
            total_volume=float(np.prod([f.volume for f in factors])),
        )
    product = None
    if flat is not None:
        others = [f for k, f in enumerate(factors) if k != flat]
        if any(f.volume is None for f in others):
            raise ValueError("A product structure needs compact factors besides the flat one")
        product = ProductStructure(
            flat_axes=list(range(slices[flat].start, slices[flat].stop)),
            factor_volume=float(np.prod([f.volume for f in others])) if others else 1.0,
        )
    margin = max((f.margin for f in factors), default=0.0)
    chart = ExpressionChart(
        coordinates,
        metric,
        Domain(
            lower=[x for f in factors for x in f.lower],
            upper=[x for f in factors for x in f.upper],
            margin=margin,
        ),
        label=label,
        anchor=[x for f in factors for x in f.anchor],
        quadrature=quadrature,
        product=product,
        distance=distance,
        minimizing_length=minimizing_length,
        compact=all(f.volume is not None for f in factors),
    )
    return chart


# ============================================================================
# Parameters
# ============================================================================


class _Params(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")


class GaussianParams(_Params):
    dim: int = Field(default=2, ge=1, le=6, description="Dimension n")
    lam: float = Field(default=0.5, gt=0, alias="lambda", description="Soliton constant")
    half_width: float = Field(default=10.0, gt=0, description="Half width of the chart box")


class RoundSphereParams(_Params):
    dim: int = Field(default=2, ge=2, le=4)
    radius: float = Field(default=sqrt(2), gt=0)
    stationary: bool = Field(default=True, description="f constant; False uses f = height")
    chart: Literal["polar", "stereographic"] = "polar"
    rho: float | None = Field(default=None, description="Bourguignon parameter; None for ricci")


class CylinderParams(_Params):
    k: int = Field(default=2, ge=1, le=3, description="Flat dimensions")
    a: float = Field(default=1.0, description="Constant added to |x|^2 / 4")
    half_width: float = Field(default=20.0, gt=0)


class BachProductParams(_Params):
    curvature: Literal["positive", "negative"] = "positive"
    half_width: float = Field(default=10.0, gt=0)


class RigidParams(_Params):
    factor: Literal["point", "sphere", "hyperbolic"] = "sphere"
    factor_dim: int = Field(default=2, ge=2, le=3)
    radius: float = Field(default=sqrt(2), gt=0)
    k: int = Field(default=2, ge=1, le=3)
    Lambda: float = Field(default=0.5)
    linear: list[float] | None = Field(default=None, description="Linear part L on R^k")
    offset: float = Field(default=1.0, description="Constant b")
    half_width: float = Field(default=20.0, gt=0)

    @model_validator(mode="after")
    def check_linear(self) -> RigidParams:
        if self.linear is not None and len(self.linear) != self.k:
            raise ValueError(f"linear part needs {self.k} components, got {len(self.linear)}")
        if self.Lambda == 0:
            raise ValueError("Lambda must be nonzero")
        return self


class HyperbolicParams(_Params):
    dim: int = Field(default=2, ge=2, le=4)
    radius: float = Field(default=1.0, gt=0)


# ============================================================================
# Examples
# ============================================================================


@dataclass(frozen=True)
class Example:
    spec: ExampleSpec
    chart: Chart
    soliton: SolitonData
    factors: list[Factor] = field(default_factory=list)


def _table(default: Verdict = PASS, **overrides: Verdict) -> dict[str, Verdict]:
    table = {name: default for name in CHECK_NAMES}
    table.update(overrides)
    return table


def _quadratic(names: Sequence[str], coefficient: float) -> str:
    return f"{coefficient!r}*(" + "+".join(f"{x}^2" for x in names) + ")"


def rigid_factory(
    N: Factor,
    k: int,
    Lambda: float,
    linear: Sequence[float] | None = None,
    offset: float = 0.0,
    qspec: QSpec | None = None,
    lam: float | None = None,
    half_width: float = 20.0,
    label: str = "rigid",
) -> tuple[Chart, SolitonData]:
    """N x R^k with f = Lambda |x|^2 / 2 + L(x) + b; lambda defaults to Lambda (q = ricci)."""
    flat = euclidean(k, half_width)
    factors = [N, flat] if N.dim else [flat]
    # exact sublevel volumes need a compact complement
    compact_rest = all(f.volume is not None for f in factors[:-1])
    chart = product_chart(factors, label, flat=len(factors) - 1 if compact_rest else None)
    terms = [_quadratic(flat.coordinates, Lambda / 2)]
    for coefficient, x in zip(linear or [], flat.coordinates):
        if coefficient:
            terms.append(f"{coefficient!r}*{x}")
    terms.append(repr(float(offset)))
    potential = ScalarField.from_expression("f", "+".join(terms), chart, symbol="f")
    soliton = SolitonData(
        chart=chart,
        potential=potential,
        lam=Lambda if lam is None else lam,
        qspec=qspec or QSpec.from_text("ricci"),
        Lambda=Lambda,
        label=label,
    )
    return chart, soliton


def _gaussian(p: GaussianParams) -> Example:
    chart, S = rigid_factory(point(), p.dim, p.lam, qspec=QSpec.from_text("zero"),
                             half_width=p.half_width, label="gaussian")
    expected = _table(compact_integral=INAPPLICABLE)
    if p.lam != 0.5:
        expected["omori_yau"] = INAPPLICABLE
    return Example(
        ExampleSpec(
            name="gaussian",
            description=f"Gaussian shrinker on R^{p.dim}",
            params=p.model_dump(by_alias=True),
            recipe="flat R^n, f = lambda |x|^2 / 2, q = zero",
            expected=expected,
        ),
        chart,
        S,
        [euclidean(p.dim, p.half_width)],
    )


def _round_sphere(p: RoundSphereParams) -> Example:
    factor = sphere(p.dim, p.radius, p.chart)
    chart = product_chart([factor], f"round S^{p.dim}")
    rho = p.rho or 0.0
    qspec = QSpec.from_text(f"bourguignon rho={rho!r}" if p.rho is not None else "ricci")
    lam = factor.einstein * (1 - rho * p.dim)
    text = "0" if p.stationary else str(factor.height)
    potential = ScalarField.from_expression("f", text, chart)
    S = SolitonData(chart, potential, lam, qspec, label="sphere")

    volume_checks = ("lower_bound", "coarea", "upper_volume", "lower_volume", "omori_yau")
    expected = _table(flatness_hypotheses=PASS if lam == 0 else INAPPLICABLE)
    expected.update({name: INAPPLICABLE for name in volume_checks})
    if p.chart != "polar":
        expected["compact_integral"] = INAPPLICABLE
    if lam == 0:
        expected["trace_bounds"] = INAPPLICABLE
    if lam <= 0:
        expected["growth_bounds"] = INAPPLICABLE
    if not p.stationary:
        # non-soliton control: only the checks with a definite answer are gated
        expected = {"soliton_residual": FAIL}
        if p.chart == "polar":
            expected["compact_integral"] = FAIL
    return Example(
        ExampleSpec(
            name="round_sphere",
            description=f"Round S^{p.dim}({p.radius:g}) {'Einstein' if p.stationary else 'height'}",
            params=p.model_dump(by_alias=True),
            recipe="Ric = (n-1)/R^2 g, lambda = (n-1)/R^2 (1 - rho n), f = 0 or height",
            injectivity_bound=factor.injectivity,
            expected=expected,
        ),
        chart,
        S,
        [factor],
    )


def _cylinder(p: CylinderParams) -> Example:
    N = sphere(2, sqrt(2))
    chart, S = rigid_factory(N, p.k, 0.5, offset=p.a, half_width=p.half_width, label="cylinder")
    S.Lambda = None
    return Example(
        ExampleSpec(
            name="cylinder_shrinker",
            description=f"Round cylinder S^2(sqrt 2) x R^{p.k}",
            params=p.model_dump(by_alias=True),
            recipe="q = ricci, lambda = 1/2, f = |x|^2 / 4 + a; a = 1 zeroes the Hamilton constant",
            injectivity_bound=N.injectivity,
            expected=_table(flatness_hypotheses=INAPPLICABLE, compact_integral=INAPPLICABLE),
        ),
        chart,
        S,
        [N, euclidean(p.k, p.half_width)],
    )


def bach_constant(chart: Chart, flat_axis: int) -> float:
    """c^2 read off the flat block of the Bach tensor at the anchor."""
    B = bach_tensor(chart, chart.anchor)
    g = chart.metric_values(chart.anchor)
    c2 = float(B[flat_axis, flat_axis] / g[flat_axis, flat_axis])
    if not np.isfinite(c2) or c2 <= 0:
        raise NumericalFailure(f"Bach constant c^2 = {c2} is not positive")
    return c2


def finite_difference_twin(
    chart: Chart, steps: Mapping[int, float] | None = None
) -> FiniteDifferenceChart:
    """The same metric seen only through its values; every derivative is a stencil estimate."""
    return FiniteDifferenceChart(
        chart.coordinates,
        chart.metric_values,
        chart.domain,
        steps=steps,
        label=f"{chart.label} (finite differences)",
        anchor=chart.anchor,
    )


def cross_checked_bach_constant(
    chart: Chart, flat_axis: int, tolerance: float | None = None
) -> tuple[float, float]:
    """c^2 from exact jets and from a finite-difference twin; they must agree to ``tolerance``."""
    tolerance = default_settings.tolerance_fd if tolerance is None else tolerance
    c2 = bach_constant(chart, flat_axis)
    c2_fd = bach_constant(finite_difference_twin(chart, BACH_STEPS), flat_axis)
    gap = abs(c2 - c2_fd) / c2
    if gap > tolerance:
        raise NumericalFailure(
            f"Bach constant disagrees: c^2 = {c2:.9g} from jets, {c2_fd:.9g} from finite "
            f"differences (relative gap {gap:.2e} > {tolerance:g})"
        )
    logger.debug("Bach constant cross-check: relative gap %.2e", gap)
    return c2, c2_fd


def _bach_product(p: BachProductParams) -> Example:
    N = sphere(2, 1.0) if p.curvature == "positive" else hyperbolic(2, 1.0)
    flat = euclidean(2, p.half_width)
    probe = product_chart([N, flat], "bach probe")
    c2, c2_fd = cross_checked_bach_constant(probe, 2)
    logger.info(
        "Bach constant c^2 = %.12g on %s x R^2 (finite differences %.6g)", c2, N.name, c2_fd
    )
    chart, S = rigid_factory(
        N, 2, c2, qspec=QSpec.from_text("bach"), lam=c2 / 2, half_width=p.half_width,
        label="bach_product",
    )
    expected = _table(
        hamilton_scalar=FAIL,
        hamilton_tensor=FAIL,
        laplacian_trace=INAPPLICABLE,
        trace_bounds=INAPPLICABLE,
        flatness_hypotheses=INAPPLICABLE,
        compact_integral=INAPPLICABLE,
        evolution_identities=FAIL,
        lower_bound=INAPPLICABLE,
        coarea=INAPPLICABLE,
        upper_volume=INAPPLICABLE,
        lower_volume=INAPPLICABLE,
        omori_yau=INAPPLICABLE,
    )
    return Example(
        ExampleSpec(
            name="bach_product",
            description=f"{N.name} x R^2 as a gradient Bach soliton",
            params={**p.model_dump(by_alias=True), "c2": c2, "c2_fd": c2_fd},
            recipe="B = -c^2 g_N + c^2 g_R2, lambda = c^2 / 2, Lambda = c^2, f = c^2 |x|^2 / 2",
            expected=expected,
        ),
        chart,
        S,
        [N, flat],
    )


def _rigid_generic(p: RigidParams) -> Example:
    if p.factor == "point":
        N = point()
    elif p.factor == "sphere":
        N = sphere(p.factor_dim, p.radius)
    else:
        N = hyperbolic(p.factor_dim, p.radius)
    if N.dim and abs(N.einstein - p.Lambda) > 1e-12:
        raise ValueError(
            f"Ric of {N.name} is {N.einstein:g} g; a rigid ricci soliton needs Lambda = "
            f"{N.einstein:g}, got {p.Lambda:g}"
        )
    chart, S = rigid_factory(
        N, p.k, p.Lambda, p.linear, p.offset, half_width=p.half_width, label="rigid"
    )
    L2 = float(np.sum(np.square(p.linear or [0.0])))
    F = 0.5 * L2 - p.Lambda * p.offset
    expected = _table(
        compact_integral=INAPPLICABLE,
        flatness_hypotheses=PASS if not N.dim else INAPPLICABLE,
    )
    growing = ("growth_bounds", "lower_bound", "coarea", "upper_volume", "lower_volume")
    if p.Lambda < 0:
        expected.update({name: INAPPLICABLE for name in growing})
    elif F > 0:
        expected.update(growth_bounds=INAPPLICABLE, lower_bound=INAPPLICABLE)
    if p.Lambda != 0.5 or F > 0:
        expected["omori_yau"] = INAPPLICABLE
    return Example(
        ExampleSpec(
            name="rigid_generic",
            description=f"Rigid soliton {N.name} x R^{p.k}",
            params=p.model_dump(by_alias=True),
            recipe="f = Lambda |x|^2 / 2 + L(x) + b on the flat factor, q = ricci, lambda = Lambda",
            injectivity_bound=N.injectivity if N.dim else None,
            expected=expected,
        ),
        chart,
        S,
        [N, euclidean(p.k, p.half_width)],
    )


def _hyperbolic_expander(p: HyperbolicParams) -> Example:
    factor = hyperbolic(p.dim, p.radius)
    chart = product_chart([factor], f"H^{p.dim}")
    S = SolitonData(
        chart,
        ScalarField.from_expression("f", "0", chart),
        factor.einstein,
        QSpec.from_text("ricci"),
        label="hyperbolic_expander",
    )
    expected = _table(
        flatness_hypotheses=INAPPLICABLE,
        compact_integral=INAPPLICABLE,
        growth_bounds=INAPPLICABLE,
        lower_bound=INAPPLICABLE,
        coarea=INAPPLICABLE,
        upper_volume=INAPPLICABLE,
        lower_volume=INAPPLICABLE,
        omori_yau=INAPPLICABLE,
    )
    return Example(
        ExampleSpec(
            name="hyperbolic_expander",
            description=f"Hyperbolic H^{p.dim}({p.radius:g}) as a stationary expander",
            params=p.model_dump(by_alias=True),
            recipe="q = ricci, lambda = -(n-1)/R^2, f = 0",
            expected=expected,
        ),
        chart,
        S,
        [factor],
    )


CATALOG: dict[str, tuple[type[_Params], Callable[[Any], Example], str]] = {
    "gaussian": (GaussianParams, _gaussian, "Gaussian shrinker on flat R^n"),
    "round_sphere": (RoundSphereParams, _round_sphere, "Einstein sphere, stationary"),
    "cylinder_shrinker": (CylinderParams, _cylinder, "S^2(sqrt 2) x R^k shrinking cylinder"),
    "bach_product": (BachProductParams, _bach_product, "N^2 x R^2 gradient Bach soliton"),
    "rigid_generic": (RigidParams, _rigid_generic, "N x R^k rigid soliton"),
    "hyperbolic_expander": (HyperbolicParams, _hyperbolic_expander, "Stationary H^n expander"),
}


def available() -> list[str]:
    return list(CATALOG)


def parameters(name: str) -> dict[str, Any]:
    """JSON schema of an example's parameters."""
    if name not in CATALOG:
        raise UnknownExampleError(f"Unknown example {name!r}; available: {', '.join(CATALOG)}")
    return CATALOG[name][0].model_json_schema(by_alias=True)


def build(name: str, params: Mapping[str, Any] | None = None) -> Example:
    """Instantiate a library example.

    Raises:
        UnknownExampleError: If ``name`` is not in the catalog
        ValueError: If ``params`` fall outside the documented ranges
    """
    if name not in CATALOG:
        raise UnknownExampleError(f"Unknown example {name!r}; available: {', '.join(CATALOG)}")
    model, builder, _ = CATALOG[name]
    try:
        parsed = model.model_validate(dict(params or {}))
    except ValidationError as e:
        raise ValueError(f"Invalid parameters for {name}: {e}") from e
    example = builder(parsed)
    logger.debug("Built example %s on %r", name, example.chart)
    return example
