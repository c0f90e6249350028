"""
Charts and Fields
=================

A chart is a coordinate box carrying a Riemannian metric whose components can be expanded as
truncated Taylor jets at any interior point. Scalar and tensor fields are evaluated through a
LocalGeometry so that derived quantities (curvature, q tensors) share one metric expansion.

Two chart sources are supported:

- ``ExpressionChart``: metric components are closed-form expressions; jets are exact to any
  order.
- ``FiniteDifferenceChart``: only order-0 metric values are available; jets come from
  Richardson-extrapolated central differences and the chart is flagged inexact.

Usage:
    chart = ExpressionChart(
        coordinates=["x", "y"],
        metric=[["1", "0"], ["0", "1"]],
        domain=Domain(lower=[-5, -5], upper=[5, 5]),
        label="plane",
    )
    chart.metric_jet([0.3, -1.1], order=2)
"""

from __future__ import annotations

import functools
import itertools
import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import sympy
from pydantic import BaseModel, Field, model_validator

from qsoliton.errors import DomainError, ExpressionError, JetOrderError, MetricError
from qsoliton.jets import Jet, jet_space
from qsoliton.utils.expressions import (
    compile_numeric,
    evaluate_jet,
    parse_expression,
    symbols_for,
)

if TYPE_CHECKING:
    from qsoliton.geometry import LocalGeometry

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12

# Central difference steps per derivative order for FiniteDifferenceChart
DEFAULT_STEPS = {1: 1e-3, 2: 5e-3, 3: 1e-2, 4: 2e-2}

# Second-order central stencils, offset -> weight (divide by h^m)
_STENCILS: dict[int, dict[int, float]] = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


# ============================================================================
# Domains
# ============================================================================


class Domain(BaseModel):
    """Coordinate box; sampling stays ``margin`` away from every face."""

    lower: list[float] = Field(..., min_length=1)
    upper: list[float] = Field(..., min_length=1)
    margin: float = Field(default=0.0, ge=0, description="Inset applied when sampling")

    @model_validator(mode="after")
    def check_box(self) -> Domain:
        if len(self.lower) != len(self.upper):
            raise ValueError("Domain bounds have different lengths")
        for lo, hi in zip(self.lower, self.upper):
            if not hi - lo > 2 * self.margin:
                raise ValueError(f"Empty domain interval [{lo}, {hi}] with margin {self.margin}")
        return self

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.lower) + np.array(self.upper)) / 2

    def contains(self, p: Sequence[float], slack: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(
            np.all(p >= np.array(self.lower) - slack) and np.all(p <= np.array(self.upper) + slack)
        )

    def sampling_box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lower) + self.margin, np.array(self.upper) - self.margin


class Quadrature(BaseModel):
    """Declares that the domain box covers a compact manifold up to a null set."""

    periodic: list[bool] = Field(..., description="Axes identified end to end")
    total_volume: float = Field(..., gt=0, description="Known Riemannian volume")


class ProductStructure(BaseModel):
    """Declares the chart as N x R^k with f and tr(q) depending only on the flat radius."""

    flat_axes: list[int] = Field(..., min_length=1, description="Coordinates of the flat factor")
    factor_volume: float = Field(
        default=1.0, gt=0, description="Riemannian volume of the compact factor N"
    )


# ============================================================================
# Charts
# ============================================================================


class Chart(ABC):
    """A single coordinate chart with a Riemannian metric."""

    exact: bool = True

    def __init__(
        self,
        coordinates: Sequence[str],
        domain: Domain,
        label: str = "chart",
        anchor: Sequence[float] | None = None,
        quadrature: Quadrature | None = None,
        product: ProductStructure | None = None,
        distance: Callable[[np.ndarray, np.ndarray], float] | None = None,
        minimizing_length: Callable[[np.ndarray, np.ndarray], float] | None = None,
        constants: Mapping[str, float] | None = None,
        compact: bool = False,
    ) -> None:
        if len(coordinates) != domain.dim:
            raise ValueError(
                f"{len(coordinates)} coordinates for a {domain.dim}-dimensional domain"
            )
        if len(set(coordinates)) != len(coordinates):
            raise ValueError(f"Duplicate coordinate names: {list(coordinates)}")
        self.coordinates = list(coordinates)
        self.domain = domain
        self.label = label
        self.anchor = np.asarray(anchor if anchor is not None else domain.center, dtype=float)
        self.quadrature = quadrature
        self.product = product
        self.distance = distance
        self.minimizing_length = minimizing_length
        self.constants = dict(constants or {})
        self.compact = compact or quadrature is not None
        self.validate_point(self.anchor)

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(label={self.label!r}, dim={self.dim})"

    @abstractmethod
    def metric_jet(self, p: Sequence[float], order: int) -> Jet:
        """Metric components g_ij as an (n, n) jet of the given order at ``p``."""

    def metric_values(self, p: Sequence[float]) -> np.ndarray:
        return self.metric_jet(p, 0).value

    def metric_first(self, p: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """Metric values and first partials ``dg[k, i, j] = d_k g_ij``."""
        jet = self.metric_jet(p, 1)
        return jet.value, jet.first_partials()

    def christoffel_value(self, p: Sequence[float]) -> np.ndarray:
        """Christoffel symbols ``gamma[k, i, j]`` at ``p`` (values only)."""
        g, dg = self.metric_first(p)
        lowered = 0.5 * (
            np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
        )
        return np.einsum("kl,lij->kij", np.linalg.inv(g), lowered)

    def validate_point(self, p: Sequence[float]) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise DomainError(f"Point {p.tolist()} is not a {self.dim}-dimensional point")
        if not self.domain.contains(p):
            raise DomainError(f"Point {p.tolist()} lies outside the domain of {self.label!r}")
        return p

    def check_metric(self, g: np.ndarray, p: Sequence[float]) -> None:
        """Raise MetricError unless ``g`` is symmetric positive definite."""
        scale = max(1.0, float(np.max(np.abs(g))))
        if np.max(np.abs(g - g.T)) > SYMMETRY_TOLERANCE * scale:
            raise MetricError(f"Metric of {self.label!r} is not symmetric at {list(p)}")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as e:
            raise MetricError(
                f"Metric of {self.label!r} is not positive definite at {list(p)}"
            ) from e


class ExpressionChart(Chart):
    """Chart whose metric components are closed-form expressions (exact jets)."""

    def __init__(
        self,
        coordinates: Sequence[str],
        metric: Sequence[Sequence[str | sympy.Expr]],
        domain: Domain,
        constants: Mapping[str, float] | None = None,
        **kwargs: object,
    ) -> None:
        super().__init__(
            coordinates, domain, constants=constants, **kwargs  # type: ignore[arg-type]
        )
        n = len(coordinates)
        if len(metric) != n or any(len(row) != n for row in metric):
            raise ExpressionError(f"Metric table must be {n}x{n}")
        self.metric_expressions = [
            [self._parse(entry) for entry in row] for row in metric
        ]
        self.symbols = symbols_for(self.coordinates)

    def _parse(self, entry: str | sympy.Expr) -> sympy.Expr:
        if isinstance(entry, sympy.Expr):
            return entry
        return parse_expression(str(entry), self.coordinates, self.constants)

    def metric_jet(self, p: Sequence[float], order: int) -> Jet:
        space = jet_space(self.dim, order)
        variables = {
            symbol: Jet.variable(space, p, axis) for axis, symbol in enumerate(self.symbols)
        }
        cache: dict[sympy.Expr, Jet] = {}
        entries = []
        for expr in itertools.chain.from_iterable(self.metric_expressions):
            if expr not in cache:
                cache[expr] = evaluate_jet(expr, variables, space)
            entries.append(cache[expr])
        return Jet.stack(entries, (self.dim, self.dim))

    @functools.cached_property
    def _first_order(self) -> Callable[[np.ndarray], np.ndarray]:
        flat = list(itertools.chain.from_iterable(self.metric_expressions))
        exprs = flat + [sympy.diff(e, s) for s in self.symbols for e in flat]
        return compile_numeric(exprs, self.coordinates)

    def metric_first(self, p: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        n = self.dim
        values = np.broadcast_to(self._first_order(np.asarray(p, dtype=float)), (n * n * (n + 1),))
        return values[: n * n].reshape(n, n), values[n * n :].reshape(n, n, n)

    def metric_values(self, p: Sequence[float]) -> np.ndarray:
        return self.metric_first(p)[0]


def finite_difference_jet(
    fn: Callable[[np.ndarray], np.ndarray],
    p: Sequence[float],
    order: int,
    steps: Mapping[int, float] | None = None,
) -> Jet:
    """Jet of ``fn`` at ``p`` from tensor-product central stencils with Richardson extrapolation.

    Supports derivative orders up to 4; values of ``fn`` may be arrays of any shape.
    """
    if order > 4:
        raise JetOrderError(f"Finite-difference jets support order <= 4, got {order}")
    steps = {**DEFAULT_STEPS, **(steps or {})}
    p = np.asarray(p, dtype=float)
    space = jet_space(len(p), order)
    memo: dict[tuple[float, tuple[int, ...]], np.ndarray] = {}

    def value(h: float, offset: tuple[int, ...]) -> np.ndarray:
        key = (h, offset)
        if key not in memo:
            memo[key] = np.asarray(fn(p + h * np.array(offset)), dtype=float)
        return memo[key]

    def stencil(alpha: tuple[int, ...], h: float) -> np.ndarray:
        total = 0.0
        weights = [_STENCILS[a].items() for a in alpha]
        for combo in itertools.product(*weights):
            offset = tuple(o for o, _ in combo)
            weight = float(np.prod([w for _, w in combo]))
            total = total + weight * value(h, offset)
        return total / h ** sum(alpha)

    partials = []
    for alpha in space.indices:
        degree = sum(alpha)
        if degree == 0:
            partials.append(value(0.0, (0,) * len(p)))
            continue
        h = steps[degree]
        partials.append((4.0 * stencil(alpha, h / 2) - stencil(alpha, h)) / 3.0)
    stacked = np.moveaxis(np.array(partials), 0, -1)
    logger.debug("Finite-difference jet of order %d used %d evaluations", order, len(memo))
    return Jet.from_partials(stacked, space)


class FiniteDifferenceChart(Chart):
    """Chart built from an order-0 metric callable; jets are finite-difference estimates."""

    exact = False

    def __init__(
        self,
        coordinates: Sequence[str],
        metric_fn: Callable[[np.ndarray], np.ndarray],
        domain: Domain,
        steps: Mapping[int, float] | None = None,
        **kwargs: object,
    ) -> None:
        super().__init__(coordinates, domain, **kwargs)  # type: ignore[arg-type]
        self.metric_fn = metric_fn
        self.steps = dict(steps or {})

    def metric_jet(self, p: Sequence[float], order: int) -> Jet:
        return finite_difference_jet(self.metric_fn, p, order, self.steps)

    def metric_values(self, p: Sequence[float]) -> np.ndarray:
        return np.asarray(self.metric_fn(np.asarray(p, dtype=float)), dtype=float)


# ============================================================================
# Fields
# ============================================================================


class ScalarField:
    """A scalar function on a chart.

    Pointwise fields (potentials, test functions) expand from the coordinates alone; derived
    fields such as traces or curvature scalars are built from a LocalGeometry.
    """

    def __init__(
        self,
        name: str,
        builder: Callable[[LocalGeometry], Jet] | None = None,
        pointwise: Callable[[np.ndarray, int], Jet] | None = None,
        expression: sympy.Expr | None = None,
        coordinates: Sequence[str] | None = None,
        symbol: str | None = None,
    ) -> None:
        if builder is None and pointwise is None:
            raise ValueError(f"Scalar field {name!r} needs a builder or a pointwise expansion")
        self.name = name
        self.builder = builder
        self.pointwise = pointwise
        self.expression = expression
        self.coordinates = list(coordinates) if coordinates is not None else None
        self.symbol = symbol or name
        self._numeric: Callable[[np.ndarray], np.ndarray] | None = None

    def __repr__(self) -> str:
        return f"ScalarField({self.name!r})"

    @classmethod
    def from_expression(
        cls,
        name: str,
        text: str | sympy.Expr,
        chart: Chart,
        symbol: str | None = None,
    ) -> ScalarField:
        expr = (
            text
            if isinstance(text, sympy.Expr)
            else parse_expression(str(text), chart.coordinates, chart.constants)
        )
        symbols = symbols_for(chart.coordinates)

        def pointwise(p: np.ndarray, order: int) -> Jet:
            space = jet_space(len(symbols), order)
            variables = {s: Jet.variable(space, p, k) for k, s in enumerate(symbols)}
            return evaluate_jet(expr, variables, space)

        return cls(
            name,
            pointwise=pointwise,
            expression=expr,
            coordinates=chart.coordinates,
            symbol=symbol,
        )

    @classmethod
    def from_callable(
        cls,
        name: str,
        fn: Callable[[np.ndarray], float],
        steps: Mapping[int, float] | None = None,
        symbol: str | None = None,
    ) -> ScalarField:
        """Scalar field known only by its values; jets by finite differences (order <= 4)."""

        def pointwise(p: np.ndarray, order: int) -> Jet:
            return finite_difference_jet(fn, p, min(order, 4), steps)

        return cls(name, pointwise=pointwise, symbol=symbol)

    @classmethod
    def constant(cls, name: str, value: float, chart: Chart) -> ScalarField:
        return cls.from_expression(name, sympy.Float(value), chart)

    @classmethod
    def derived(
        cls, name: str, builder: Callable[[LocalGeometry], Jet], symbol: str | None = None
    ) -> ScalarField:
        return cls(name, builder=builder, symbol=symbol)

    def jet(self, geometry: LocalGeometry) -> Jet:
        """Expansion at the geometry's point, one order above its metric jet if pointwise."""
        if self.pointwise is not None:
            return self.pointwise(geometry.point, geometry.order + 1)
        assert self.builder is not None
        return self.builder(geometry)

    def local_jet(self, p: Sequence[float], order: int) -> Jet:
        if self.pointwise is None:
            raise JetOrderError(f"Field {self.name!r} needs a metric to be evaluated")
        return self.pointwise(np.asarray(p, dtype=float), order)

    def value_and_gradient(self, p: Sequence[float]) -> tuple[float, np.ndarray]:
        """Value and coordinate partials at ``p``; compiled when the field is an expression."""
        p = np.asarray(p, dtype=float)
        if self.expression is not None and self.coordinates is not None:
            if self._numeric is None:
                symbols = symbols_for(self.coordinates)
                exprs = [self.expression] + [sympy.diff(self.expression, s) for s in symbols]
                self._numeric = compile_numeric(exprs, self.coordinates)
            values = np.broadcast_to(self._numeric(p), (len(p) + 1,))
            return float(values[0]), np.array(values[1:])
        jet = self.local_jet(p, 1)
        return float(jet.value), jet.first_partials()

    def shifted(self, a: float) -> ScalarField:
        """The field plus the constant ``a``."""
        if a == 0:
            return self
        name = f"{self.name}{a:+g}"
        if self.expression is not None and self.coordinates is not None:
            return ScalarField(
                name,
                pointwise=_shift_pointwise(self.pointwise, a),
                expression=self.expression + sympy.Float(a),
                coordinates=self.coordinates,
                symbol=self.symbol,
            )
        if self.pointwise is not None:
            return ScalarField(
                name, pointwise=_shift_pointwise(self.pointwise, a), symbol=self.symbol
            )
        base = self.builder
        assert base is not None
        return ScalarField(name, builder=lambda geometry: base(geometry) + a, symbol=self.symbol)


def _shift_pointwise(
    pointwise: Callable[[np.ndarray, int], Jet] | None, a: float
) -> Callable[[np.ndarray, int], Jet]:
    assert pointwise is not None
    return lambda p, order: pointwise(p, order) + a


@dataclass(frozen=True, eq=False)
class TensorField:
    """A covariant tensor field built from a LocalGeometry.

    ``cost`` is the number of metric derivatives consumed: a field with cost c returned by a
    geometry of metric order K is a jet of order K - c.
    """

    name: str
    builder: Callable[[LocalGeometry], Jet] = field(compare=False)
    cost: int = 0
    valence: tuple[int, int] = (0, 2)
    symmetric: bool = True
    symbol: str = ""
    expressions: list[list[sympy.Expr]] | None = field(default=None, repr=False)

    def jet(self, geometry: LocalGeometry) -> Jet:
        return geometry.field(self)

    @classmethod
    def metric(cls) -> TensorField:
        return cls("metric", lambda geometry: geometry.g, cost=0, symbol="g")

    @classmethod
    def ricci(cls) -> TensorField:
        return cls("ricci", lambda geometry: geometry.ricci, cost=2, symbol="Ric")

    @classmethod
    def scaled_metric(cls, factor: float) -> TensorField:
        return cls(
            f"{factor:g}*metric", lambda geometry: geometry.g * factor, cost=0, symbol="cg"
        )

    @classmethod
    def from_expressions(
        cls,
        name: str,
        table: Mapping[tuple[int, int], str | sympy.Expr],
        chart: Chart,
    ) -> TensorField:
        """Symmetric (0,2) field from component expressions; missing entries mirror or vanish."""
        n = chart.dim
        exprs: list[list[sympy.Expr]] = [[sympy.Integer(0)] * n for _ in range(n)]
        for (i, j), text in table.items():
            if not (0 <= i < n and 0 <= j < n):
                raise ExpressionError(f"Component ({i}, {j}) out of range for dimension {n}")
            expr = (
                text
                if isinstance(text, sympy.Expr)
                else parse_expression(str(text), chart.coordinates, chart.constants)
            )
            exprs[i][j] = expr
            if (j, i) not in table:
                exprs[j][i] = expr
        for (i, j) in table:
            if i < j and (j, i) in table and sympy.simplify(exprs[i][j] - exprs[j][i]) != 0:
                raise ExpressionError(
                    f"{name}[{j}][{i}] disagrees with its symmetric entry {name}[{i}][{j}]"
                )
        symbols = symbols_for(chart.coordinates)

        def builder(geometry: LocalGeometry) -> Jet:
            space = jet_space(n, geometry.order)
            variables = {s: Jet.variable(space, geometry.point, k) for k, s in enumerate(symbols)}
            entries = [evaluate_jet(e, variables, space) for row in exprs for e in row]
            return Jet.stack(entries, (n, n))

        return cls(name, builder, cost=0, symbol="q", expressions=exprs)
