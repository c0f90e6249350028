"""
Declarative Chart Files
=======================

A line-oriented ``key = value`` format describing one chart and, optionally, the soliton data
on it. ``#`` starts a comment; blank lines are ignored.

    label          = cylinder
    coordinates    = u1 u2 x1 x2
    constants      = a=1.0 R=1.4142135623730951
    domain.lower   = -2.8 -2.8 -20 -20
    domain.upper   = 2.8 2.8 20 20
    domain.margin  = 0
    anchor         = 0 0 0 0
    metric[0][0]   = 4*R^4/(R^2+u1^2+u2^2)^2
    metric[1][1]   = 4*R^4/(R^2+u1^2+u2^2)^2
    metric[2][2]   = 1
    metric[3][3]   = 1
    potential      = (x1^2 + x2^2)/4 + a
    lambda         = 0.5
    Lambda         = 0.5
    q              = ricci
    product.flat   = 2 3
    product.volume = 25.132741228718345
    quadrature.periodic = false true
    quadrature.volume   = 25.132741228718345

Metric entries not listed are 0; an off-diagonal entry fills both symmetric slots. Errors
carry the offending line number.

Usage:
    document = parse_chart_file(Path("cylinder.chart").read_text())
    chart, soliton = document.build()
    text = export_chart(chart, soliton)
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

import sympy
from pydantic import BaseModel, Field, ValidationError

from qsoliton.charts import (
    Chart,
    Domain,
    ExpressionChart,
    ProductStructure,
    Quadrature,
    ScalarField,
)
from qsoliton.errors import ExpressionError
from qsoliton.qtensors import QSpec
from qsoliton.tools.verify import SolitonData
from qsoliton.utils.expressions import parse_expression

logger = logging.getLogger(__name__)

_METRIC_KEY = re.compile(r"^metric\s*\[\s*(\d+)\s*\]\s*\[\s*(\d+)\s*\]$")
_SCALAR_KEYS = {
    "label",
    "coordinates",
    "constants",
    "domain.lower",
    "domain.upper",
    "domain.margin",
    "anchor",
    "potential",
    "lambda",
    "Lambda",
    "q",
    "product.flat",
    "product.volume",
    "quadrature.periodic",
    "quadrature.volume",
}


class ChartDocument(BaseModel):
    """Parsed contents of a chart file."""

    label: str = "chart"
    coordinates: list[str] = Field(..., min_length=1)
    constants: dict[str, float] = Field(default_factory=dict)
    lower: list[float]
    upper: list[float]
    margin: float = 0.0
    anchor: list[float] | None = None
    metric: dict[tuple[int, int], str] = Field(default_factory=dict)
    potential: str | None = None
    lam: float | None = None
    Lambda: float | None = None
    q: str = "ricci"
    product_flat: list[int] | None = None
    product_volume: float = 1.0
    quadrature_periodic: list[bool] | None = None
    quadrature_volume: float | None = None

    def metric_table(self) -> list[list[str]]:
        n = len(self.coordinates)
        table = [["0"] * n for _ in range(n)]
        for (i, j), text in self.metric.items():
            table[i][j] = table[j][i] = text
        return table

    def chart(self) -> ExpressionChart:
        quadrature = None
        if self.quadrature_periodic is not None:
            if self.quadrature_volume is None:
                raise ExpressionError("quadrature.periodic needs quadrature.volume")
            quadrature = Quadrature(
                periodic=self.quadrature_periodic, total_volume=self.quadrature_volume
            )
        product = None
        if self.product_flat is not None:
            product = ProductStructure(
                flat_axes=self.product_flat, factor_volume=self.product_volume
            )
        return ExpressionChart(
            self.coordinates,
            self.metric_table(),
            Domain(lower=self.lower, upper=self.upper, margin=self.margin),
            constants=self.constants,
            label=self.label,
            anchor=self.anchor,
            quadrature=quadrature,
            product=product,
        )

    def build(self) -> tuple[ExpressionChart, SolitonData | None]:
        """The chart, plus SolitonData when potential and lambda are both given."""
        chart = self.chart()
        if self.potential is None or self.lam is None:
            return chart, None
        potential = ScalarField.from_expression("f", self.potential, chart, symbol="f")
        soliton = SolitonData(
            chart=chart,
            potential=potential,
            lam=self.lam,
            qspec=QSpec.from_text(self.q),
            Lambda=self.Lambda,
            label=self.label,
        )
        return chart, soliton


def _numbers(value: str, line: int, key: str) -> list[float]:
    try:
        return [float(token) for token in value.split()]
    except ValueError as e:
        raise ExpressionError(f"line {line}: {key} expects numbers, got {value!r}") from e


def _booleans(value: str, line: int, key: str) -> list[bool]:
    out = []
    for token in value.split():
        if token.lower() not in ("true", "false"):
            raise ExpressionError(f"line {line}: {key} expects true/false, got {token!r}")
        out.append(token.lower() == "true")
    return out


def _check_expression(
    text: str, coordinates: list[str], constants: dict[str, float], line: int
) -> None:
    try:
        parse_expression(text, coordinates, constants)
    except ExpressionError as e:
        raise ExpressionError(f"line {line}: {e}") from e


def parse_chart_file(text: str) -> ChartDocument:
    """Parse chart-file text.

    Raises:
        ExpressionError: With the line number of the first malformed entry
    """
    fields: dict[str, object] = {}
    metric: dict[tuple[int, int], str] = {}
    metric_lines: dict[tuple[int, int], int] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, value = content.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ExpressionError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        if key in lines:
            raise ExpressionError(f"line {number}: {key} already set on line {lines[key]}")
        lines[key] = number

        match = _METRIC_KEY.match(key)
        if match:
            i, j = int(match.group(1)), int(match.group(2))
            slot = (min(i, j), max(i, j))
            if slot in metric and metric[slot] != value:
                raise ExpressionError(
                    f"line {number}: metric[{i}][{j}] disagrees with its symmetric entry"
                )
            metric[slot] = value
            metric_lines[slot] = number
            continue
        if key not in _SCALAR_KEYS:
            raise ExpressionError(f"line {number}: unknown key {key!r}")

        if key == "coordinates":
            fields["coordinates"] = value.split()
        elif key == "constants":
            constants = {}
            for item in value.split():
                name, _, number_text = item.partition("=")
                try:
                    constants[name] = float(number_text)
                except ValueError as e:
                    raise ExpressionError(f"line {number}: bad constant {item!r}") from e
            fields["constants"] = constants
        elif key in ("domain.lower", "domain.upper", "anchor"):
            fields[key.removeprefix("domain.")] = _numbers(value, number, key)
        elif key == "product.flat":
            fields["product_flat"] = [int(x) for x in _numbers(value, number, key)]
        elif key == "quadrature.periodic":
            fields["quadrature_periodic"] = _booleans(value, number, key)
        elif key in ("domain.margin", "lambda", "Lambda", "product.volume", "quadrature.volume"):
            parsed = _numbers(value, number, key)
            if len(parsed) != 1:
                raise ExpressionError(f"line {number}: {key} expects one number")
            name = {
                "domain.margin": "margin",
                "lambda": "lam",
                "product.volume": "product_volume",
                "quadrature.volume": "quadrature_volume",
            }.get(key, key)
            fields[name] = parsed[0]
        else:
            fields[key] = value

    for required in ("coordinates", "domain.lower", "domain.upper"):
        if required not in lines:
            raise ExpressionError(f"chart file is missing {required}")
    coordinates = list(fields["coordinates"])  # type: ignore[call-overload]
    constants = dict(fields.get("constants", {}))  # type: ignore[call-overload]
    for slot, value in metric.items():
        line = metric_lines[slot]
        if slot[1] >= len(coordinates):
            raise ExpressionError(
                f"line {line}: metric index out of range for {len(coordinates)} coordinates"
            )
        _check_expression(value, coordinates, constants, line)
    if "potential" in fields:
        _check_expression(str(fields["potential"]), coordinates, constants, lines["potential"])
    if "q" in fields:
        try:
            QSpec.from_text(str(fields["q"]))
        except ExpressionError as e:
            raise ExpressionError(f"line {lines['q']}: {e}") from e
    try:
        document = ChartDocument(metric=metric, **fields)  # type: ignore[arg-type]
    except ValidationError as e:
        raise ExpressionError(f"invalid chart file: {e}") from e
    logger.debug("Parsed chart file %r with %d metric entries", document.label, len(metric))
    return document


def load_chart_file(path: str | Path) -> ChartDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ExpressionError(f"Cannot read chart file {path}: {e}") from e
    return parse_chart_file(text)


def _format(values: list[float]) -> str:
    return " ".join(repr(float(v)) for v in values)


def export_chart(chart: Chart, soliton: SolitonData | None = None) -> str:
    """Chart-file text reproducing ``chart`` (and ``soliton``) up to float printing.

    Closed-form distances and minimizing lengths have no file representation and are dropped.
    """
    if not isinstance(chart, ExpressionChart):
        raise ExpressionError(f"{chart!r} has no closed-form metric to export")
    lines = [
        f"label = {chart.label}",
        f"coordinates = {' '.join(chart.coordinates)}",
        f"domain.lower = {_format(chart.domain.lower)}",
        f"domain.upper = {_format(chart.domain.upper)}",
        f"domain.margin = {chart.domain.margin!r}",
        f"anchor = {_format(list(chart.anchor))}",
    ]
    for i, row in enumerate(chart.metric_expressions):
        for j, expr in enumerate(row[i:], start=i):
            if expr != 0:
                lines.append(f"metric[{i}][{j}] = {sympy.sstr(expr)}")
    if chart.product is not None:
        lines.append(f"product.flat = {' '.join(str(a) for a in chart.product.flat_axes)}")
        lines.append(f"product.volume = {chart.product.factor_volume!r}")
    if chart.quadrature is not None:
        periodic = " ".join(str(p).lower() for p in chart.quadrature.periodic)
        lines.append(f"quadrature.periodic = {periodic}")
        lines.append(f"quadrature.volume = {chart.quadrature.total_volume!r}")
    if soliton is not None:
        expr = soliton.potential.expression
        if expr is None:
            raise ExpressionError(f"potential of {soliton.label!r} has no closed form")
        potential = sympy.sstr(expr + soliton.normalization_constant)
        lines += [
            f"potential = {potential}",
            f"lambda = {soliton.lam!r}",
            f"q = {soliton.qspec.to_text()}",
        ]
        if soliton.Lambda is not None:
            lines.append(f"Lambda = {soliton.Lambda!r}")
    return "\n".join(lines) + "\n"
