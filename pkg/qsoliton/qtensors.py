"""
q-Registry
==========

Flow tensors q for the q-flow dg/dt = q, with their duals, traces and norms.

Kinds:
    zero                 q = 0
    ricci                q = -2 Ric
    bourguignon rho=r    q = -2 (Ric - r R g)
    bach                 q = Bach tensor (dimension 4 only)
    custom { ... }       q given by component expressions

Usage:
    spec = QSpec.from_text("bourguignon rho=0.25")
    fields = instantiate(spec, chart)
    geometry = LocalGeometry(chart, p, order=fields.q.cost + 1)
    geometry.field(fields.q)
"""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, model_validator

from qsoliton.charts import Chart, ScalarField, TensorField
from qsoliton.errors import DimensionError, ExpressionError
from qsoliton.geometry import LocalGeometry
from qsoliton.jets import Jet

logger = logging.getLogger(__name__)

_COMPONENT = re.compile(r"^\s*q\s*\[\s*(\d+)\s*\]\s*\[\s*(\d+)\s*\]\s*=\s*(.+?)\s*$")


class QKind(str, Enum):
    ZERO = "zero"
    RICCI = "ricci"
    BOURGUIGNON = "bourguignon"
    BACH = "bach"
    CUSTOM = "custom"


class QSpec(BaseModel):
    """Which flow tensor to use."""

    kind: QKind
    rho: float = Field(default=0.0, description="Bourguignon parameter")
    components: dict[str, str] = Field(
        default_factory=dict, description='Custom components keyed "ij" (0-based)'
    )

    @model_validator(mode="after")
    def check_kind(self) -> QSpec:
        if self.kind == QKind.CUSTOM and not self.components:
            raise ValueError("custom q needs at least one component")
        if self.kind != QKind.CUSTOM and self.components:
            raise ValueError(f"components are only allowed for custom q, not {self.kind.value}")
        for key in self.components:
            if not re.fullmatch(r"\d\d", key):
                raise ValueError(f"Component key {key!r} must be two digits, e.g. '01'")
        return self

    def to_text(self) -> str:
        if self.kind == QKind.BOURGUIGNON:
            return f"bourguignon rho={self.rho!r}"
        if self.kind == QKind.CUSTOM:
            body = "; ".join(
                f"q[{key[0]}][{key[1]}] = {expr}" for key, expr in sorted(self.components.items())
            )
            return f"custom {{ {body} }}"
        return self.kind.value

    @classmethod
    def from_text(cls, text: str) -> QSpec:
        """Parse ``zero``, ``ricci``, ``bourguignon rho=0.25``, ``bach`` or ``custom { ... }``."""
        text = text.strip()
        if text.startswith("custom"):
            body = text[len("custom") :].strip()
            if not (body.startswith("{") and body.endswith("}")):
                raise ExpressionError(f"custom q needs a braced body: {text!r}")
            components = {}
            for entry in re.split(r"[;\n]", body[1:-1]):
                if not entry.strip():
                    continue
                match = _COMPONENT.match(entry)
                if match is None:
                    raise ExpressionError(f"Bad custom q component: {entry.strip()!r}")
                components[f"{match.group(1)}{match.group(2)}"] = match.group(3)
            return cls(kind=QKind.CUSTOM, components=components)

        words = text.split()
        if not words:
            raise ExpressionError("Empty q text")
        try:
            kind = QKind(words[0])
        except ValueError as e:
            raise ExpressionError(f"Unknown q kind {words[0]!r}") from e
        rho = 0.0
        for option in words[1:]:
            name, _, value = option.partition("=")
            if name != "rho" or kind != QKind.BOURGUIGNON:
                raise ExpressionError(f"Unexpected option {option!r} for q = {kind.value}")
            try:
                rho = float(value)
            except ValueError as e:
                raise ExpressionError(f"rho must be a number, got {value!r}") from e
        return cls(kind=kind, rho=rho)


@dataclass(frozen=True)
class QFields:
    """q with its (1,1) dual, trace and squared norm."""

    spec: QSpec
    q: TensorField
    Q: TensorField
    trace: ScalarField
    norm2: ScalarField

    @property
    def cost(self) -> int:
        return self.q.cost


def _q_field(spec: QSpec, chart: Chart) -> TensorField:
    if spec.kind == QKind.ZERO:
        n = chart.dim
        return TensorField(
            "zero", lambda geometry: Jet.constant(np.zeros((n, n)), geometry.g.space), symbol="q"
        )
    if spec.kind == QKind.RICCI:
        return TensorField("ricci", lambda geometry: geometry.ricci * -2.0, cost=2, symbol="q")
    if spec.kind == QKind.BOURGUIGNON:
        rho = spec.rho
        return TensorField(
            f"bourguignon(rho={rho:g})",
            lambda geometry: (geometry.ricci - geometry.g * geometry.scalar * rho) * -2.0,
            cost=2,
            symbol="q",
        )
    if spec.kind == QKind.BACH:
        if chart.dim != 4:
            raise DimensionError(f"q = bach needs a 4-dimensional chart, got {chart.dim}")
        return TensorField("bach", lambda geometry: geometry.bach, cost=4, symbol="q")
    table = {(int(key[0]), int(key[1])): expr for key, expr in spec.components.items()}
    return TensorField.from_expressions("custom", table, chart)


def instantiate(spec: QSpec, chart: Chart) -> QFields:
    """Build q, Q = g^-1 q, tr(q) and |q|^2 for ``chart``."""
    q = _q_field(spec, chart)
    dual = TensorField(
        f"{q.name}-dual",
        lambda geometry: geometry.raise_first(geometry.field(q)),
        cost=q.cost,
        valence=(1, 1),
        symmetric=False,
        symbol="Q",
    )
    trace = ScalarField.derived(
        "tr(q)", lambda geometry: geometry.trace(geometry.field(q)), symbol="tr(q)"
    )
    norm2 = ScalarField.derived(
        "|q|^2", lambda geometry: geometry.norm2(geometry.field(q)), symbol="|q|^2"
    )
    logger.debug("Instantiated q = %s on %s (cost %d)", spec.to_text(), chart.label, q.cost)
    return QFields(spec=spec, q=q, Q=dual, trace=trace, norm2=norm2)


def bach_tensor(chart: Chart, p: Sequence[float]) -> np.ndarray:
    """Bach tensor components at ``p`` of a 4-dimensional chart."""
    if chart.dim != 4:
        raise DimensionError(f"bach_tensor needs a 4-dimensional chart, got {chart.dim}")
    return LocalGeometry(chart, p, order=4).bach.value
