"""
Data Models (Pydantic)
======================

Report, run-configuration and example records. Everything here serializes to the stable JSON
layout published in ``schemas/run-report.schema.json``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from enum import Enum
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from qsoliton.errors import NumericalFailure, UnknownCheckError

SCHEMA_VERSION = "1.0"

# Execution order: residual first, cutoff probe before the Omori-Yau suite.
CHECK_NAMES: tuple[str, ...] = (
    "jet_consistency",
    "bianchi",
    "soliton_residual",
    "hamilton_scalar",
    "hamilton_tensor",
    "f_lambda",
    "laplacian_trace",
    "rigidity",
    "rigid_conditions",
    "trace_bounds",
    "flatness_hypotheses",
    "compact_integral",
    "evolution_identities",
    "shape_operator",
    "growth_bounds",
    "lower_bound",
    "coarea",
    "upper_volume",
    "lower_volume",
    "omori_yau",
)


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INAPPLICABLE = "inapplicable"


class Regime(str, Enum):
    EXACT = "exact"
    FINITE_DIFFERENCE = "finite-difference"
    MONTE_CARLO = "monte-carlo"


class ReportConstants(BaseModel):
    """Constants a check determined: Hamilton C, rigidity c, and the Lambda it used."""

    C: float | None = None
    c: float | None = None
    Lambda: float | None = None


def plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class CheckReport(BaseModel):
    """Outcome of one check over a sample set."""

    check: str
    samples: int = Field(..., ge=0, description="Points (or radii, geodesics) evaluated")
    residual_max: float | None = None
    residual_mean: float | None = None
    residual_stddev: float | None = None
    tolerance: float = Field(..., gt=0)
    verdict: Verdict
    regime: Regime = Regime.EXACT
    constants: ReportConstants = Field(default_factory=ReportConstants)
    details: dict[str, Any] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)

    @field_validator("details", mode="before")
    @classmethod
    def jsonable_details(cls, v: Any) -> Any:
        return plain(v) if isinstance(v, Mapping) else v

    @model_validator(mode="after")
    def verdict_matches_residual(self) -> CheckReport:
        if self.verdict == Verdict.INAPPLICABLE:
            return self
        if self.residual_max is None:
            raise ValueError(f"{self.check}: a {self.verdict.value} verdict needs residual_max")
        expected = Verdict.PASS if self.residual_max <= self.tolerance else Verdict.FAIL
        if self.verdict != expected:
            raise ValueError(
                f"{self.check}: verdict {self.verdict.value} contradicts residual "
                f"{self.residual_max:.3e} at tolerance {self.tolerance:.1e}"
            )
        return self

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    @classmethod
    def from_residuals(
        cls,
        check: str,
        residuals: Iterable[float],
        tolerance: float,
        regime: Regime = Regime.EXACT,
        constants: ReportConstants | None = None,
        details: Mapping[str, Any] | None = None,
        notes: Iterable[str] = (),
    ) -> CheckReport:
        """Fold per-sample residuals (in sample order) into a report.

        An empty residual set means the check was vacuous and passes with residual 0.
        """
        values = np.abs(np.asarray(list(residuals), dtype=float))
        notes = list(notes)
        if values.size == 0:
            values = np.zeros(1)
            count = 0
            notes.append("no sample qualified; check is vacuous")
        else:
            count = int(values.size)
        if not np.all(np.isfinite(values)):
            raise NumericalFailure(f"{check}: non-finite residuals")
        residual_max = float(np.max(values))
        return cls(
            check=check,
            samples=count,
            residual_max=residual_max,
            residual_mean=float(np.mean(values)),
            residual_stddev=float(np.std(values)),
            tolerance=tolerance,
            verdict=Verdict.PASS if residual_max <= tolerance else Verdict.FAIL,
            regime=regime,
            constants=constants or ReportConstants(),
            details=dict(details or {}),
            notes=notes,
        )

    @classmethod
    def inapplicable(
        cls,
        check: str,
        reason: str,
        tolerance: float,
        regime: Regime = Regime.EXACT,
        details: Mapping[str, Any] | None = None,
        samples: int = 0,
        constants: ReportConstants | None = None,
    ) -> CheckReport:
        return cls(
            check=check,
            samples=samples,
            tolerance=tolerance,
            verdict=Verdict.INAPPLICABLE,
            regime=regime,
            constants=constants or ReportConstants(),
            details=dict(details or {}),
            notes=[reason],
        )


class RunConfig(BaseModel):
    """One invocation of the verifier."""

    target: str | None = Field(default=None, description="Example name")
    chart_file: str | None = Field(default=None, description="Declarative chart file path")
    params: dict[str, Any] = Field(default_factory=dict)
    checks: list[str] = Field(default_factory=lambda: ["all"])
    samples: int | None = Field(default=None, gt=0)
    seed: int | None = Field(default=None, ge=0)
    tolerance: float | None = Field(default=None, gt=0)
    radii: int = Field(default=64, ge=2, description="Radius grid size for volume checks")
    rmax: float | None = Field(default=None, gt=0)
    delta: float | None = Field(default=None, ge=0, description="Average trace bound")
    normalize: bool = Field(default=True, description="Shift f so the Hamilton constant is 0")
    out_json: str | None = None
    out_csv_dir: str | None = None

    @field_validator("checks")
    @classmethod
    def known_checks(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("At least one check must be requested")
        if "all" in v:
            return list(CHECK_NAMES)
        unknown = [name for name in v if name not in CHECK_NAMES]
        if unknown:
            raise UnknownCheckError(
                f"Unknown checks {unknown}; available: {', '.join(CHECK_NAMES)}"
            )
        return [name for name in CHECK_NAMES if name in v]

    @model_validator(mode="after")
    def one_target(self) -> RunConfig:
        if (self.target is None) == (self.chart_file is None):
            raise ValueError("Give exactly one of target or chart_file")
        return self


class RunReport(BaseModel):
    """Everything a run produced, in deterministic order."""

    schema_version: str = SCHEMA_VERSION
    version: str
    target: str
    params: dict[str, Any] = Field(default_factory=dict)
    settings: dict[str, Any] = Field(default_factory=dict)
    checks: list[CheckReport] = Field(default_factory=list)
    expected: dict[str, Verdict] = Field(default_factory=dict)
    mismatches: list[str] = Field(default_factory=list)
    status: Literal["ok", "mismatch"] = "ok"


class ExampleSpec(BaseModel):
    """Library entry: parameters, recipe and expected verdicts."""

    name: str
    description: str
    params: dict[str, Any] = Field(default_factory=dict)
    recipe: str = ""
    injectivity_bound: float | None = None
    expected: dict[str, Verdict] = Field(default_factory=dict)
