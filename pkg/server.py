#!/usr/bin/env python3
"""
qsoliton MCP Server
===================

Exposes the verification engine to MCP clients over stdio.

Features:
- Tools: list_examples, verify_example, verify_chart, ricatti
- Resources: the run-report JSON schema and every library example's record
- Prompt: review_report, a structured walk through a run report

Usage:
    # Run server
    python server.py

    # Register with an MCP client
    {
      "mcpServers": {
        "qsoliton": {
          "command": "python",
          "args": ["/path/to/server.py"]
        }
      }
    }

License: MIT
"""

import json
import logging
from pathlib import Path
from typing import Any, Literal

from fastmcp import FastMCP
from pydantic import BaseModel, Field

from qsoliton import __version__
from qsoliton.config import configure_logging
from qsoliton.errors import NumericalFailure
from qsoliton.manifolds import CATALOG, build, parameters
from qsoliton.models import RunConfig
from qsoliton.tools.geodesics import ricatti_evolve
from qsoliton.tools.runner import run
from qsoliton.utils.chartfile import parse_chart_file

logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).parent / "schemas" / "run-report.schema.json"

# Server-side cap; MCP clients share one process.
MAX_SAMPLES = 1024

# ============================================================================
# Initialize MCP Server
# ============================================================================

mcp = FastMCP(
    name="qsoliton",
    instructions=(
        "Verification engine for gradient q-solitons. Run checks on library examples or on "
        "chart files and read back structured reports with expected verdicts."
    ),
)

# ============================================================================
# Data Models (Pydantic)
# ============================================================================


class ExampleSummary(BaseModel):
    """One library example as listed by list_examples."""

    name: str
    description: str
    parameters: dict[str, Any] = Field(..., description="JSON schema of the parameters")


class RicattiSummary(BaseModel):
    """Outcome of one Ricatti comparison integration."""

    mode: Literal["equality", "inequality"]
    initial: float
    blow_up: bool
    blow_up_at: float | None = Field(None, description="Extrapolated blow-up parameter")
    closed_form_error: float = Field(..., description="Max relative error before blow-up")


def _run(config: RunConfig, **kwargs: Any) -> dict[str, Any]:
    outcome = run(config, **kwargs)
    return outcome.report.model_dump(mode="json")


def _limit(samples: int | None) -> int | None:
    if samples is not None and samples > MAX_SAMPLES:
        raise ValueError(f"samples must not exceed {MAX_SAMPLES}, got {samples}")
    return samples


# ============================================================================
# MCP Tools
# ============================================================================


@mcp.tool()
def list_examples() -> list[ExampleSummary]:
    """List the library examples with a short description and their parameter schema."""
    return [
        ExampleSummary(name=name, description=description, parameters=parameters(name))
        for name, (_, _, description) in CATALOG.items()
    ]


@mcp.tool()
def verify_example(
    name: str,
    params: dict[str, Any] | None = None,
    checks: list[str] | None = None,
    samples: int | None = None,
    seed: int | None = None,
) -> dict[str, Any]:
    """
    Run checks on a library example and compare against its expected verdicts.

    Args:
        name: Example name, e.g. "cylinder_shrinker"
        params: Example parameters, e.g. {"k": 2, "a": 1.0}
        checks: Check names; all checks when omitted
        samples: Sample points per check
        seed: Low-discrepancy seed

    Returns:
        The run report, or {"error": message} for invalid input
    """
    try:
        config = RunConfig(
            target=name,
            params=params or {},
            checks=checks or ["all"],
            samples=_limit(samples),
            seed=seed,
        )
        return _run(config)
    except NumericalFailure as e:
        return {"error": f"numerical failure: {e}"}
    except ValueError as e:
        return {"error": str(e)}


@mcp.tool()
def verify_chart(
    chart: str,
    checks: list[str] | None = None,
    samples: int | None = None,
    seed: int | None = None,
) -> dict[str, Any]:
    """
    Run checks on soliton data given in the declarative chart-file format.

    Args:
        chart: Chart-file text (coordinates, domain, metric, potential, lambda, q)
        checks: Check names; all checks when omitted
        samples: Sample points per check
        seed: Low-discrepancy seed

    Returns:
        The run report (every applicable check must pass), or {"error": message}
    """
    try:
        document = parse_chart_file(chart)
        config = RunConfig(
            chart_file=f"<{document.label}>",
            checks=checks or ["all"],
            samples=_limit(samples),
            seed=seed,
        )
        return _run(config, document=document)
    except NumericalFailure as e:
        return {"error": f"numerical failure: {e}"}
    except ValueError as e:
        return {"error": str(e)}


@mcp.tool()
def ricatti(
    phi0: float,
    mode: Literal["equality", "inequality"] = "equality",
    s_max: float = 1.0,
    n: int = 1,
    backward: bool = False,
) -> dict[str, Any]:
    """
    Integrate the Ricatti comparison equation phi' = -phi^2 (or -phi^2 / n) from phi0.

    Negative phi0 blows up forward at s = 1/|phi0| (n/|phi0| for the inequality mode).
    """
    try:
        trace = ricatti_evolve(phi0, mode=mode, s_max=s_max, n=n, backward=backward)
    except ValueError as e:
        return {"error": str(e)}
    return RicattiSummary(
        mode=trace.mode,
        initial=trace.initial,
        blow_up=trace.blow_up,
        blow_up_at=trace.blow_up_at,
        closed_form_error=trace.closed_form_error,
    ).model_dump()


# ============================================================================
# MCP Resources
# ============================================================================


@mcp.resource("qsoliton://schema/run-report")
def get_run_report_schema() -> str:
    """JSON schema every run report validates against."""
    return SCHEMA_PATH.read_text(encoding="utf-8")


@mcp.resource("qsoliton://examples/{name}")
def get_example(name: str) -> str:
    """Record of one example with default parameters: recipe and expected verdicts."""
    try:
        spec = build(name).spec
    except ValueError as e:
        return json.dumps({"error": str(e)})
    return spec.model_dump_json(indent=2)


# ============================================================================
# MCP Prompts
# ============================================================================


@mcp.prompt()
def review_report(report: str) -> str:
    """Structured review of a run report."""
    return f"""Review this qsoliton run report.

## Report
{report}

## Review Steps
1. **Status**: Is the status "ok"? List every check in "mismatches".
2. **Failures**: For each failing check, compare residual_max with tolerance.
3. **Inapplicable checks**: Read the notes; say which precondition failed.
4. **Constants**: Report the Hamilton constant C, the rigidity constant c and Lambda.
5. **Regime**: Flag checks decided by finite differences or Monte Carlo.

Conclude with whether the data behaves like a gradient soliton and which identities fail."""


# ============================================================================
# Run Server
# ============================================================================

if __name__ == "__main__":
    configure_logging()
    logger.info("Starting qsoliton MCP server %s", __version__)
    mcp.run(transport="stdio")
