"""
CSV Export
==========

Flat CSV files for everything a run produces besides the JSON report. Column sets:

    checks.csv     check, verdict, regime, samples, residual_max, residual_mean,
                   residual_stddev, tolerance, C, c, Lambda
    profile.csv    r, V, dV_fd, dV_coarea, trace_integral, boundary_trace, G,
                   identity_lhs, identity_rhs, identity_residual, V_stderr
    geodesics.csv  geodesic, s, x0..x{n-1}, v0..v{n-1}
    ricatti.csv    s, phi, closed_form

Floats are written with repr precision so files are byte-identical for identical runs.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from qsoliton.models import CheckReport
from qsoliton.tools.geodesics import GeodesicTrace, RicattiTrace
from qsoliton.tools.volume import SublevelProfile

logger = logging.getLogger(__name__)

CHECK_COLUMNS = [
    "check",
    "verdict",
    "regime",
    "samples",
    "residual_max",
    "residual_mean",
    "residual_stddev",
    "tolerance",
    "C",
    "c",
    "Lambda",
]
PROFILE_COLUMNS = [
    "r",
    "V",
    "dV_fd",
    "dV_coarea",
    "trace_integral",
    "boundary_trace",
    "G",
    "identity_lhs",
    "identity_rhs",
    "identity_residual",
    "V_stderr",
]


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_rows(
    path: str | Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in columns})
            count += 1
    logger.debug("Wrote %d rows to %s", count, path)
    return path


def check_rows(reports: Iterable[CheckReport]) -> list[dict[str, Any]]:
    return [
        {
            "check": r.check,
            "verdict": r.verdict.value,
            "regime": r.regime.value,
            "samples": r.samples,
            "residual_max": r.residual_max,
            "residual_mean": r.residual_mean,
            "residual_stddev": r.residual_stddev,
            "tolerance": r.tolerance,
            "C": r.constants.C,
            "c": r.constants.c,
            "Lambda": r.constants.Lambda,
        }
        for r in reports
    ]


def profile_rows(profile: SublevelProfile) -> list[dict[str, Any]]:
    lhs, rhs = profile.identity_sides()
    stderr = profile.stderr if profile.stderr is not None else [None] * len(profile.radii)
    return [
        {
            "r": profile.radii[i],
            "V": profile.volumes[i],
            "dV_fd": profile.dvolume_fd[i],
            "dV_coarea": profile.dvolume_coarea[i],
            "trace_integral": profile.trace_integral[i],
            "boundary_trace": profile.boundary_trace[i],
            "G": profile.G[i],
            "identity_lhs": lhs[i],
            "identity_rhs": rhs[i],
            "identity_residual": abs(lhs[i] - rhs[i]),
            "V_stderr": stderr[i],
        }
        for i in range(len(profile.radii))
    ]


def trace_rows(traces: Sequence[GeodesicTrace]) -> tuple[list[str], list[dict[str, Any]]]:
    n = len(traces[0].start) if traces else 0
    columns = ["geodesic", "s"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
    rows = []
    for index, trace in enumerate(traces):
        for k in range(len(trace)):
            row: dict[str, Any] = {"geodesic": index, "s": trace.parameters[k]}
            row.update({f"x{i}": trace.points[k, i] for i in range(n)})
            row.update({f"v{i}": trace.velocities[k, i] for i in range(n)})
            rows.append(row)
    return columns, rows


def write_checks_csv(reports: Iterable[CheckReport], path: str | Path) -> Path:
    return write_rows(path, CHECK_COLUMNS, check_rows(reports))


def write_profile_csv(profile: SublevelProfile, path: str | Path) -> Path:
    return write_rows(path, PROFILE_COLUMNS, profile_rows(profile))


def write_traces_csv(traces: Sequence[GeodesicTrace], path: str | Path) -> Path:
    columns, rows = trace_rows(traces)
    return write_rows(path, columns, rows)


def write_ricatti_csv(trace: RicattiTrace, path: str | Path) -> Path:
    exact = trace.closed_form(trace.parameters)
    rows = [
        {"s": s, "phi": phi, "closed_form": ref}
        for s, phi, ref in zip(trace.parameters, trace.values, exact)
    ]
    return write_rows(path, ["s", "phi", "closed_form"], rows)
