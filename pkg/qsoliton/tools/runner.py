"""
Check Runner
============

Runs the requested checks on one target in execution order and assembles the RunReport.

Targets are library examples (compared against their expected-verdict tables) or chart files
(every non-inapplicable verdict must pass). Intermediate products shared between checks, the
probe geodesics, the sublevel profile and the constant c1 of the lower-bound probe, are
computed once per run.

Usage:
    config = RunConfig(target="cylinder_shrinker", params={"k": 2}, checks=["coarea"])
    outcome = run(config)
    outcome.report.status
    write_artifacts(outcome, config)
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from qsoliton import __version__
from qsoliton.config import Settings, settings as default_settings
from qsoliton.errors import (
    CriticalPointError,
    ExpressionError,
    InapplicableCheck,
    UnknownCheckError,
)
from qsoliton.manifolds import build
from qsoliton.models import CheckReport, RunConfig, RunReport, Verdict, plain
from qsoliton.tools import geodesics, verify, volume
from qsoliton.tools.geodesics import GeodesicTrace
from qsoliton.tools.verify import SampleSet, SolitonData
from qsoliton.tools.volume import SublevelProfile
from qsoliton.utils import export
from qsoliton.utils.chartfile import ChartDocument, load_chart_file

logger = logging.getLogger(__name__)

SHAPE_PROBE_LENGTH = 4.0


@dataclass
class RunContext:
    """Soliton under test plus the products shared between checks."""

    soliton: SolitonData
    settings: Settings
    config: RunConfig
    samples: SampleSet
    shape_traces: list[GeodesicTrace] | None = None
    long_traces: list[GeodesicTrace] | None = None
    profile: SublevelProfile | None = None
    profile_error: InapplicableCheck | None = None
    reports: dict[str, CheckReport] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.soliton.chart.exact

    def traces(self, length: float) -> list[GeodesicTrace]:
        if length == SHAPE_PROBE_LENGTH:
            if self.shape_traces is None:
                self.shape_traces = geodesics.probe_traces(self.soliton, self.settings, length)
            return self.shape_traces
        if self.long_traces is None:
            self.long_traces = geodesics.probe_traces(self.soliton, self.settings, length)
        return self.long_traces

    def sublevel_profile(self) -> SublevelProfile:
        if self.profile_error is not None:
            raise self.profile_error
        if self.profile is None:
            try:
                S = self.soliton
                if self.config.normalize:
                    S, _ = volume.normalized_soliton(S, self.settings, self.samples)
                self.profile = volume.build_profile(
                    S, count=self.config.radii, rmax=self.config.rmax, settings=self.settings
                )
            except InapplicableCheck as e:
                self.profile_error = e
                raise
        return self.profile

    def c1(self) -> float | None:
        report = self.reports.get("lower_bound") or _lower_bound(self)
        self.reports.setdefault("lower_bound", report)
        if not report.passed:
            return None
        return report.details.get("c1")


@dataclass
class RunOutcome:
    report: RunReport
    context: RunContext


def _lower_bound(ctx: RunContext) -> CheckReport:
    S = ctx.soliton
    traces = None
    if S.lam > 0 and not S.chart.compact:
        traces = ctx.traces(ctx.settings.geodesic_length)
    return geodesics.lower_bound_probe(S, traces, ctx.settings)


def _shape_operator(ctx: RunContext) -> CheckReport:
    S = ctx.soliton
    return geodesics.shape_operator_check(
        S, ctx.traces(SHAPE_PROBE_LENGTH), S.Lambda, ctx.settings
    )


def _omori_yau(ctx: RunContext) -> CheckReport:
    return volume.omori_yau_conditions(ctx.soliton, ctx.c1(), settings=ctx.settings)


CheckRunner = Callable[[RunContext], CheckReport]

CHECKS: dict[str, CheckRunner] = {
    "jet_consistency": lambda c: verify.jet_consistency_check(c.soliton, c.samples, c.settings),
    "bianchi": lambda c: verify.bianchi_check(c.soliton, c.samples, c.settings),
    "soliton_residual": lambda c: verify.soliton_residual(c.soliton, c.samples, c.settings),
    "hamilton_scalar": lambda c: verify.hamilton_scalar(c.soliton, c.samples, c.settings)[1],
    "hamilton_tensor": lambda c: verify.hamilton_tensor(c.soliton, c.samples, c.settings),
    "f_lambda": lambda c: verify.f_lambda_check(
        c.soliton, c.soliton.Lambda, c.samples, c.settings
    ),
    "laplacian_trace": lambda c: verify.laplacian_trace_check(c.soliton, c.samples, c.settings),
    "rigidity": lambda c: verify.rigidity_check(c.soliton, c.samples, c.settings),
    "rigid_conditions": lambda c: verify.rigid_conditions_check(
        c.soliton, c.soliton.Lambda, c.samples, c.settings
    ),
    "trace_bounds": lambda c: verify.trace_bounds_check(c.soliton, c.samples, c.settings),
    "flatness_hypotheses": lambda c: verify.flatness_hypotheses(c.soliton, c.samples, c.settings),
    "compact_integral": lambda c: verify.compact_integral_identity(
        c.soliton, c.samples, c.settings
    ),
    "evolution_identities": lambda c: verify.evolution_identities(
        c.soliton, c.samples, c.settings
    ),
    "shape_operator": _shape_operator,
    "growth_bounds": lambda c: geodesics.growth_bounds(c.soliton, settings=c.settings),
    "lower_bound": _lower_bound,
    "coarea": lambda c: volume.coarea_identity_check(c.sublevel_profile(), c.settings, c.exact),
    "upper_volume": lambda c: volume.upper_volume_check(
        c.sublevel_profile(), c.settings, exact=c.exact
    ),
    "lower_volume": lambda c: volume.lower_volume_check(
        c.sublevel_profile(), c.config.delta, c.settings, c.exact
    ),
    "omori_yau": _omori_yau,
}


def effective_settings(config: RunConfig, base: Settings | None = None) -> Settings:
    """Settings with the run's sample, seed and tolerance overrides applied."""
    update: dict[str, Any] = {}
    if config.samples is not None:
        update["samples"] = config.samples
    if config.seed is not None:
        update["seed"] = config.seed
    if config.tolerance is not None:
        update["tolerance_exact"] = update["tolerance_fd"] = config.tolerance
    return (base or default_settings).model_copy(update=update)


def run_check(name: str, ctx: RunContext) -> CheckReport:
    """One check, with failed preconditions turned into an inapplicable report."""
    if name in ctx.reports:
        return ctx.reports[name]
    if name not in CHECKS:
        raise UnknownCheckError(f"Unknown check {name!r}; available: {', '.join(CHECKS)}")
    tolerance = ctx.settings.tolerance(ctx.exact)
    regime = ctx.soliton.regime
    try:
        report = CHECKS[name](ctx)
    except InapplicableCheck as e:
        report = CheckReport.inapplicable(name, e.reason, tolerance, regime, details=e.details)
    except CriticalPointError as e:
        report = CheckReport.inapplicable(name, f"critical point of f: {e}", tolerance, regime)
    ctx.reports[name] = report
    logger.info("%s: %s (residual %s)", name, report.verdict.value, report.residual_max)
    return report


def _load_target(
    config: RunConfig, document: ChartDocument | None
) -> tuple[SolitonData, str, dict[str, Any], dict[str, Verdict]]:
    if config.target is not None:
        example = build(config.target, config.params)
        return example.soliton, config.target, example.spec.params, example.spec.expected
    if document is None:
        document = load_chart_file(str(config.chart_file))
    _, soliton = document.build()
    if soliton is None:
        raise ExpressionError(f"{config.chart_file} declares no potential and lambda")
    return soliton, str(config.chart_file), {}, {}


def run(
    config: RunConfig,
    settings: Settings | None = None,
    document: ChartDocument | None = None,
) -> RunOutcome:
    """Execute ``config``; ``document`` replaces reading ``config.chart_file`` from disk.

    Raises:
        ValueError: On unknown targets, bad parameters or malformed chart files
        NumericalFailure: On non-finite residuals or failed integration
    """
    effective = effective_settings(config, settings)
    soliton, target, params, table = _load_target(config, document)
    samples = SampleSet(soliton.chart, effective.samples, effective.seed, effective.workers)
    ctx = RunContext(soliton, effective, config, samples)
    logger.info("Running %d checks on %s", len(config.checks), target)

    reports = [run_check(name, ctx) for name in config.checks]
    expected = {name: table[name] for name in config.checks if name in table}
    mismatches = []
    for report in reports:
        if report.verdict == Verdict.INAPPLICABLE:
            continue
        if config.target is not None:
            wanted = expected.get(report.check)
            if wanted is not None and wanted != report.verdict:
                mismatches.append(report.check)
        elif report.verdict != Verdict.PASS:
            mismatches.append(report.check)

    run_settings = {
        **effective.model_dump(exclude={"log_level"}),
        "radii": config.radii,
        "rmax": config.rmax,
        "delta": config.delta,
        "normalize": config.normalize,
    }
    report = RunReport(
        version=__version__,
        target=target,
        params=plain(params),
        settings=plain(run_settings),
        checks=reports,
        expected=expected,
        mismatches=mismatches,
        status="mismatch" if mismatches else "ok",
    )
    return RunOutcome(report, ctx)


def report_json(report: RunReport) -> str:
    """Deterministic JSON text: sorted keys, fixed separators."""
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_artifacts(outcome: RunOutcome, config: RunConfig) -> list[Path]:
    written = []
    if config.out_json:
        path = Path(config.out_json)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report_json(outcome.report), encoding="utf-8")
        written.append(path)
    if config.out_csv_dir:
        directory = Path(config.out_csv_dir)
        ctx = outcome.context
        written.append(export.write_checks_csv(outcome.report.checks, directory / "checks.csv"))
        if ctx.profile is not None:
            written.append(export.write_profile_csv(ctx.profile, directory / "profile.csv"))
        traces = (ctx.shape_traces or []) + (ctx.long_traces or [])
        if traces:
            written.append(export.write_traces_csv(traces, directory / "geodesics.csv"))
    logger.debug("Wrote %s", [str(p) for p in written])
    return written
