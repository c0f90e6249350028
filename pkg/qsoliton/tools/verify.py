"""
Soliton Verification Checks
===========================

Pointwise residual checks for the gradient q-soliton equation Hess f = lambda g + q/2 and the
identities that follow from it. Every check folds per-sample residuals (in sample order) into a
CheckReport; preconditions that fail produce an ``inapplicable`` report instead of a verdict.

Usage:
    S = SolitonData(chart, potential, lam=0.5, qspec=QSpec(kind="ricci"))
    samples = SampleSet(chart, count=64, seed=1)
    soliton_residual(S, samples=samples).verdict
    H, report = hamilton_scalar(S, samples=samples)
"""

from __future__ import annotations

import functools
import itertools
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, TypeVar

import numpy as np

from qsoliton.charts import Chart, ScalarField
from qsoliton.config import Settings, settings as default_settings
from qsoliton.errors import CriticalPointError, DimensionError
from qsoliton.geometry import LocalGeometry, orthogonal_complement
from qsoliton.jets import Jet
from qsoliton.models import CheckReport, Regime, ReportConstants
from qsoliton.qtensors import QFields, QKind, QSpec, instantiate
from qsoliton.utils.sampling import sample_box

logger = logging.getLogger(__name__)

T = TypeVar("T")

CRITICAL_GRADIENT = 1e-6


# ============================================================================
# Soliton data and sample sets
# ============================================================================


@dataclass
class SolitonData:
    """A chart with potential f, constant lambda and a flow tensor q: the object under test."""

    chart: Chart
    potential: ScalarField
    lam: float
    qspec: QSpec
    Lambda: float | None = None
    normalization_constant: float = 0.0
    label: str = ""

    @functools.cached_property
    def q(self) -> QFields:
        return instantiate(self.qspec, self.chart)

    @functools.cached_property
    def f(self) -> ScalarField:
        return self.potential.shifted(self.normalization_constant)

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def classification(self) -> str:
        if self.lam > 0:
            return "shrinking"
        if self.lam < 0:
            return "expanding"
        return "steady"

    @property
    def regime(self) -> Regime:
        return Regime.EXACT if self.chart.exact else Regime.FINITE_DIFFERENCE

    @property
    def Lambda_or_lambda(self) -> float:
        return self.Lambda if self.Lambda is not None else self.lam

    def order_for(self, metric: int, q: int = 0) -> int:
        """Metric jet order needing ``metric`` metric derivatives and ``q`` derivatives of q."""
        return max(metric, self.q.cost + q, 0)

    def shifted(self, a: float) -> SolitonData:
        """Same data with ``a`` added to the normalization constant (q is shared)."""
        if a == 0:
            return self
        other = replace(self, normalization_constant=self.normalization_constant + a)
        other.__dict__["q"] = self.q
        return other

    def normalized(self, C: float) -> SolitonData:
        """Shift f so that the Hamilton constant |grad f|^2 - tr(q)/2 - 2 lambda f becomes 0."""
        if self.lam == 0:
            raise ValueError("Cannot normalize the Hamilton constant of a steady soliton")
        return self.shifted(C / (2 * self.lam))


class SampleSet:
    """Low-discrepancy sample points of a chart with a per-point geometry cache."""

    def __init__(self, chart: Chart, count: int, seed: int, workers: int = 1) -> None:
        self.chart = chart
        self.seed = seed
        self.workers = workers
        lower, upper = chart.domain.sampling_box()
        self.points = sample_box(lower, upper, count, seed)
        self._cache: dict[int, LocalGeometry] = {}
        self._anchor: LocalGeometry | None = None

    def __len__(self) -> int:
        return len(self.points)

    def geometry(self, index: int, order: int) -> LocalGeometry:
        cached = self._cache.get(index)
        if cached is None or cached.order < order:
            cached = LocalGeometry(self.chart, self.points[index], order)
            self._cache[index] = cached
        return cached

    def anchor(self, order: int) -> LocalGeometry:
        if self._anchor is None or self._anchor.order < order:
            self._anchor = LocalGeometry(self.chart, self.chart.anchor, order)
        return self._anchor

    def map(self, fn: Callable[[LocalGeometry], T], order: int) -> list[T]:
        """Apply ``fn`` to every sample geometry; results keep sample order."""
        logger.debug("Evaluating %d samples at metric order %d", len(self), order)
        if self.workers <= 1:
            return [fn(self.geometry(i, order)) for i in range(len(self))]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(lambda i: fn(self.geometry(i, order)), range(len(self))))


def _prepare(
    S: SolitonData, samples: SampleSet | None, settings: Settings | None
) -> tuple[SampleSet, Settings, float]:
    settings = settings or default_settings
    if samples is None:
        samples = SampleSet(S.chart, settings.samples, settings.seed, settings.workers)
    return samples, settings, settings.tolerance(S.chart.exact)


# ============================================================================
# Pointwise helpers
# ============================================================================


def _value(jet: Jet) -> float:
    return float(jet.value)


def _covector_norm(geometry: LocalGeometry, covector: Jet) -> float:
    return float(np.sqrt(max(_value(geometry.covector_inner(covector, covector)), 0.0)))


def _tensor_norm(geometry: LocalGeometry, tensor: Jet) -> float:
    return float(np.sqrt(max(_value(geometry.norm2(tensor)), 0.0)))


def _hamilton_tensor_residual(S: SolitonData, geometry: LocalGeometry) -> float:
    """|Q(grad f) - grad tr(q)/2| at the geometry's point."""
    df = geometry.scalar_field(S.f).grad()
    q = geometry.field(S.q.q)
    residual = geometry.apply_dual(q, df) - geometry.scalar_field(S.q.trace).grad() * 0.5
    return _covector_norm(geometry, residual)


def _hamilton_tensor_precondition(
    S: SolitonData, samples: SampleSet, tolerance: float
) -> float | None:
    """Max residual of the Hamilton-type identity, or None when it holds."""
    residuals = samples.map(
        lambda geometry: _hamilton_tensor_residual(S, geometry), S.order_for(1, q=1)
    )
    worst = max(residuals, default=0.0)
    return worst if worst > tolerance else None


def radial_curvature_norm(geometry: LocalGeometry, f: Jet) -> float:
    """Largest |R(X, grad f)grad f| over a g-orthonormal frame X orthogonal to grad f."""
    g = geometry.g.value
    gradient = geometry.ginv.value @ f.grad().value
    if np.sqrt(max(gradient @ g @ gradient, 0.0)) <= CRITICAL_GRADIENT:
        raise CriticalPointError(f"grad f vanishes at {geometry.point.tolist()}")
    worst = 0.0
    for X in orthogonal_complement(g, gradient).T:
        v = geometry.radial_curvature(f, X)
        worst = max(worst, float(np.sqrt(max(v @ g @ v, 0.0))))
    return worst


def _constancy(values: Sequence[float], anchor_value: float) -> np.ndarray:
    return np.abs(np.asarray(values, dtype=float) - anchor_value)


# ============================================================================
# Jet and curvature consistency
# ============================================================================


def jet_consistency_check(
    S: SolitonData,
    samples: SampleSet | None = None,
    settings: Settings | None = None,
    step: float = 1e-4,
    max_points: int = 16,
) -> CheckReport:
    """Compare jet partials of g, f and q with central differences of their values."""
    samples, settings, _ = _prepare(S, samples, settings)
    chart = S.chart
    tolerance = 1e-6 if chart.exact else settings.tolerance_fd
    n = chart.dim
    q_second = S.q.cost <= 2
    inside = [p for p in samples.points if chart.domain.contains(p, slack=-3 * step)]
    points = inside[:max_points]

    def q_values(p: np.ndarray) -> np.ndarray:
        return LocalGeometry(chart, p, S.q.cost).field(S.q.q).value

    def f_value(p: np.ndarray) -> np.ndarray:
        return np.asarray(S.f.local_jet(p, 0).value)

    def compare(
        jet: Jet, fn: Callable[[np.ndarray], np.ndarray], p: np.ndarray, second: bool
    ) -> float:
        scale = max(1.0, float(np.max(np.abs(jet.value))))
        worst = 0.0
        for i in range(n):
            e_i = np.eye(n)[i] * step
            fd = (fn(p + e_i) - fn(p - e_i)) / (2 * step)
            alpha = tuple(int(k == i) for k in range(n))
            worst = max(worst, float(np.max(np.abs(jet.derivative(alpha) - fd))) / scale)
        if not second:
            return worst
        for i, j in itertools.combinations_with_replacement(range(n), 2):
            e_i, e_j = np.eye(n)[i] * step, np.eye(n)[j] * step
            corners = fn(p + e_i + e_j) - fn(p + e_i - e_j) - fn(p - e_i + e_j)
            fd = (corners + fn(p - e_i - e_j)) / (4 * step * step)
            alpha = tuple((k == i) + (k == j) for k in range(n))
            worst = max(worst, float(np.max(np.abs(jet.derivative(alpha) - fd))) / scale)
        return worst

    residuals, parts = [], {"metric": 0.0, "potential": 0.0, "q": 0.0}
    for p in points:
        geometry = LocalGeometry(chart, p, S.q.cost + (2 if q_second else 1))
        metric = compare(chart.metric_jet(p, 2), chart.metric_values, p, True)
        potential = compare(S.f.local_jet(p, 2), f_value, p, True)
        q_jet = geometry.field(S.q.q)
        flow = compare(q_jet, q_values, p, q_second)
        parts = {
            "metric": max(parts["metric"], metric),
            "potential": max(parts["potential"], potential),
            "q": max(parts["q"], flow),
        }
        residuals.append(max(metric, potential, flow))

    notes = [] if q_second else ["q compared through first partials only"]
    return CheckReport.from_residuals(
        "jet_consistency",
        residuals,
        tolerance,
        S.regime,
        details={"step": step, "max_relative_error": parts},
        notes=notes,
    )


def bianchi_check(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """First Bianchi identity and contracted second Bianchi identity div Ric = dR/2."""
    samples, settings, tolerance = _prepare(S, samples, settings)

    def evaluate(geometry: LocalGeometry) -> tuple[float, float]:
        riemann = geometry.riemann.value
        cyclic = (
            riemann
            + np.einsum("lijk->ljki", riemann)
            + np.einsum("lijk->lkij", riemann)
        )
        scale = max(1.0, float(np.max(np.abs(riemann))))
        first = float(np.max(np.abs(cyclic))) / scale
        contracted = geometry.divergence_02(geometry.ricci) - geometry.scalar.grad() * 0.5
        return first, _covector_norm(geometry, contracted) / scale

    rows = samples.map(evaluate, 3)
    first = [r[0] for r in rows]
    second = [r[1] for r in rows]
    return CheckReport.from_residuals(
        "bianchi",
        [max(a, b) for a, b in rows],
        tolerance,
        S.regime,
        details={"first_bianchi_max": max(first), "contracted_bianchi_max": max(second)},
    )


# ============================================================================
# Soliton equation and Hamilton identities
# ============================================================================


def soliton_residual(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """g-norm of Hess f - lambda g - q/2, with the traced residual as a detail."""
    samples, settings, tolerance = _prepare(S, samples, settings)
    n = S.dim

    def evaluate(geometry: LocalGeometry) -> tuple[float, float]:
        f = geometry.scalar_field(S.f)
        q = geometry.field(S.q.q)
        residual = geometry.hessian(f) - geometry.g * S.lam - q * 0.5
        tracing = geometry.laplacian(f) - S.lam * n - geometry.scalar_field(S.q.trace) * 0.5
        return _tensor_norm(geometry, residual), abs(_value(tracing))

    rows = samples.map(evaluate, S.order_for(1))
    return CheckReport.from_residuals(
        "soliton_residual",
        [r[0] for r in rows],
        tolerance,
        S.regime,
        details={"tracing_max": max(r[1] for r in rows), "classification": S.classification},
    )


def hamilton_function(S: SolitonData) -> ScalarField:
    """H = |grad f|^2 - tr(q)/2 - 2 lambda f."""

    def build(geometry: LocalGeometry) -> Jet:
        f = geometry.scalar_field(S.f)
        df = f.grad()
        return (
            geometry.covector_inner(df, df)
            - geometry.scalar_field(S.q.trace) * 0.5
            - f * (2 * S.lam)
        )

    return ScalarField.derived("H", build, symbol="H")


def hamilton_scalar(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> tuple[ScalarField, CheckReport]:
    """Constancy of H over the samples relative to its value at the anchor."""
    samples, settings, tolerance = _prepare(S, samples, settings)
    H = hamilton_function(S)
    order = S.order_for(0)
    C = _value(samples.anchor(order).scalar_field(H))
    values = samples.map(lambda geometry: _value(geometry.scalar_field(H)), order)
    report = CheckReport.from_residuals(
        "hamilton_scalar",
        _constancy(values, C),
        tolerance,
        S.regime,
        details={"anchor_value": C, "min": min(values), "max": max(values)},
    )
    if report.passed:
        report.constants.C = C
    return H, report


def hamilton_tensor(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """g-norm of Q(grad f) - grad tr(q)/2."""
    samples, settings, tolerance = _prepare(S, samples, settings)

    def evaluate(geometry: LocalGeometry) -> tuple[float, float]:
        df = geometry.scalar_field(S.f).grad()
        return _hamilton_tensor_residual(S, geometry), _covector_norm(geometry, df)

    rows = samples.map(evaluate, S.order_for(1, q=1))
    ratios = [r / g for r, g in rows if g > CRITICAL_GRADIENT]
    details: dict[str, Any] = {}
    if ratios:
        details = {"ratio_to_grad_f_min": min(ratios), "ratio_to_grad_f_max": max(ratios)}
    return CheckReport.from_residuals(
        "hamilton_tensor", [r[0] for r in rows], tolerance, S.regime, details=details
    )


def f_lambda_check(
    S: SolitonData,
    Lambda: float | None = None,
    samples: SampleSet | None = None,
    settings: Settings | None = None,
) -> CheckReport:
    """F_Lambda = |grad f|^2/2 - Lambda f is constant iff Q(grad f) = 2(Lambda - lambda) grad f.

    Both sides are evaluated; the report fails if either does and records whether the two
    sub-verdicts agree.
    """
    samples, settings, tolerance = _prepare(S, samples, settings)
    Lam = Lambda if Lambda is not None else S.Lambda_or_lambda
    order = S.order_for(0)

    def F(geometry: LocalGeometry) -> float:
        f = geometry.scalar_field(S.f)
        df = f.grad()
        return _value(geometry.covector_inner(df, df) * 0.5 - f * Lam)

    def dual(geometry: LocalGeometry) -> float:
        df = geometry.scalar_field(S.f).grad()
        q = geometry.field(S.q.q)
        return _covector_norm(geometry, geometry.apply_dual(q, df) - df * (2 * (Lam - S.lam)))

    anchor_value = F(samples.anchor(order))
    constancy = _constancy(samples.map(F, order), anchor_value)
    identity = np.asarray(samples.map(dual, order))
    constancy_pass = bool(np.max(constancy, initial=0.0) <= tolerance)
    identity_pass = bool(np.max(identity, initial=0.0) <= tolerance)
    return CheckReport.from_residuals(
        "f_lambda",
        np.maximum(constancy, identity),
        tolerance,
        S.regime,
        constants=ReportConstants(Lambda=Lam),
        details={
            "constancy_max": float(np.max(constancy, initial=0.0)),
            "dual_identity_max": float(np.max(identity, initial=0.0)),
            "constancy_verdict": "pass" if constancy_pass else "fail",
            "dual_identity_verdict": "pass" if identity_pass else "fail",
            "sub_verdicts_agree": constancy_pass == identity_pass,
            "anchor_value": anchor_value,
        },
    )


# ============================================================================
# Laplacian of the trace
# ============================================================================


def laplacian_trace_check(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """Laplacian and drift-Laplacian identities for tr(q) under the Hamilton-type identity."""
    samples, settings, tolerance = _prepare(S, samples, settings)
    failed = _hamilton_tensor_precondition(S, samples, tolerance)
    if failed is not None:
        return CheckReport.inapplicable(
            "laplacian_trace",
            "Q(grad f) = grad tr(q)/2 does not hold",
            tolerance,
            S.regime,
            details={"hamilton_tensor_max": failed},
        )
    lam = S.lam
    ricci_flow = S.qspec.kind == QKind.RICCI

    def evaluate(geometry: LocalGeometry) -> dict[str, float]:
        f = geometry.scalar_field(S.f)
        df = f.grad()
        q = geometry.field(S.q.q)
        trace = geometry.scalar_field(S.q.trace)
        norm2 = geometry.scalar_field(S.q.norm2)
        div_q_f = geometry.covector_inner(geometry.divergence_02(q), df)
        grad_trace_f = geometry.covector_inner(trace.grad(), df)
        ric_ff = geometry.covector_inner(geometry.apply_dual(geometry.ricci, df), df)
        q_ff = geometry.covector_inner(geometry.apply_dual(q, df), df)

        with_trace = geometry.laplacian(trace) - trace * (2 * lam) - norm2 - div_q_f * 2.0
        drift = (
            geometry.f_laplacian(trace, f)
            - trace * (2 * lam)
            - norm2
            - (div_q_f * 2.0 - grad_trace_f)
        )
        ric_and_div = div_q_f - ric_ff * 2.0 - q_ff * 2.0
        no_trace = div_q_f + norm2 * 0.5
        row = {
            "with_trace": abs(_value(with_trace)),
            "f_laplacian": abs(_value(drift)),
            "ric_and_div": abs(_value(ric_and_div)),
            "no_trace": abs(_value(no_trace)),
            "trace": _value(trace),
        }
        if ricci_flow:
            R = geometry.scalar
            ric_norm2 = geometry.norm2(geometry.ricci)
            row["ricci_drift"] = abs(
                _value(geometry.f_laplacian(R, f) - R * (2 * lam) + ric_norm2 * 2.0)
            )
        return row

    rows = samples.map(evaluate, S.order_for(2, q=2))
    trace_free = all(abs(r["trace"]) <= tolerance for r in rows)
    keys = ["with_trace", "f_laplacian", "ric_and_div"]
    if trace_free:
        keys.append("no_trace")
    if ricci_flow:
        keys.append("ricci_drift")
    residuals = [max(r[k] for k in keys) for r in rows]
    details: dict[str, Any] = {f"{k}_max": max(r[k] for r in rows) for k in keys}
    details["trace_free"] = trace_free
    details["with_trace_vs_f_laplacian_max"] = max(
        abs(r["with_trace"] - r["f_laplacian"]) for r in rows
    )
    return CheckReport.from_residuals(
        "laplacian_trace", residuals, tolerance, S.regime, details=details
    )


# ============================================================================
# Rigidity
# ============================================================================


def rigidity_check(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """Constant trace, radial flatness, and Q(grad f) = c grad f with a fitted c."""
    samples, settings, tolerance = _prepare(S, samples, settings)
    order = S.order_for(2)
    anchor_trace = _value(samples.anchor(order).scalar_field(S.q.trace))

    def evaluate(geometry: LocalGeometry) -> dict[str, Any]:
        f = geometry.scalar_field(S.f)
        df = f.grad()
        q = geometry.field(S.q.q)
        row: dict[str, Any] = {"trace": _value(geometry.scalar_field(S.q.trace))}
        grad_norm = _covector_norm(geometry, df)
        if grad_norm <= CRITICAL_GRADIENT:
            row["critical"] = True
            return row
        row.update(
            critical=False,
            radial=radial_curvature_norm(geometry, f),
            qf=geometry.apply_dual(q, df).value,
            df=df.value,
            ginv=geometry.ginv.value,
        )
        return row

    rows = samples.map(evaluate, order)
    regular = [r for r in rows if not r["critical"]]
    trace_residuals = _constancy([r["trace"] for r in rows], anchor_trace)

    c: float | None = None
    fit = np.zeros(len(rows))
    radial = np.zeros(len(rows))
    if regular:
        numerator = sum(float(r["qf"] @ r["ginv"] @ r["df"]) for r in regular)
        denominator = sum(float(r["df"] @ r["ginv"] @ r["df"]) for r in regular)
        c = numerator / denominator
        for k, r in enumerate(rows):
            if r["critical"]:
                continue
            w = r["qf"] - c * r["df"]
            fit[k] = float(np.sqrt(max(w @ r["ginv"] @ w, 0.0)))
            radial[k] = r["radial"]

    residuals = np.maximum(trace_residuals, np.maximum(radial, fit))
    notes = []
    if not regular:
        notes.append("all samples are critical points of f; radial and dual parts are vacuous")
    return CheckReport.from_residuals(
        "rigidity",
        residuals,
        tolerance,
        S.regime,
        constants=ReportConstants(c=c),
        details={
            "trace_constancy_max": float(np.max(trace_residuals, initial=0.0)),
            "radial_curvature_max": float(np.max(radial, initial=0.0)),
            "dual_fit_max": float(np.max(fit, initial=0.0)),
            "critical_samples": len(rows) - len(regular),
        },
        notes=notes,
    )


def rigid_conditions_check(
    S: SolitonData,
    Lambda: float | None = None,
    samples: SampleSet | None = None,
    settings: Settings | None = None,
) -> CheckReport:
    """Conditions characterizing rigid spaces for the bare pair (g, f).

    For Lambda != 0: F_Lambda constant, Laplacian of f constant, R(X, grad f)grad f = 0.
    For Lambda = 0: |grad f| constant, Ric(grad f, grad f) >= 0 and then Laplacian of f = 0.
    """
    samples, settings, tolerance = _prepare(S, samples, settings)
    Lam = Lambda if Lambda is not None else S.Lambda_or_lambda

    def evaluate(geometry: LocalGeometry) -> dict[str, float]:
        f = geometry.scalar_field(S.f)
        df = f.grad()
        grad2 = _value(geometry.covector_inner(df, df))
        row = {
            "F": 0.5 * grad2 - Lam * _value(f),
            "laplacian": _value(geometry.laplacian(f)),
            "grad_norm": float(np.sqrt(max(grad2, 0.0))),
            "ricci_ff": _value(
                geometry.covector_inner(geometry.apply_dual(geometry.ricci, df), df)
            ),
            "radial": 0.0,
        }
        if row["grad_norm"] > CRITICAL_GRADIENT:
            row["radial"] = radial_curvature_norm(geometry, f)
        return row

    anchor = evaluate(samples.anchor(2))
    rows = samples.map(evaluate, 2)
    if Lam != 0:
        F = _constancy([r["F"] for r in rows], anchor["F"])
        lap = _constancy([r["laplacian"] for r in rows], anchor["laplacian"])
        radial = np.array([r["radial"] for r in rows])
        residuals = np.maximum(F, np.maximum(lap, radial))
        details = {
            "branch": "Lambda != 0",
            "F_Lambda_constancy_max": float(np.max(F)),
            "laplacian_constancy_max": float(np.max(lap)),
            "radial_curvature_max": float(np.max(radial)),
        }
    else:
        grad = _constancy([r["grad_norm"] for r in rows], anchor["grad_norm"])
        ricci = np.array([max(0.0, -r["ricci_ff"]) for r in rows])
        lap = np.array([abs(r["laplacian"]) for r in rows])
        residuals = np.maximum(grad, np.maximum(ricci, lap))
        details = {
            "branch": "Lambda = 0",
            "grad_norm_constancy_max": float(np.max(grad)),
            "negative_ricci_max": float(np.max(ricci)),
            "laplacian_max": float(np.max(lap)),
        }
    return CheckReport.from_residuals(
        "rigid_conditions",
        residuals,
        tolerance,
        S.regime,
        constants=ReportConstants(Lambda=Lam),
        details=details,
    )


# ============================================================================
# Trace bounds and flatness
# ============================================================================


def trace_bounds_check(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """Sandwich -2 lambda n <= tr(q) <= 0 (reversed for lambda < 0) and its extreme cases."""
    samples, settings, tolerance = _prepare(S, samples, settings)
    lam, n = S.lam, S.dim
    if lam == 0:
        return CheckReport.inapplicable("trace_bounds", "lambda = 0", tolerance, S.regime)
    failed = _hamilton_tensor_precondition(S, samples, tolerance)
    if failed is not None:
        return CheckReport.inapplicable(
            "trace_bounds",
            "Q(grad f) = grad tr(q)/2 does not hold",
            tolerance,
            S.regime,
            details={"hamilton_tensor_max": failed},
        )

    order = S.order_for(1, q=1)

    def evaluate(geometry: LocalGeometry) -> dict[str, float]:
        df = geometry.scalar_field(S.f).grad()
        q = geometry.field(S.q.q)
        return {
            "trace": _value(geometry.scalar_field(S.q.trace)),
            "div_q_f": _value(geometry.covector_inner(geometry.divergence_02(q), df)),
            "q_norm": _tensor_norm(geometry, q),
            "einstein": _tensor_norm(geometry, q + geometry.g * (2 * lam)),
        }

    anchor_trace = _value(samples.anchor(order).scalar_field(S.q.trace))
    rows = samples.map(evaluate, order)
    trace_spread = float(np.max(_constancy([r["trace"] for r in rows], anchor_trace)))
    worst_div = min(r["div_q_f"] for r in rows)
    if trace_spread > tolerance or worst_div < -tolerance:
        return CheckReport.inapplicable(
            "trace_bounds",
            "tr(q) is not constant or div(q)(grad f) is negative somewhere",
            tolerance,
            S.regime,
            details={"trace_spread": trace_spread, "div_q_f_min": worst_div},
        )

    bound = -2 * lam * n
    lower, upper = (bound, 0.0) if lam > 0 else (0.0, bound)
    residuals = [max(0.0, r["trace"] - upper, lower - r["trace"]) for r in rows]
    extreme = "interior"
    if abs(anchor_trace) <= tolerance:
        extreme = "q-flat"
        residuals = [max(res, r["q_norm"]) for res, r in zip(residuals, rows)]
    elif abs(anchor_trace - bound) <= tolerance:
        extreme = "einstein"
        residuals = [max(res, r["einstein"]) for res, r in zip(residuals, rows)]
    return CheckReport.from_residuals(
        "trace_bounds",
        residuals,
        tolerance,
        S.regime,
        details={"trace": anchor_trace, "interval": [lower, upper], "extreme": extreme},
    )


def flatness_hypotheses(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """Which q-flatness hypotheses hold at the samples, and whether q vanishes when one does.

    Passing means no sampled counterexample; parabolicity is never decided.
    """
    samples, settings, tolerance = _prepare(S, samples, settings)
    failed = _hamilton_tensor_precondition(S, samples, tolerance)
    if failed is not None:
        return CheckReport.inapplicable(
            "flatness_hypotheses",
            "Q(grad f) = grad tr(q)/2 does not hold",
            tolerance,
            S.regime,
            details={"hamilton_tensor_max": failed},
        )
    order = S.order_for(2, q=1)

    def evaluate(geometry: LocalGeometry) -> dict[str, float]:
        q = geometry.field(S.q.q)
        ricci = geometry.ricci.value
        frame_metric = geometry.g.value
        ricci_min = float(
            np.min(np.linalg.eigvals(np.linalg.solve(frame_metric, ricci)).real)
        )
        return {
            "trace": _value(geometry.scalar_field(S.q.trace)),
            "div_norm": _covector_norm(geometry, geometry.divergence_02(q)),
            "ricci_min": ricci_min,
            "q_norm": _tensor_norm(geometry, q),
        }

    anchor_trace = _value(samples.anchor(order).scalar_field(S.q.trace))
    rows = samples.map(evaluate, order)
    traces = [r["trace"] for r in rows]
    trace_free = max(abs(t) for t in traces) <= tolerance
    constant_trace = float(np.max(_constancy(traces, anchor_trace))) <= tolerance
    divergence_free = max(r["div_norm"] for r in rows) <= tolerance
    ricci_nonnegative = min(r["ricci_min"] for r in rows) >= -tolerance
    trace_nonpositive = max(traces) <= tolerance

    hypotheses = {
        "i": trace_free and divergence_free,
        "ii": trace_free and ricci_nonnegative,
        "iii": S.lam == 0 and constant_trace and ricci_nonnegative,
        "iv": S.lam < 0 and divergence_free and trace_nonpositive and ricci_nonnegative,
    }
    details = {
        "hypotheses": hypotheses,
        "parabolicity": "not decidable",
        "trace_free": trace_free,
        "divergence_free": divergence_free,
        "ricci_nonnegative": ricci_nonnegative,
        "q_norm_max": max(r["q_norm"] for r in rows),
    }
    if not any(hypotheses.values()):
        return CheckReport.inapplicable(
            "flatness_hypotheses",
            "no flatness hypothesis holds at the samples",
            tolerance,
            S.regime,
            details=details,
            samples=len(rows),
        )
    return CheckReport.from_residuals(
        "flatness_hypotheses",
        [r["q_norm"] for r in rows],
        tolerance,
        S.regime,
        details=details,
    )


# ============================================================================
# Compact integral identity
# ============================================================================


def quadrature_rule(chart: Chart, budget: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product nodes and coordinate weights over the full domain box.

    Gauss-Legendre on open axes and the trapezoid rule on periodic axes.
    """
    if chart.quadrature is None:
        raise DimensionError(f"Chart {chart.label!r} declares no compact quadrature")
    per_axis = max(4, int(round(budget ** (2.0 / chart.dim))))
    axes, weights = [], []
    for lo, hi, periodic in zip(
        chart.domain.lower, chart.domain.upper, chart.quadrature.periodic
    ):
        if periodic:
            nodes = lo + (hi - lo) * np.arange(per_axis) / per_axis
            w = np.full(per_axis, (hi - lo) / per_axis)
        else:
            x, w = np.polynomial.legendre.leggauss(per_axis)
            nodes = lo + (x + 1) * (hi - lo) / 2
            w = w * (hi - lo) / 2
        axes.append(nodes)
        weights.append(w)
    points = np.array(list(itertools.product(*axes)))
    products = np.array([np.prod(c) for c in itertools.product(*weights)])
    return points, products


def compact_integral_identity(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """0 = (1/2) int div(q)(grad f) + int |Hess f|^2 on a compact chart, by quadrature."""
    _, settings, tolerance = _prepare(S, samples, settings)
    tolerance = max(tolerance, 1e-6)
    chart = S.chart
    if chart.quadrature is None:
        return CheckReport.inapplicable(
            "compact_integral", "chart does not cover a compact manifold", tolerance, S.regime
        )
    points, weights = quadrature_rule(chart, settings.quadrature_nodes)
    order = S.order_for(1, q=1)
    n = S.dim

    def evaluate(p: np.ndarray) -> tuple[float, float, float, float, float]:
        geometry = LocalGeometry(chart, p, order)
        f = geometry.scalar_field(S.f)
        df = f.grad()
        q = geometry.field(S.q.q)
        hess = geometry.hessian(f)
        volume = float(np.sqrt(np.linalg.det(geometry.g.value)))
        soliton = _tensor_norm(geometry, hess - geometry.g * S.lam - q * 0.5)
        return (
            volume,
            _value(geometry.covector_inner(geometry.divergence_02(q), df)),
            _value(geometry.norm2(hess)),
            _covector_norm(geometry, df),
            soliton,
        )

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            rows = np.array(list(pool.map(evaluate, points)))
    else:
        rows = np.array([evaluate(p) for p in points])
    dV = rows[:, 0] * weights
    div_integral = float(np.sum(rows[:, 1] * dV))
    hess_integral = float(np.sum(rows[:, 2] * dV))
    identity = abs(0.5 * div_integral + hess_integral)
    max_grad = float(np.max(rows[:, 3]))
    stationary = max_grad <= tolerance
    volume_error = abs(float(np.sum(dV)) - chart.quadrature.total_volume)

    residuals = [identity]
    notes = []
    if not stationary:
        residuals.append(max(0.0, div_integral))
    if S.lam <= 0:
        residuals.append(max_grad)
        notes.append("lambda <= 0 on a compact manifold forces f to be constant")
    if float(np.max(rows[:, 4])) > tolerance:
        notes.append("data is not a soliton at the quadrature nodes")
    logger.debug("Compact quadrature with %d nodes, volume error %.2e", len(points), volume_error)
    report = CheckReport.from_residuals(
        "compact_integral",
        [max(residuals)],
        tolerance,
        S.regime,
        details={
            "div_q_integral": div_integral,
            "hessian_integral": hess_integral,
            "identity_residual": identity,
            "stationary": stationary,
            "sign_claim": None if stationary else div_integral < 0,
            "max_grad_f": max_grad,
            "soliton_residual_max": float(np.max(rows[:, 4])),
            "quadrature_nodes": len(points),
            "volume_error": volume_error,
        },
        notes=notes,
    )
    report.samples = len(points)
    return report


# ============================================================================
# Evolution identities
# ============================================================================


def evolution_identities(
    S: SolitonData, samples: SampleSet | None = None, settings: Settings | None = None
) -> CheckReport:
    """Pointwise evolution of tr(q) in its two forms, and the scalar-curvature variation.

    For q = ricci the variation -Delta tr(q) + div div q - <q, Ric> is compared with
    Delta R + 2|Ric|^2 and Delta R - 2|Ric|^2 and the matching sign is reported.
    """
    samples, settings, tolerance = _prepare(S, samples, settings)
    lam = S.lam
    ricci_flow = S.qspec.kind == QKind.RICCI

    def evaluate(geometry: LocalGeometry) -> dict[str, float]:
        f = geometry.scalar_field(S.f)
        df = f.grad()
        q = geometry.field(S.q.q)
        trace = geometry.scalar_field(S.q.trace)
        div_q = geometry.divergence_02(q)
        rate = (
            -geometry.scalar_field(S.q.norm2)
            - trace * (2 * lam)
            - geometry.covector_inner(div_q * 2.0 - trace.grad(), df)
        )
        drift = -geometry.f_laplacian(trace, f)
        variation = (
            -geometry.laplacian(trace)
            + geometry.divergence_01(div_q)
            - geometry.inner(q, geometry.ricci)
        )
        row = {
            "trace_rate": _value(rate),
            "mutual": abs(_value(rate) - _value(drift)),
            "variation": _value(variation),
        }
        if ricci_flow:
            R = geometry.scalar
            ric2 = geometry.norm2(geometry.ricci)
            lap_R = geometry.laplacian(R)
            row["plus"] = abs(_value(variation - lap_R - ric2 * 2.0))
            row["minus"] = abs(_value(variation - lap_R + ric2 * 2.0))
            row["reduction"] = abs(
                -0.5 * _value(rate) - _value(R * (-2 * lam) + ric2 * 2.0)
            )
        return row

    order = S.order_for(4 if ricci_flow else 2, q=2)
    rows = samples.map(evaluate, order)
    residuals = np.array([r["mutual"] for r in rows])
    details: dict[str, Any] = {
        "mutual_max": float(np.max(residuals)),
        "trace_rate_range": [
            min(r["trace_rate"] for r in rows),
            max(r["trace_rate"] for r in rows),
        ],
        "scalar_variation_range": [
            min(r["variation"] for r in rows),
            max(r["variation"] for r in rows),
        ],
    }
    if ricci_flow:
        plus = max(r["plus"] for r in rows)
        minus = max(r["minus"] for r in rows)
        matches = [sign for sign, worst in (("+", plus), ("-", minus)) if worst <= tolerance]
        details.update(
            plus_max=plus,
            minus_max=minus,
            evolution_sign=matches[0] if len(matches) == 1 else None,
            soliton_reduction_max=max(r["reduction"] for r in rows),
        )
        sign_residual = min(plus, minus) if len(matches) <= 1 else max(plus, minus)
        residuals = np.maximum(
            residuals, np.maximum(sign_residual, [r["reduction"] for r in rows])
        )
    return CheckReport.from_residuals(
        "evolution_identities", residuals, tolerance, S.regime, details=details
    )

