"""
Geodesic Probes
===============

ODE machinery along geodesics: integration with a parallel frame, distance estimates, the
Ricatti comparison equation, shape operators of f and of the distance-like function
|grad f| / Lambda, the potential growth bounds and the cutoff-function lower bound.

Usage:
    trace = integrate_geodesic(chart, x0, v0, length=5.0, step=5e-3)
    trace.speed_defect(chart)
    ricatti_evolve(-1.0, mode="equality", s_max=2.0).blow_up_at    # ~1.0
    lower_bound_probe(S).details["c1"]
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, least_squares

from qsoliton import jets
from qsoliton.charts import Chart
from qsoliton.config import Settings, settings as default_settings
from qsoliton.errors import DomainError
from qsoliton.geometry import LocalGeometry, orthogonal_complement, orthonormal_frame
from qsoliton.models import CheckReport
from qsoliton.tools.verify import CRITICAL_GRADIENT, SolitonData
from qsoliton.utils.sampling import sample_ball, sample_box, sample_directions

logger = logging.getLogger(__name__)

BLOW_UP = 1e9
SIMPSON_PANELS = 1000
SIMPSON_TOLERANCE = 1e-8
MAX_REFINEMENTS = 8
SEGMENT_NODES = 16


# ============================================================================
# Geodesic integration
# ============================================================================


@dataclass(frozen=True)
class GeodesicTrace:
    """Unit-speed geodesic sampled at every integration step."""

    start: np.ndarray
    initial_velocity: np.ndarray
    step: float
    parameters: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    frames: np.ndarray = field(repr=False)
    requested_length: float
    truncated: bool = False

    @property
    def length(self) -> float:
        return float(self.parameters[-1])

    def __len__(self) -> int:
        return len(self.parameters)

    def speed_defect(self, chart: Chart) -> float:
        """Largest deviation of |gamma'|_g from 1."""
        return max(
            abs(np.sqrt(v @ chart.metric_values(p) @ v) - 1.0)
            for p, v in zip(self.points, self.velocities)
        )

    def frame_defect(self, chart: Chart) -> float:
        """Largest deviation of the transported frame from g-orthonormality."""
        n = len(self.start)
        return max(
            float(np.max(np.abs(E.T @ chart.metric_values(p) @ E - np.eye(n))))
            for p, E in zip(self.points, self.frames)
        )

    def subsample(self, count: int) -> np.ndarray:
        """Indices of ``count`` evenly spread samples (first and last included)."""
        count = min(count, len(self))
        return np.unique(np.linspace(0, len(self) - 1, count).round().astype(int))


def _geodesic_rhs(chart: Chart, state: np.ndarray, n: int) -> np.ndarray:
    x, v = state[:n], state[n : 2 * n]
    frame = state[2 * n :].reshape(n, n)
    if not chart.domain.contains(x):
        raise DomainError(f"Geodesic left the domain of {chart.label!r} at {x.tolist()}")
    gamma = chart.christoffel_value(x)
    acceleration = -np.einsum("kij,i,j->k", gamma, v, v)
    transport = -np.einsum("kij,i,ja->ka", gamma, v, frame)
    return np.concatenate([v, acceleration, transport.ravel()])


def integrate_geodesic(
    chart: Chart,
    x0: Sequence[float],
    v0: Sequence[float],
    length: float,
    step: float | None = None,
) -> GeodesicTrace:
    """Classic RK4 for gamma'' + Gamma(gamma', gamma') = 0 with a parallel frame.

    ``v0`` is rescaled to unit g-length; the first frame vector is gamma'(0). Integration stops
    early (``truncated``) when a stage leaves the chart domain.
    """
    x0 = chart.validate_point(x0)
    n = chart.dim
    g0 = chart.metric_values(x0)
    v0 = np.asarray(v0, dtype=float)
    speed = float(np.sqrt(v0 @ g0 @ v0))
    if speed == 0:
        raise ValueError("Initial velocity must be nonzero")
    v0 = v0 / speed
    frame = np.column_stack([v0, orthogonal_complement(g0, v0)]) if n > 1 else v0[:, None]
    h = step or default_settings.geodesic_step

    state = np.concatenate([x0, v0, frame.ravel()])
    s = 0.0
    rows = [(s, state)]
    truncated = False
    while s < length - 1e-12:
        dt = min(h, length - s)
        try:
            k1 = _geodesic_rhs(chart, state, n)
            k2 = _geodesic_rhs(chart, state + 0.5 * dt * k1, n)
            k3 = _geodesic_rhs(chart, state + 0.5 * dt * k2, n)
            k4 = _geodesic_rhs(chart, state + dt * k3, n)
        except DomainError:
            truncated = True
            break
        candidate = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not chart.domain.contains(candidate[:n]):
            truncated = True
            break
        state = candidate
        s += dt
        rows.append((s, state))

    if truncated:
        logger.debug("Geodesic from %s truncated at s=%.4f of %.4f", x0.tolist(), s, length)
    states = np.array([r[1] for r in rows])
    return GeodesicTrace(
        start=x0,
        initial_velocity=v0,
        step=h,
        parameters=np.array([r[0] for r in rows]),
        points=states[:, :n],
        velocities=states[:, n : 2 * n],
        frames=states[:, 2 * n :].reshape(-1, n, n),
        requested_length=length,
        truncated=truncated,
    )


def integrate_many(
    chart: Chart,
    x0: Sequence[float],
    directions: Sequence[np.ndarray],
    lengths: Sequence[float],
    step: float,
    workers: int = 1,
) -> list[GeodesicTrace]:
    """Integrate independent geodesics; results keep the order of ``directions``."""
    jobs = list(zip(directions, lengths))
    if workers <= 1:
        return [integrate_geodesic(chart, x0, v, s0, step) for v, s0 in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(
            pool.map(lambda job: integrate_geodesic(chart, x0, job[0], job[1], step), jobs)
        )


def unit_directions(chart: Chart, x0: Sequence[float], count: int, seed: int) -> np.ndarray:
    """Quasi-uniform g-unit vectors at ``x0`` (rows)."""
    frame = orthonormal_frame(chart.metric_values(x0))
    return sample_directions(count, chart.dim, seed) @ frame.T


# ============================================================================
# Distance
# ============================================================================


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    method: Literal["closed-form", "shooting", "segment"]
    converged: bool = True
    residual: float = 0.0


def _segment_length(chart: Chart, x0: np.ndarray, x: np.ndarray) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(SEGMENT_NODES)
    t = (nodes + 1) / 2
    d = x - x0
    speeds = [np.sqrt(d @ chart.metric_values(x0 + tk * d) @ d) for tk in t]
    return float(np.dot(weights, speeds) / 2)


def distance_estimate(
    chart: Chart,
    x0: Sequence[float],
    x: Sequence[float],
    settings: Settings | None = None,
    tolerance: float = 1e-3,
) -> DistanceEstimate:
    """d(x0, x): closed form when the chart declares one, otherwise an upper bound by shooting.

    Shooting solves for the initial vector whose geodesic hits ``x``; its length and the length
    of the coordinate segment are both curve lengths, so the smaller one never underestimates.
    """
    settings = settings or default_settings
    x0 = chart.validate_point(x0)
    x = chart.validate_point(x)
    if chart.distance is not None:
        return DistanceEstimate(float(chart.distance(x0, x)), "closed-form")
    if np.allclose(x0, x):
        return DistanceEstimate(0.0, "closed-form")

    g0 = chart.metric_values(x0)
    segment = _segment_length(chart, x0, x)

    def endpoint(w: np.ndarray) -> np.ndarray:
        size = float(np.sqrt(max(w @ g0 @ w, 0.0)))
        if size < 1e-12:
            return x0
        trace = integrate_geodesic(
            chart, x0, w, size, step=min(settings.geodesic_step, size / 50)
        )
        return trace.points[-1] + (size - trace.length) * trace.velocities[-1]

    result = least_squares(lambda w: endpoint(w) - x, x - x0, xtol=1e-12, ftol=1e-12)
    miss = float(np.linalg.norm(result.fun))
    shooting = float(np.sqrt(result.x @ g0 @ result.x))
    converged = miss <= tolerance * 1e-3
    if converged and shooting <= segment:
        return DistanceEstimate(shooting, "shooting", True, miss)
    if not converged:
        logger.warning("Shooting from %s to %s missed by %.2e", x0.tolist(), x.tolist(), miss)
    return DistanceEstimate(segment, "segment", converged, miss)


# ============================================================================
# Ricatti comparison
# ============================================================================


@dataclass(frozen=True)
class RicattiTrace:
    """Samples of phi along the parameter, with blow-up detection."""

    mode: Literal["equality", "inequality"]
    n: int
    initial: float
    parameters: np.ndarray
    values: np.ndarray
    blow_up: bool
    blow_up_at: float | None
    closed_form_error: float

    def closed_form(self, s: np.ndarray | float) -> np.ndarray:
        """phi0 / (1 + phi0 s / m) with m = 1 (equality) or n (inequality)."""
        m = 1 if self.mode == "equality" else self.n
        return self.initial / (1 + self.initial * np.asarray(s) / m)


def ricatti_evolve(
    phi0: float,
    mode: Literal["equality", "inequality"] = "equality",
    s_max: float = 1.0,
    n: int = 1,
    backward: bool = False,
    points: int = 1001,
) -> RicattiTrace:
    """Integrate phi' = -phi^2 (equality) or phi' = -phi^2 / n (inequality comparison).

    Blow-up is declared when |phi| exceeds 1e9; the blow-up parameter is extrapolated from
    the exact local solution m / (s - s*).
    """
    if s_max <= 0:
        raise ValueError(f"s_max must be positive, got {s_max}")
    if mode not in ("equality", "inequality"):
        raise ValueError(f"Unknown Ricatti mode {mode!r}")
    if mode == "inequality" and n < 1:
        raise ValueError(f"inequality mode needs n >= 1, got {n}")
    m = 1 if mode == "equality" else n
    end = -s_max if backward else s_max

    def rhs(_: float, phi: np.ndarray) -> np.ndarray:
        return -(phi**2) / m

    def escape(_: float, phi: np.ndarray) -> float:
        return BLOW_UP - abs(phi[0])

    escape.terminal = True  # type: ignore[attr-defined]
    solution = solve_ivp(
        rhs,
        (0.0, end),
        [phi0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-12,
        t_eval=np.linspace(0.0, end, points),
        events=escape,
    )
    parameters, values = solution.t, solution.y[0]
    blow_up = bool(solution.t_events[0].size)
    blow_up_at = None
    if blow_up:
        s_e = float(solution.t_events[0][0])
        phi_e = float(solution.y_events[0][0][0])
        blow_up_at = s_e - m / phi_e
        logger.debug("Ricatti blow-up from phi0=%g near s=%.6f", phi0, blow_up_at)

    trace = RicattiTrace(mode, n, phi0, parameters, values, blow_up, blow_up_at, 0.0)
    reach = np.abs(parameters) <= 0.99 * abs(blow_up_at) if blow_up_at is not None else True
    exact = trace.closed_form(parameters)
    scale = np.maximum(1.0, np.abs(exact))
    error = float(np.max(np.abs(values - exact)[reach] / scale[reach], initial=0.0))
    return RicattiTrace(mode, n, phi0, parameters, values, blow_up, blow_up_at, error)


# ============================================================================
# Shape operators
# ============================================================================


@dataclass(frozen=True)
class ShapeSample:
    s: float
    eigenvalues: np.ndarray
    gradient_residual: float
    complement_excess: float
    radial_equation: float


def shape_operator_eigen(
    S: SolitonData,
    trace: GeodesicTrace,
    Lambda: float | None = None,
    points: int = 32,
) -> list[ShapeSample]:
    """Eigenvalues of S_f = Hess f in the parallel frame at evenly spread trace samples.

    Also measures S_f(grad f) = Lambda grad f, how far the remaining eigenvalues leave
    [0, Lambda], and the radial equation nabla_N S_rho + S_rho^2 + R(., N)N = 0 for the
    distance-like function rho = |grad f| / Lambda. Critical points of f are skipped.
    """
    Lam = Lambda if Lambda is not None else S.Lambda_or_lambda
    chart = S.chart
    samples = []
    for k in trace.subsample(points):
        geometry = LocalGeometry(chart, trace.points[k], 3)
        f = geometry.scalar_field(S.f)
        df = f.grad()
        g = geometry.g.value
        ginv = geometry.ginv.value
        gradient = ginv @ df.value
        grad_norm = float(np.sqrt(max(gradient @ g @ gradient, 0.0)))
        if grad_norm <= CRITICAL_GRADIENT:
            continue
        hess = geometry.hessian(f).value
        frame = trace.frames[k]
        eigenvalues = np.sort(np.linalg.eigvalsh(frame.T @ hess @ frame))

        w = hess @ gradient - Lam * df.value
        gradient_residual = float(np.sqrt(max(w @ ginv @ w, 0.0))) / grad_norm
        complement = orthogonal_complement(g, gradient)
        inner = np.linalg.eigvalsh(complement.T @ hess @ complement) if complement.size else []
        low, high = min(0.0, Lam), max(0.0, Lam)
        excess = max([0.0] + [max(low - e, e - high) for e in inner])

        radial = 0.0
        if Lam > 0:
            rho = jets.sqrt(geometry.covector_inner(df, df)) * (1.0 / Lam)
            H = geometry.hessian(rho)
            normal = ginv @ rho.grad().value
            T = (
                np.einsum("m,mij->ij", normal, geometry.covariant_derivative(H).value)
                + H.value @ ginv @ H.value
                + np.einsum("ijkl,j,k->il", geometry.riemann_lowered.value, normal, normal)
            )
            radial = float(np.sqrt(max(np.trace(ginv @ T @ ginv @ T.T), 0.0)))
        samples.append(
            ShapeSample(float(trace.parameters[k]), eigenvalues, gradient_residual, excess, radial)
        )
    return samples


def probe_traces(S: SolitonData, settings: Settings, length: float) -> list[GeodesicTrace]:
    chart = S.chart
    x0 = chart.anchor
    directions = unit_directions(chart, x0, settings.probe_geodesics, settings.seed)
    lengths = [_minimizing_cap(chart, x0, v, settings, length) for v in directions]
    return integrate_many(
        chart, x0, list(directions), lengths, settings.geodesic_step, settings.workers
    )


def _minimizing_cap(
    chart: Chart, x0: np.ndarray, v: np.ndarray, settings: Settings, length: float
) -> float:
    if chart.minimizing_length is not None:
        return float(min(length, chart.minimizing_length(x0, v)))
    return float(min(length, settings.generic_cap))


def _cluster(values: np.ndarray, width: float) -> list[float]:
    clusters: list[list[float]] = []
    for v in np.sort(values):
        if clusters and v - clusters[-1][0] <= width:
            clusters[-1].append(float(v))
        else:
            clusters.append([float(v)])
    return [float(np.mean(c)) for c in clusters]


def shape_operator_check(
    S: SolitonData,
    traces: Sequence[GeodesicTrace] | None = None,
    Lambda: float | None = None,
    settings: Settings | None = None,
) -> CheckReport:
    """Eigenvalue structure of S_f along probe geodesics from the anchor.

    Needs F_Lambda = |grad f|^2 / 2 - Lambda f constant along the traces.
    """
    settings = settings or default_settings
    tolerance = settings.tolerance(S.chart.exact)
    Lam = Lambda if Lambda is not None else S.Lambda_or_lambda
    traces = list(traces) if traces is not None else probe_traces(S, settings, 4.0)

    F_values = []
    for trace in traces:
        for k in trace.subsample(32):
            value, grad = S.f.value_and_gradient(trace.points[k])
            ginv = np.linalg.inv(S.chart.metric_values(trace.points[k]))
            F_values.append(0.5 * grad @ ginv @ grad - Lam * value)
    spread = float(np.ptp(F_values)) if F_values else 0.0
    if spread > tolerance:
        return CheckReport.inapplicable(
            "shape_operator",
            "F_Lambda is not constant along the probe geodesics",
            tolerance,
            S.regime,
            details={"F_Lambda_spread": spread, "Lambda": Lam},
        )

    samples = [sample for trace in traces for sample in shape_operator_eigen(S, trace, Lam)]
    residuals = [
        max(x.gradient_residual, x.complement_excess, x.radial_equation) for x in samples
    ]
    eigenvalues = np.concatenate([x.eigenvalues for x in samples]) if samples else np.zeros(0)
    return CheckReport.from_residuals(
        "shape_operator",
        residuals,
        tolerance,
        S.regime,
        details={
            "Lambda": Lam,
            "eigenvalue_clusters": _cluster(eigenvalues, 1e-6),
            "gradient_eigen_residual_max": max((x.gradient_residual for x in samples), default=0),
            "complement_excess_max": max((x.complement_excess for x in samples), default=0),
            "radial_equation_max": max((x.radial_equation for x in samples), default=0),
            "geodesics": len(traces),
        },
    )


# ============================================================================
# Growth of the potential
# ============================================================================


def _F_values(S: SolitonData, points: np.ndarray, mu: float) -> tuple[np.ndarray, ...]:
    f_values, grad_norms = [], []
    for p in points:
        value, grad = S.f.value_and_gradient(p)
        ginv = np.linalg.inv(S.chart.metric_values(p))
        f_values.append(value)
        grad_norms.append(np.sqrt(max(grad @ ginv @ grad, 0.0)))
    f_arr, grad_arr = np.array(f_values), np.array(grad_norms)
    return f_arr, grad_arr, 0.5 * grad_arr**2 - mu * f_arr


def growth_bounds(
    S: SolitonData,
    points: np.ndarray | None = None,
    settings: Settings | None = None,
) -> CheckReport:
    """f <= (mu/2)(r + 2 sqrt(f(x0) / (2 mu)))^2 and |grad f| <= mu r + sqrt(2 mu f(x0)).

    mu is Lambda when the soliton declares one, otherwise lambda; r is the distance to the
    anchor and both bounds need F = |grad f|^2 / 2 - mu f <= 0.
    """
    settings = settings or default_settings
    tolerance = settings.tolerance(S.chart.exact)
    mu = S.Lambda_or_lambda
    if mu <= 0:
        return CheckReport.inapplicable(
            "growth_bounds", "growth bounds need lambda > 0", tolerance, S.regime
        )
    chart = S.chart
    if points is None:
        lower, upper = chart.domain.sampling_box()
        points = sample_box(lower, upper, settings.growth_samples, settings.seed)
    f_values, grad_norms, F = _F_values(S, points, mu)
    if float(np.max(F)) > tolerance:
        return CheckReport.inapplicable(
            "growth_bounds",
            "F = |grad f|^2/2 - mu f is positive somewhere",
            tolerance,
            S.regime,
            details={"F_max": float(np.max(F)), "mu": mu},
        )

    x0 = chart.anchor
    f0 = float(S.f.value_and_gradient(x0)[0])
    estimates = [distance_estimate(chart, x0, p, settings) for p in points]
    r = np.array([e.value for e in estimates])
    f_bound = 0.5 * mu * (r + 2 * np.sqrt(max(f0, 0.0) / (2 * mu))) ** 2
    grad_bound = mu * r + np.sqrt(2 * mu * max(f0, 0.0))
    f_margin = f_bound - f_values
    grad_margin = grad_bound - grad_norms
    residuals = np.maximum(0.0, -np.minimum(f_margin, grad_margin))
    details = {
        "mu": mu,
        "f_at_anchor": f0,
        "f_margin_min": float(np.min(f_margin)),
        "grad_margin_min": float(np.min(grad_margin)),
        "distance_methods": sorted({e.method for e in estimates}),
        "unconverged_distances": sum(not e.converged for e in estimates),
    }
    if abs(mu - 0.5) < 1e-12:
        details["shrinker_constant"] = 2 * np.sqrt(max(f0, 0.0))
    return CheckReport.from_residuals(
        "growth_bounds", residuals, tolerance, S.regime, details=details
    )


# ============================================================================
# Cutoff integral inequality and lower bound
# ============================================================================


def tent(s: np.ndarray, s0: float) -> np.ndarray:
    """Piecewise cutoff: s on [0, 1], 1 on [1, s0 - 1], s0 - s on [s0 - 1, s0]."""
    return np.clip(np.minimum(s, s0 - s), 0.0, 1.0)


def _simpson(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """Composite Simpson from 10^3 panels, doubling until successive values agree to 1e-8."""
    if b <= a:
        return 0.0
    panels = SIMPSON_PANELS
    previous = None
    for _ in range(MAX_REFINEMENTS):
        s = np.linspace(a, b, panels + 1)
        value = float(simpson(fn(s), x=s))
        if previous is not None and abs(value - previous) < SIMPSON_TOLERANCE:
            return value
        previous, panels = value, panels * 2
    logger.debug("Simpson refinement stopped at %d panels on [%g, %g]", panels, a, b)
    return value


def cutoff_integral(kernel: CubicSpline, s0: float) -> float:
    """Integral of tent(s)^2 * kernel(s) over [0, s0], split at the kinks of the tent."""
    pieces = [(0.0, 1.0), (1.0, s0 - 1.0), (s0 - 1.0, s0)]
    return sum(
        _simpson(lambda s: tent(s, s0) ** 2 * kernel(s), a, b) for a, b in pieces
    )


def _flow_kernel(S: SolitonData, trace: GeodesicTrace, nodes: int = 129) -> CubicSpline:
    """Spline of -q(gamma', gamma')/2 along the trace."""
    index = trace.subsample(nodes)
    values = []
    for k in index:
        geometry = LocalGeometry(S.chart, trace.points[k], S.order_for(0))
        q = geometry.field(S.q.q).value
        v = trace.velocities[k]
        values.append(-0.5 * float(v @ q @ v))
    return CubicSpline(trace.parameters[index], values)


def _threshold(kernel: CubicSpline, s0: float, rhs: float) -> float:
    """Largest tent length in [2, s0] for which the integral inequality holds."""

    def margin(length: float) -> float:
        return rhs - cutoff_integral(kernel, length)

    if margin(s0) >= 0:
        return s0
    grid = np.linspace(2.0, s0, 33)
    values = [margin(x) for x in grid]
    if values[0] < 0:
        return 2.0
    for a, b, va, vb in zip(grid, grid[1:], values, values[1:]):
        if va >= 0 > vb:
            return float(brentq(margin, a, b, xtol=1e-6))
    return float(grid[-1])


def _q_norm(S: SolitonData, p: np.ndarray) -> float:
    geometry = LocalGeometry(S.chart, p, S.order_for(0))
    return float(np.sqrt(max(float(geometry.norm2(geometry.field(S.q.q)).value), 0.0)))


def _exp_map_points(S: SolitonData, settings: Settings) -> np.ndarray:
    """Quasi-uniform points of the geodesic ball B(x0, 1)."""
    chart = S.chart
    x0 = chart.anchor
    frame = orthonormal_frame(chart.metric_values(x0))
    points = [x0]
    step = max(settings.geodesic_step, 0.02)
    for u in sample_ball(settings.ball_samples, chart.dim, settings.seed):
        radius = float(np.linalg.norm(u))
        if radius < 1e-12:
            continue
        trace = integrate_geodesic(chart, x0, frame @ (u / radius), radius, step)
        points.append(trace.points[-1])
    return np.array(points)


def lower_bound_probe(
    S: SolitonData,
    traces: Sequence[GeodesicTrace] | None = None,
    settings: Settings | None = None,
) -> CheckReport:
    """Cutoff integral hypothesis along probe geodesics, then f >= (lambda/2)(s - c1)^2.

    The unit-ball maximum of |q|/2 entering c1 is a sample maximum, so c1 is optimistic and
    the check corroborates rather than certifies.
    """
    settings = settings or default_settings
    tolerance = settings.tolerance(S.chart.exact)
    chart, lam, n = S.chart, S.lam, S.dim
    if lam <= 0:
        return CheckReport.inapplicable(
            "lower_bound", "lower bound needs lambda > 0", tolerance, S.regime
        )
    if chart.compact:
        return CheckReport.inapplicable(
            "lower_bound", "chart covers a compact manifold", tolerance, S.regime
        )
    ball = _exp_map_points(S, settings)
    _, _, F = _F_values(S, ball, lam)
    if float(np.max(F)) > tolerance:
        return CheckReport.inapplicable(
            "lower_bound",
            "F = |grad f|^2/2 - lambda f is positive near the anchor",
            tolerance,
            S.regime,
            details={"F_max": float(np.max(F))},
        )

    traces = (
        list(traces) if traces is not None else probe_traces(S, settings, settings.geodesic_length)
    )
    usable = [t for t in traces if t.length >= 2.0]
    rhs = 2.0 * (n - 1)
    rows = []
    for trace in usable:
        kernel = _flow_kernel(S, trace)
        lhs = cutoff_integral(kernel, trace.length)
        rows.append(
            {
                "length": trace.length,
                "lhs": lhs,
                "rhs": rhs,
                "threshold": _threshold(kernel, trace.length, rhs),
                "truncated": trace.truncated,
            }
        )
    hypothesis = [max(0.0, row["lhs"] - row["rhs"]) for row in rows]
    if any(h > tolerance for h in hypothesis):
        return CheckReport.inapplicable(
            "lower_bound",
            "cutoff integral inequality fails along a probe geodesic",
            tolerance,
            S.regime,
            details={"geodesics": rows},
            samples=len(rows),
        )

    M = max(0.5 * _q_norm(S, p) for p in ball)
    c1 = -np.inf
    for trace in usable:
        k = int(np.argmin(np.abs(trace.parameters - 1.0)))
        _, grad = S.f.value_and_gradient(trace.points[k])
        slope = float(grad @ trace.velocities[k])
        c1 = max(c1, 2 + (2 * (n - 1) + M - 2 * lam / 3 - slope) / lam)

    residuals = []
    for trace in usable:
        beyond = trace.parameters >= c1
        for s, p in zip(trace.parameters[beyond], trace.points[beyond]):
            f_value = float(S.f.value_and_gradient(p)[0])
            residuals.append(max(0.0, 0.5 * lam * (s - c1) ** 2 - f_value))
    notes = ["unit-ball maximum of |q|/2 is a sample maximum; c1 is optimistic"]
    if len(usable) < len(traces):
        notes.append(f"{len(traces) - len(usable)} geodesics shorter than 2 were skipped")
    return CheckReport.from_residuals(
        "lower_bound",
        residuals,
        tolerance,
        S.regime,
        details={
            "c1": float(c1) if usable else None,
            "ball_max_half_q": M,
            "ball_samples": len(ball),
            "geodesics": rows,
        },
        notes=notes,
    )
