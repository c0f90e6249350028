"""
Volume Growth
=============

Sublevel sets Omega(r) = {eta < r} of eta = sqrt(2 f / lambda), their volumes V(r), the trace
integrals over them, the co-area identity, the two volume growth bounds and the Omori-Yau
condition suite.

Profiles are computed two ways:

- product charts (``chart.product`` declared): N x R^k with f and tr(q) radial in the flat
  factor; volumes are closed-form balls times Vol(N), trace integrals use Gauss-Legendre
  along one ray and boundary integrals are exact spheres.
- any other chart: Monte Carlo over the sampling box (one scrambled Sobol stream), with
  standard errors recorded.

Every computation here assumes f has been shifted so that the Hamilton constant is 0, which is
what ``normalized_soliton`` does.

Usage:
    S0, C = normalized_soliton(S)
    profile = build_profile(S0, count=64, rmax=12.0)
    coarea_identity_check(profile).residual_max
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize

from qsoliton.config import Settings, settings as default_settings
from qsoliton.errors import InapplicableCheck
from qsoliton.geometry import LocalGeometry
from qsoliton.models import CheckReport, Regime
from qsoliton.tools.geodesics import distance_estimate
from qsoliton.tools.verify import SampleSet, SolitonData, hamilton_scalar
from qsoliton.utils.sampling import sample_box

logger = logging.getLogger(__name__)

SEGMENT_NODES = 12
ETA_SLACK = 1e-8
FD_CROSS_CHECK = 0.02
MIN_ASYMPTOTIC_RADII = 3


# ============================================================================
# Profiles
# ============================================================================


@dataclass(frozen=True)
class SublevelProfile:
    """V(r), its two derivatives and the trace integrals on a radius grid."""

    radii: np.ndarray
    volumes: np.ndarray
    dvolume_fd: np.ndarray
    dvolume_coarea: np.ndarray
    trace_integral: np.ndarray
    boundary_trace: np.ndarray
    lam: float
    n: int
    backend: str = "product"
    shift: float = 0.0
    grad_eta_max: float = 0.0
    F_max: float = 0.0
    stderr: np.ndarray | None = None
    seed: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def G(self) -> np.ndarray:
        """G(r) = integral of -lambda tr(q) over Omega(r)."""
        return -self.lam * self.trace_integral

    @property
    def regime(self) -> Regime:
        return Regime.MONTE_CARLO if self.backend == "monte-carlo" else Regime.EXACT

    @property
    def r0(self) -> float:
        return float(np.sqrt((self.n + 2) / self.lam))

    def identity_sides(self) -> tuple[np.ndarray, np.ndarray]:
        """Both sides of n V - r V' = -(1/2 lambda) int tr(q) + (1/2 lambda) int_boundary."""
        lhs = self.n * self.volumes - self.radii * self.dvolume_coarea
        rhs = (self.boundary_trace - self.trace_integral) / (2 * self.lam)
        return lhs, rhs

    @classmethod
    def synthetic(
        cls, radii: np.ndarray, volumes: np.ndarray, lam: float, n: int
    ) -> SublevelProfile:
        """Profile from given volumes with vanishing trace integrals (for growth checks)."""
        radii = np.asarray(radii, dtype=float)
        volumes = np.asarray(volumes, dtype=float)
        dv = np.gradient(volumes, radii, edge_order=2)
        zeros = np.zeros_like(radii)
        return cls(radii, volumes, dv, dv, zeros, zeros, lam, n, backend="synthetic")


def normalized_soliton(
    S: SolitonData, settings: Settings | None = None, samples: SampleSet | None = None
) -> tuple[SolitonData, float]:
    """Shift f so the Hamilton constant |grad f|^2 - tr(q)/2 - 2 lambda f becomes 0."""
    if S.lam <= 0:
        raise InapplicableCheck("sublevel profiles need lambda > 0")
    _, report = hamilton_scalar(S, samples=samples, settings=settings)
    if not report.passed or report.constants.C is None:
        raise InapplicableCheck(
            "Hamilton function is not constant; f cannot be normalized",
            hamilton_residual=report.residual_max,
        )
    C = report.constants.C
    logger.info("Hamilton constant %.3e; shifting f by %.6g", C, C / (2 * S.lam))
    return S.normalized(C), C


def radius_grid(eta_min: float, rmax: float, count: int) -> np.ndarray:
    """``count`` radii from just above the smallest eta up to ``rmax``."""
    if rmax <= eta_min:
        raise InapplicableCheck(
            f"rmax {rmax:.4g} does not exceed the minimum of eta {eta_min:.4g}"
        )
    return np.linspace(eta_min + (rmax - eta_min) / count, rmax, count)


def _ray_extent(lower: np.ndarray, upper: np.ndarray, start: np.ndarray, d: np.ndarray) -> float:
    reach = []
    for lo, hi, c, di in zip(lower, upper, start, d):
        if di > 0:
            reach.append((hi - c) / di)
        elif di < 0:
            reach.append((lo - c) / di)
    return 0.999 * min(reach)


class _Ray:
    """f, |grad f| and tr(q) along a ray of the flat factor from the minimum of f."""

    def __init__(self, S: SolitonData, direction: np.ndarray) -> None:
        chart = S.chart
        assert chart.product is not None
        self.S = S
        self.axes = chart.product.flat_axes
        base = chart.anchor.copy()

        def flat_value(y: np.ndarray) -> tuple[float, np.ndarray]:
            p = base.copy()
            p[self.axes] = y
            value, grad = S.f.value_and_gradient(p)
            return value, grad[self.axes]

        found = minimize(flat_value, base[self.axes], jac=True, method="BFGS")
        base[self.axes] = found.x
        self.base = base
        self.direction = np.zeros(chart.dim)
        self.direction[self.axes] = direction / np.linalg.norm(direction)
        self.t_max = _ray_extent(
            np.array(chart.domain.lower), np.array(chart.domain.upper), base, self.direction
        )

    def point(self, t: float) -> np.ndarray:
        return self.base + t * self.direction

    def f(self, t: float) -> float:
        return float(self.S.f.value_and_gradient(self.point(t))[0])

    def quantities(self, t: float) -> tuple[float, float, float]:
        """f, |grad f|_g and tr(q) at distance t."""
        p = self.point(t)
        value, grad = self.S.f.value_and_gradient(p)
        geometry = LocalGeometry(self.S.chart, p, self.S.order_for(0))
        grad_norm = float(np.sqrt(max(grad @ geometry.ginv.value @ grad, 0.0)))
        trace = float(geometry.scalar_field(self.S.q.trace).value)
        return float(value), grad_norm, trace


def _product_profile(
    S: SolitonData, count: int, rmax: float | None, radii: np.ndarray | None, tolerance: float
) -> SublevelProfile:
    chart = S.chart
    assert chart.product is not None
    lam = S.lam
    k = len(chart.product.flat_axes)
    V_N = chart.product.factor_volume
    ball = pi ** (k / 2) / gamma(k / 2 + 1)
    sphere = k * ball

    ray = _Ray(S, np.eye(k)[0])
    diagonal = _Ray(S, np.ones(k))
    for t in np.linspace(0, min(ray.t_max, diagonal.t_max), 5):
        a, b = ray.quantities(t), diagonal.quantities(t)
        if max(abs(x - y) for x, y in zip(a, b)) > tolerance * max(1.0, abs(a[0])):
            raise InapplicableCheck("f or tr(q) is not radial in the flat factor")

    f0 = ray.f(0.0)
    if f0 < -tolerance:
        raise InapplicableCheck(
            f"f has negative minimum {f0:.4g}; normalize the Hamilton constant first"
        )
    eta_min = float(np.sqrt(max(2 * f0 / lam, 0.0)))
    eta_max = float(np.sqrt(2 * ray.f(ray.t_max) / lam))
    if radii is None:
        radii = radius_grid(eta_min, min(rmax or eta_max, eta_max), count)
    elif radii[-1] > eta_max:
        raise InapplicableCheck(f"radius {radii[-1]:.4g} exceeds the chart reach {eta_max:.4g}")

    t_r = np.array(
        [
            0.0
            if r <= eta_min
            else brentq(lambda t: ray.f(t) - lam * r * r / 2, 0.0, ray.t_max, xtol=1e-14)
            for r in radii
        ]
    )

    nodes, weights = np.polynomial.legendre.leggauss(SEGMENT_NODES)
    cumulative = 0.0
    previous = 0.0
    trace_integral, boundary, dv_coarea = [], [], []
    F_max, grad_eta = -np.inf, 0.0
    for r, t in zip(radii, t_r):
        if t > previous:
            s = previous + (nodes + 1) * (t - previous) / 2
            rows = [ray.quantities(x) for x in s]
            integrand = np.array([row[2] for row in rows]) * s ** (k - 1)
            cumulative += float(np.dot(weights, integrand)) * (t - previous) / 2
            F_max = max(F_max, max(0.5 * g**2 - lam * v for v, g, _ in rows))
            previous = t
        trace_integral.append(V_N * sphere * cumulative)
        if t == 0.0:
            # empty sublevel set
            boundary.append(0.0)
            dv_coarea.append(0.0)
            continue
        value, grad_norm, trace = ray.quantities(t)
        F_max = max(F_max, 0.5 * grad_norm**2 - lam * value)
        area = V_N * sphere * t ** (k - 1)
        boundary.append(area * trace / grad_norm)
        dv_coarea.append(lam * r * area / grad_norm)
        grad_eta = max(grad_eta, grad_norm / (lam * r))

    volumes = V_N * ball * t_r**k
    logger.debug(
        "Product profile: %d radii up to %.3f (t up to %.3f)", len(radii), radii[-1], t_r[-1]
    )
    return SublevelProfile(
        radii=np.asarray(radii),
        volumes=volumes,
        dvolume_fd=np.gradient(volumes, radii, edge_order=2),
        dvolume_coarea=np.array(dv_coarea),
        trace_integral=np.array(trace_integral),
        boundary_trace=np.array(boundary),
        lam=lam,
        n=S.dim,
        backend="product",
        shift=S.normalization_constant,
        grad_eta_max=grad_eta,
        F_max=float(F_max) if np.isfinite(F_max) else 0.0,
    )


def _monte_carlo_profile(
    S: SolitonData, count: int, rmax: float | None, radii: np.ndarray | None, settings: Settings
) -> SublevelProfile:
    chart = S.chart
    lam = S.lam
    lower, upper = chart.domain.sampling_box()
    box_volume = float(np.prod(upper - lower))
    points = sample_box(lower, upper, settings.mc_points, settings.seed, method="sobol")

    density, eta, trace, grad_eta, F = [], [], [], [], []
    for p in points:
        geometry = LocalGeometry(chart, p, S.order_for(0))
        value, grad = S.f.value_and_gradient(p)
        grad_norm = float(np.sqrt(max(grad @ geometry.ginv.value @ grad, 0.0)))
        e = float(np.sqrt(max(2 * value / lam, 0.0)))
        density.append(float(np.sqrt(np.linalg.det(geometry.g.value))))
        eta.append(e)
        trace.append(float(geometry.scalar_field(S.q.trace).value))
        grad_eta.append(grad_norm / (lam * e) if e > 0 else 0.0)
        F.append(0.5 * grad_norm**2 - lam * value)
    density, eta, trace = np.array(density), np.array(eta), np.array(trace)

    # eta on the box faces bounds the radii whose sublevel set stays inside the box
    face_points = []
    for axis in range(chart.dim):
        for side in (lower[axis], upper[axis]):
            face = sample_box(lower, upper, 64, settings.seed + axis, method="halton")
            face[:, axis] = side
            face_points.append(face)
    eta_faces = [
        float(np.sqrt(max(2 * S.f.value_and_gradient(p)[0] / lam, 0.0)))
        for p in np.concatenate(face_points)
    ]
    reach = min(eta_faces)
    if radii is None:
        radii = radius_grid(float(np.min(eta)), min(rmax or reach, reach), count)
    spacing = float(np.min(np.diff(radii))) / 2 if len(radii) > 1 else 1e-2

    def integrals(r: float) -> tuple[float, float, float]:
        inside = eta < r
        weights = density * inside * box_volume / len(points)
        stderr = box_volume * float(np.std(density * inside)) / np.sqrt(len(points))
        return float(np.sum(weights)), float(np.sum(weights * trace)), stderr

    volumes, trace_integral, stderr, dv, boundary = [], [], [], [], []
    for r in radii:
        V, I, err = integrals(r)
        V_hi, I_hi, _ = integrals(r + spacing)
        V_lo, I_lo, _ = integrals(max(r - spacing, 0.0))
        width = r + spacing - max(r - spacing, 0.0)
        volumes.append(V)
        trace_integral.append(I)
        stderr.append(err)
        dv.append((V_hi - V_lo) / width)
        boundary.append((I_hi - I_lo) / width / (lam * r))
    volumes_arr = np.array(volumes)
    logger.debug(
        "Monte Carlo profile: %d Sobol points (seed %d), reach %.3f",
        len(points), settings.seed, reach,
    )
    return SublevelProfile(
        radii=np.asarray(radii),
        volumes=volumes_arr,
        dvolume_fd=np.gradient(volumes_arr, radii, edge_order=2),
        dvolume_coarea=np.array(dv),
        trace_integral=np.array(trace_integral),
        boundary_trace=np.array(boundary),
        lam=lam,
        n=S.dim,
        backend="monte-carlo",
        shift=S.normalization_constant,
        grad_eta_max=float(max((g for g, e in zip(grad_eta, eta) if e > 0), default=0.0)),
        F_max=float(max(F)),
        stderr=np.array(stderr),
        seed=settings.seed,
        notes=["boundary integrals estimated from shells of half the grid spacing"],
    )


def build_profile(
    S: SolitonData,
    radii: np.ndarray | None = None,
    count: int = 64,
    rmax: float | None = None,
    settings: Settings | None = None,
    backend: str | None = None,
) -> SublevelProfile:
    """Sublevel profile of eta = sqrt(2 f / lambda); raises InapplicableCheck for lambda <= 0."""
    settings = settings or default_settings
    if S.lam <= 0:
        raise InapplicableCheck("sublevel profiles need lambda > 0")
    if radii is not None:
        radii = np.asarray(radii, dtype=float)
    backend = backend or ("product" if S.chart.product is not None else "monte-carlo")
    if backend == "product":
        try:
            return _product_profile(S, count, rmax, radii, settings.tolerance(S.chart.exact))
        except InapplicableCheck as e:
            if "not radial" not in e.reason:
                raise
            logger.warning("Product profile unavailable (%s); using Monte Carlo", e.reason)
    return _monte_carlo_profile(S, count, rmax, radii, settings)


# ============================================================================
# Checks
# ============================================================================


def _profile_tolerance(profile: SublevelProfile, settings: Settings, exact: bool) -> float:
    if profile.regime != Regime.MONTE_CARLO or profile.stderr is None:
        return settings.tolerance(exact)
    relative = profile.stderr / np.maximum(profile.volumes, 1e-300)
    relative = relative[profile.volumes > 0]
    return max(settings.tolerance_fd, 5 * float(np.max(relative, initial=0.0)))


def coarea_identity_check(
    profile: SublevelProfile, settings: Settings | None = None, exact: bool = True
) -> CheckReport:
    """n V - r V' against the trace integrals, the trace-volume inequality and |grad eta| <= 1."""
    settings = settings or default_settings
    tolerance = _profile_tolerance(profile, settings, exact)
    lhs, rhs = profile.identity_sides()
    identity = np.abs(lhs - rhs)
    if profile.regime == Regime.MONTE_CARLO:
        identity = identity / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    trace_gap = -0.5 * profile.trace_integral - profile.lam * profile.n * profile.volumes
    eta_excess = max(0.0, profile.grad_eta_max - 1.0 - ETA_SLACK)
    residuals = np.maximum(identity, np.maximum(np.maximum(trace_gap, 0.0), eta_excess))

    moving = profile.dvolume_coarea > 1e-12
    fd_error = np.abs(profile.dvolume_fd - profile.dvolume_coarea)[moving] / (
        profile.dvolume_coarea[moving]
    )
    fd_max = float(np.max(fd_error, initial=0.0))
    notes = list(profile.notes)
    if len(profile.radii) < 64:
        notes.append("fewer than 64 radii; finite-difference cross-check is indicative only")
    if abs(profile.shift) > 0 or profile.backend == "synthetic":
        notes.append(f"f shifted by {profile.shift:.6g}")
    return CheckReport.from_residuals(
        "coarea",
        residuals,
        tolerance,
        profile.regime,
        details={
            "identity_max": float(np.max(identity)),
            "trace_volume_margin_min": float(np.min(-trace_gap)),
            "grad_eta_max": profile.grad_eta_max,
            "fd_vs_coarea_max": fd_max,
            "fd_cross_check_pass": fd_max <= FD_CROSS_CHECK,
            "volumes_nondecreasing": bool(np.all(np.diff(profile.volumes) >= -tolerance)),
            "G_nondecreasing": bool(np.all(np.diff(profile.G) >= -tolerance)),
            "backend": profile.backend,
            "shift": profile.shift,
            "rmax": float(profile.radii[-1]),
        },
        notes=notes,
    )


def _asymptotic(profile: SublevelProfile) -> np.ndarray:
    return (profile.radii >= 2 * profile.r0) & (profile.volumes > 0)


def _log_slope(radii: np.ndarray, ratio: np.ndarray) -> float:
    half = len(radii) // 2
    return float(np.polyfit(np.log(radii[half:]), np.log(ratio[half:]), 1)[0])


def _constant_chain(lam: float, n: int, r: float) -> dict[str, object]:
    a, b = n / (lam * r * r), n / (n + 2)
    return {"r": r, "n_over_lambda_r2": a, "n_over_n_plus_2": b, "holds": a <= b <= 0.5}


def upper_volume_check(
    profile: SublevelProfile,
    settings: Settings | None = None,
    c: float = 0.0,
    exact: bool = True,
) -> CheckReport:
    """V(r) / r^n bounded for r >= 2 r0: fitted C1 and no upward trend in log-log slope."""
    settings = settings or default_settings
    tolerance = _profile_tolerance(profile, settings, exact)
    if profile.F_max > tolerance:
        return CheckReport.inapplicable(
            "upper_volume",
            "F = |grad f|^2/2 - lambda f is positive somewhere",
            tolerance,
            profile.regime,
            details={"F_max": profile.F_max},
        )
    top = _asymptotic(profile)
    if int(np.sum(top)) < MIN_ASYMPTOTIC_RADII:
        return CheckReport.inapplicable(
            "upper_volume",
            f"radius grid does not reach 2 r0 = {2 * profile.r0:.4g}",
            tolerance,
            profile.regime,
        )
    n, lam = profile.n, profile.lam
    radii, volumes = profile.radii[top], profile.volumes[top]
    shifted = np.interp(radii + c, profile.radii, profile.volumes) if c else volumes
    usable = radii + c <= profile.radii[-1]
    C1 = float(np.max(shifted[usable] / radii[usable] ** n)) if np.any(usable) else None
    slope = _log_slope(radii, volumes / radii**n)

    details: dict[str, object] = {
        "C1": C1,
        "c": c,
        "log_slope": slope,
        "r0": profile.r0,
        "constant_chain": {
            "r0": _constant_chain(lam, n, profile.r0),
            "2r0": _constant_chain(lam, n, 2 * profile.r0),
        },
    }
    if profile.radii[0] <= profile.r0 <= profile.radii[-1]:
        V0 = float(np.interp(profile.r0, profile.radii, profile.volumes))
        beyond = profile.radii >= profile.r0
        r, V, G = profile.radii[beyond], profile.volumes[beyond], profile.G[beyond]
        bound = V0 * (r / profile.r0) ** n + G / (2 * lam**3 * r * r)
        details["intermediate_bound_margin_min"] = float(np.min(bound - V))
    return CheckReport.from_residuals(
        "upper_volume", [max(0.0, slope)], tolerance, profile.regime, details=details
    )


def lower_volume_check(
    profile: SublevelProfile,
    delta: float | None = None,
    settings: Settings | None = None,
    exact: bool = True,
) -> CheckReport:
    """V(r) >= C2 r^(n - delta / (2 lambda^2)) when the average of -lambda tr(q) stays <= delta."""
    settings = settings or default_settings
    tolerance = _profile_tolerance(profile, settings, exact)
    n, lam = profile.n, profile.lam
    top = _asymptotic(profile)
    if int(np.sum(top)) < MIN_ASYMPTOTIC_RADII:
        return CheckReport.inapplicable(
            "lower_volume",
            f"radius grid does not reach 2 r0 = {2 * profile.r0:.4g}",
            tolerance,
            profile.regime,
        )
    radii, volumes = profile.radii[top], profile.volumes[top]
    measured = float(np.max(profile.G[top] / volumes))
    delta = measured if delta is None else delta
    ceiling = 2 * n * lam * lam
    details: dict[str, object] = {"delta": delta, "measured_delta": measured, "ceiling": ceiling}
    if delta >= ceiling:
        return CheckReport.inapplicable(
            "lower_volume",
            f"delta {delta:.4g} is not below 2 n lambda^2 = {ceiling:.4g}",
            tolerance,
            profile.regime,
            details=details,
        )
    if measured > delta + tolerance:
        return CheckReport.inapplicable(
            "lower_volume",
            f"average of -lambda tr(q) reaches {measured:.4g} > delta {delta:.4g}",
            tolerance,
            profile.regime,
            details=details,
        )
    exponent = n - delta / (2 * lam * lam)
    ratio = volumes / radii**exponent
    slope = _log_slope(radii, ratio)
    details.update(exponent=exponent, C2=float(np.min(ratio)), log_slope=slope)
    return CheckReport.from_residuals(
        "lower_volume", [max(0.0, -slope)], tolerance, profile.regime, details=details
    )


# ============================================================================
# Omori-Yau
# ============================================================================


def growth_function(t: np.ndarray | float) -> np.ndarray:
    """G(t) = t^2 + 1."""
    return np.asarray(t, dtype=float) ** 2 + 1.0


def growth_function_conditions(
    G: Callable[[np.ndarray | float], np.ndarray] = growth_function,
) -> dict[str, bool]:
    """Positivity at 0, monotonicity, non-integrable G^(-1/2) and bounded t G(sqrt t) / G(t)."""
    grid = np.linspace(0.0, 1e3, 20001)
    values = G(grid)
    tails = [quad(lambda t: float(G(t)) ** -0.5, 0.0, T, limit=200)[0] for T in (1e2, 1e4, 1e6)]
    t = np.logspace(0, 8, 200)
    ratio = t * G(np.sqrt(t)) / G(t)
    return {
        "positive_at_zero": bool(G(0.0) > 0),
        "nondecreasing": bool(np.all(np.diff(values) >= 0)),
        "inverse_sqrt_not_integrable": bool(tails[2] - tails[1] > 1.0 and tails[1] > tails[0]),
        "ratio_bounded": bool(np.all(np.isfinite(ratio)) and float(np.max(ratio)) < 1e3),
    }


def omori_yau_margins(
    psi: np.ndarray,
    grad_psi: np.ndarray,
    laplacian_psi: np.ndarray,
    r: np.ndarray,
    c1: float,
    A: float = 1.0,
    B: float = 1.0,
) -> dict[str, np.ndarray]:
    """Margins of the Omori-Yau sufficient conditions for psi (nonnegative means satisfied).

    ``lower``: psi - (r - c1)^2 / 4 where r >= c1. ``gradient``: A sqrt(psi) - |grad psi|.
    ``laplacian``: B sqrt(psi) G(sqrt(psi))^(1/2) - Laplacian of psi.
    ``drift``: sqrt(psi + 1) - |grad psi|.
    """
    psi = np.asarray(psi, dtype=float)
    r = np.asarray(r, dtype=float)
    root = np.sqrt(np.maximum(psi, 0.0))
    return {
        "lower": np.where(r >= c1, psi - 0.25 * (r - c1) ** 2, np.inf),
        "gradient": A * root - np.asarray(grad_psi),
        "laplacian": B * root * np.sqrt(growth_function(root)) - np.asarray(laplacian_psi),
        "drift": np.sqrt(psi + 1.0) - np.asarray(grad_psi),
    }


def omori_yau_conditions(
    S: SolitonData,
    c1: float | None,
    points: np.ndarray | None = None,
    settings: Settings | None = None,
) -> CheckReport:
    """Omori-Yau conditions for psi = f outside K = {f < max(1, n/2)}; needs lambda = 1/2."""
    settings = settings or default_settings
    tolerance = settings.tolerance(S.chart.exact)
    if abs(S.lam - 0.5) > 1e-12:
        return CheckReport.inapplicable(
            "omori_yau", "conditions are stated for lambda = 1/2", tolerance, S.regime
        )
    if c1 is None:
        return CheckReport.inapplicable(
            "omori_yau", "lower-bound probe did not pass", tolerance, S.regime
        )
    chart = S.chart
    if points is None:
        lower, upper = chart.domain.sampling_box()
        points = sample_box(lower, upper, settings.growth_samples, settings.seed)

    psi, grad, lap = [], [], []
    for p in points:
        geometry = LocalGeometry(chart, p, 1)
        f = geometry.scalar_field(S.f)
        df = f.grad()
        psi.append(float(f.value))
        grad.append(float(np.sqrt(max(float(geometry.covector_inner(df, df).value), 0.0))))
        lap.append(float(geometry.laplacian(f).value))
    psi_arr, grad_arr = np.array(psi), np.array(grad)
    F = 0.5 * grad_arr**2 - S.lam * psi_arr
    if float(np.max(F)) > tolerance:
        return CheckReport.inapplicable(
            "omori_yau",
            "F = |grad f|^2/2 - lambda f is positive somewhere",
            tolerance,
            S.regime,
            details={"F_max": float(np.max(F))},
        )

    level = max(1.0, S.dim / 2)
    outside = psi_arr >= level
    r = np.array([distance_estimate(chart, chart.anchor, p, settings).value for p in points])
    margins = omori_yau_margins(psi_arr, grad_arr, np.array(lap), r, c1)
    conditions = growth_function_conditions()
    worst = np.min(np.vstack([m for m in margins.values()]), axis=0)[outside]
    residuals = list(np.maximum(0.0, -worst))
    if not all(conditions.values()):
        residuals.append(1.0)
    notes = [f"compact set K = {{f < {level:g}}}"]
    if level > 1.0:
        notes.append(f"K enlarged from {{f < 1}} to {{f < n/2}} for n = {S.dim}")
    return CheckReport.from_residuals(
        "omori_yau",
        residuals,
        tolerance,
        S.regime,
        notes=notes,
        details={
            "compact_set_level": level,
            "excluded_samples": int(np.sum(~outside)),
            "c1": c1,
            **{
                f"{name}_margin_min": float(np.min(m[outside], initial=np.inf))
                for name, m in margins.items()
            },
            "growth_function": conditions,
        },
    )
