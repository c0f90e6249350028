"""
Volume Growth Tests
===================

Sublevel profiles of the shrinking cylinder S^2(sqrt 2) x R^2 have closed forms: with
f = |x|^2 / 4 + 1 the sublevel set {eta < r} is S^2 x B(sqrt(r^2 - 4)), so
V(r) = 8 pi^2 (r^2 - 4).
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from qsoliton.errors import InapplicableCheck
from qsoliton.manifolds import build
from qsoliton.models import Regime, Verdict
from qsoliton.tools.volume import (
    SublevelProfile,
    build_profile,
    coarea_identity_check,
    growth_function_conditions,
    lower_volume_check,
    normalized_soliton,
    omori_yau_conditions,
    omori_yau_margins,
    radius_grid,
    upper_volume_check,
)

PI2 = math.pi**2


@pytest.fixture
def cylinder_profile(cylinder, fast_settings):
    S0, C = normalized_soliton(cylinder.soliton, fast_settings)
    assert C == pytest.approx(0.0, abs=1e-10)
    return build_profile(S0, count=32, rmax=18.0, settings=fast_settings)


# ============================================================================
# Normalization and grids
# ============================================================================


def test_normalization_absorbs_hamilton_constant(fast_settings):
    example = build("cylinder_shrinker", {"a": 0.0})
    S0, C = normalized_soliton(example.soliton, fast_settings)
    assert C == pytest.approx(1.0)
    # f shifts by C / (2 lambda) = 1: back to the a = 1 potential
    assert S0.normalization_constant == pytest.approx(1.0)


def test_normalization_needs_positive_lambda(fast_settings):
    with pytest.raises(InapplicableCheck, match="lambda > 0"):
        normalized_soliton(build("hyperbolic_expander").soliton, fast_settings)


def test_normalization_needs_constant_hamilton_function(gaussian, fast_settings):
    wrong = replace(gaussian.soliton, lam=0.3)
    with pytest.raises(InapplicableCheck, match="cannot be normalized"):
        normalized_soliton(wrong, fast_settings)


def test_radius_grid():
    radii = radius_grid(2.0, 10.0, 4)
    np.testing.assert_allclose(radii, [4.0, 6.0, 8.0, 10.0])
    with pytest.raises(InapplicableCheck, match="does not exceed"):
        radius_grid(2.0, 1.0, 4)


# ============================================================================
# Profiles
# ============================================================================


def test_cylinder_profile_is_closed_form(cylinder_profile):
    profile = cylinder_profile
    assert profile.backend == "product"
    assert profile.regime == Regime.EXACT
    r = profile.radii
    assert r[0] > 2.0
    np.testing.assert_allclose(profile.volumes, 8 * PI2 * (r**2 - 4), rtol=1e-9)
    np.testing.assert_allclose(profile.dvolume_coarea, 16 * PI2 * r, rtol=1e-9)
    np.testing.assert_allclose(profile.boundary_trace, -64 * PI2, rtol=1e-9)
    # G = -lambda int tr(q) = V since tr(q) = -2 and lambda = 1/2
    np.testing.assert_allclose(profile.G, profile.volumes, rtol=1e-9)
    assert profile.F_max == pytest.approx(-0.5)


def test_gaussian_product_profile(gaussian, fast_settings):
    profile = build_profile(gaussian.soliton, radii=[1.0, 2.0, 3.0], settings=fast_settings)
    np.testing.assert_allclose(profile.volumes, math.pi * np.array([1.0, 4.0, 9.0]), rtol=1e-9)


def test_monte_carlo_profile_of_gaussian(gaussian, fast_settings):
    profile = build_profile(
        gaussian.soliton, radii=[2.0, 4.0, 6.0], settings=fast_settings, backend="monte-carlo"
    )
    assert profile.regime == Regime.MONTE_CARLO
    assert profile.seed == fast_settings.seed
    assert profile.volumes[-1] == pytest.approx(36 * math.pi, rel=0.05)
    assert np.all(profile.stderr > 0)


def test_profile_needs_positive_lambda(fast_settings):
    with pytest.raises(InapplicableCheck, match="lambda > 0"):
        build_profile(build("hyperbolic_expander").soliton, settings=fast_settings)


# ============================================================================
# Co-area identity
# ============================================================================


def test_coarea_identity_on_cylinder(cylinder_profile, fast_settings):
    report = coarea_identity_check(cylinder_profile, fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["volumes_nondecreasing"] is True
    assert report.details["G_nondecreasing"] is True
    assert report.details["fd_cross_check_pass"] is True


def test_coarea_identity_fails_without_normalization(fast_settings):
    """With a = 0 the Hamilton constant is 1 and the identity is off by 64 pi^2"""
    example = build("cylinder_shrinker", {"a": 0.0})
    profile = build_profile(example.soliton, count=16, rmax=10.0, settings=fast_settings)
    report = coarea_identity_check(profile, fast_settings)
    assert report.verdict == Verdict.FAIL
    assert report.details["identity_max"] == pytest.approx(64 * PI2, rel=1e-8)


def test_coarea_identity_on_synthetic_profile(fast_settings):
    radii = np.linspace(1.0, 10.0, 40)
    profile = SublevelProfile.synthetic(radii, math.pi * radii**2, lam=0.5, n=2)
    report = coarea_identity_check(profile, fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["backend"] == "synthetic"


# ============================================================================
# Volume growth
# ============================================================================


def test_upper_volume_on_cylinder(cylinder_profile, fast_settings):
    report = upper_volume_check(cylinder_profile, fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["log_slope"] < 0
    assert report.details["C1"] > 0


def test_lower_volume_on_cylinder(cylinder_profile, fast_settings):
    """delta = 1 gives exponent n - delta / (2 lambda^2) = 2 and V / r^2 increases"""
    report = lower_volume_check(cylinder_profile, delta=1.0, settings=fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["exponent"] == pytest.approx(2.0)
    assert report.details["measured_delta"] == pytest.approx(1.0)
    assert report.details["C2"] > 0


@pytest.mark.parametrize(
    "delta,message", [(2.0, "not below"), (0.5, "average of -lambda tr")]
)
def test_lower_volume_preconditions(cylinder_profile, fast_settings, delta, message):
    report = lower_volume_check(cylinder_profile, delta=delta, settings=fast_settings)
    assert report.verdict == Verdict.INAPPLICABLE
    assert message in report.notes[0]


@pytest.mark.parametrize("power,verdict", [(2, Verdict.PASS), (3, Verdict.FAIL)])
def test_upper_volume_on_synthetic_growth(power, verdict, fast_settings):
    radii = np.linspace(1.0, 40.0, 60)
    profile = SublevelProfile.synthetic(radii, radii**power, lam=0.5, n=2)
    assert upper_volume_check(profile, fast_settings).verdict == verdict


@pytest.mark.parametrize("power,verdict", [(2, Verdict.PASS), (1, Verdict.FAIL)])
def test_lower_volume_on_synthetic_growth(power, verdict, fast_settings):
    radii = np.linspace(1.0, 40.0, 60)
    profile = SublevelProfile.synthetic(radii, radii**power, lam=0.5, n=2)
    report = lower_volume_check(profile, delta=0.0, settings=fast_settings)
    assert report.verdict == verdict


def test_volume_checks_need_asymptotic_radii(fast_settings):
    radii = np.linspace(1.0, 3.0, 10)
    profile = SublevelProfile.synthetic(radii, radii**2, lam=0.5, n=2)
    assert upper_volume_check(profile, fast_settings).verdict == Verdict.INAPPLICABLE
    assert lower_volume_check(profile, settings=fast_settings).verdict == Verdict.INAPPLICABLE


# ============================================================================
# Omori-Yau
# ============================================================================


def test_default_growth_function_satisfies_conditions():
    assert all(growth_function_conditions().values())


def test_fast_growth_function_is_rejected():
    conditions = growth_function_conditions(lambda t: (np.asarray(t, dtype=float) ** 2 + 1) ** 2)
    assert conditions["inverse_sqrt_not_integrable"] is False
    assert conditions["positive_at_zero"] is True


def test_omori_yau_margins():
    margins = omori_yau_margins(
        psi=np.array([4.0]),
        grad_psi=np.array([1.0]),
        laplacian_psi=np.array([2.0]),
        r=np.array([6.0]),
        c1=4.0,
    )
    assert margins["lower"][0] == pytest.approx(3.0)
    assert margins["gradient"][0] == pytest.approx(1.0)
    assert margins["laplacian"][0] == pytest.approx(2 * math.sqrt(5) - 2)
    assert margins["drift"][0] == pytest.approx(math.sqrt(5) - 1)


def test_omori_yau_on_gaussian(gaussian, fast_settings):
    report = omori_yau_conditions(gaussian.soliton, 13 / 3, settings=fast_settings)
    assert report.verdict == Verdict.PASS
    assert report.details["compact_set_level"] == 1.0
    assert report.notes == ["compact set K = {f < 1}"]


def test_omori_yau_reports_enlarged_compact_set(fast_settings):
    S = build("gaussian", {"dim": 4, "lambda": 0.5}).soliton
    report = omori_yau_conditions(S, 13 / 3, settings=fast_settings)
    assert report.details["compact_set_level"] == 2.0
    assert "compact set K = {f < 2}" in report.notes
    assert any("enlarged" in note for note in report.notes)


@pytest.mark.parametrize("lam,c1", [(0.5, None), (0.3, 13 / 3)])
def test_omori_yau_preconditions(gaussian, fast_settings, lam, c1):
    S = replace(gaussian.soliton, lam=lam)
    report = omori_yau_conditions(S, c1, settings=fast_settings)
    assert report.verdict == Verdict.INAPPLICABLE
