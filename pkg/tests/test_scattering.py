import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bk_direct, cos_angle_to, fresnel_te, hemisphere_grid, lobe_integral, mixed_lobe_integral
from scatterkit.errors import ConvergenceError, GeometryError, ParameterError
from scatterkit.geometry import ScatterAngles
from scatterkit.scattering import (MaterialParams, bk_pattern, bk_series, bk_wave_vectors, er_backscatter,
                                   er_directive, er_lambertian, fresnel_gamma, geometric_factor, normalization_f,
                                   normalization_f_back, rayleigh_rho, scattering_coeff_s)

K8 = 2 * math.pi * 8e9 / 299_792_458.0


def _hemisphere_geom(theta_i, T, P):
    """ScatterAngles for every quadrature direction, in the local frame where the Tx sits at azimuth pi."""
    psi_r = np.arccos(np.clip(cos_angle_to(T, P, theta_i, 0.0), -1, 1))
    psi_i = np.arccos(np.clip(cos_angle_to(T, P, theta_i, math.pi), -1, 1))
    phi = np.where(P > math.pi, P - 2 * math.pi, P)
    return ScatterAngles(np.full(T.shape, theta_i), T, phi, psi_i, psi_r)


# -- material --------------------------------------------------------------------------

def test_material_invariants():
    with pytest.raises(ParameterError):
        MaterialParams(0.5)
    with pytest.raises(ParameterError):
        MaterialParams(4.0, h_rms=-1.0)
    with pytest.raises(ParameterError):
        MaterialParams(4.0, corr_length_T=0.0)
    with pytest.raises(ParameterError):
        MaterialParams(4.0, alpha_R=1.5)
    with pytest.raises(ParameterError):
        MaterialParams(4.0, alpha_i=0)
    with pytest.raises(ParameterError):
        MaterialParams(4.0, lambda_mix=1.2)
    assert MaterialParams(4.0, alpha_R=3.0).alpha_R == 3
    assert MaterialParams(4.0, h_rms=2.0).h_rms_m == pytest.approx(2e-3)


# -- Fresnel, Rayleigh, S ----------------------------------------------------------------

@pytest.mark.parametrize("pol", ["te", "tm", "average"])
@pytest.mark.parametrize("theta", [0.0, 0.4, 1.2])
def test_fresnel_limits(pol, theta):
    assert fresnel_gamma(1e9, theta, pol) == pytest.approx(1.0, abs=1e-3)
    assert fresnel_gamma(1.0, theta, pol) == pytest.approx(0.0, abs=1e-12)


def test_fresnel_normal_incidence_marble():
    expected = (math.sqrt(6.2) - 1) / (math.sqrt(6.2) + 1)
    assert expected == pytest.approx(0.4266, abs=5e-4)  # exact value 0.42693
    for pol in ("te", "tm", "average"):
        assert fresnel_gamma(6.2, 0.0, pol) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 50.0), st.floats(0.0, 1.55))
def test_fresnel_te_matches_hand_formula(eps, theta):
    g = fresnel_gamma(eps, theta, "te")
    assert 0.0 <= g <= 1.0
    assert g == pytest.approx(fresnel_te(eps, theta), rel=1e-12, abs=1e-15)


def test_fresnel_rejects_unknown_polarization():
    with pytest.raises(ParameterError):
        fresnel_gamma(4.0, 0.1, "circular")


def test_rayleigh_examples():
    assert rayleigh_rho(0.0, K8, 0.3, 0.7) == 1.0
    assert K8 == pytest.approx(167.6, abs=0.1)
    t = math.radians(30)
    assert rayleigh_rho(1e-3, K8, t, t) == pytest.approx(math.exp(-0.5 * (K8 * 1e-3 * 2 * math.cos(t)) ** 2))
    assert rayleigh_rho(1e-3, K8, t, t) == pytest.approx(0.9587, abs=1e-4)
    printed = rayleigh_rho(1e-3, K8, t, t, form="printed")
    assert printed == pytest.approx(math.exp(-0.5 * (K8**2 * 1e-6 * 2 * math.cos(t)) ** 2))
    with pytest.raises(ParameterError):
        rayleigh_rho(1e-3, K8, t, t, form="other")


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 0.01), st.floats(0, 0.01), st.floats(0, 1.5), st.floats(0, 1.5))
def test_rayleigh_symmetric_and_monotone(h1, h2, a, b):
    r = rayleigh_rho(h1, K8, a, b)
    assert 0.0 < r <= 1.0 or (r == 0.0 and K8 * h1 * 2 > 30)
    assert r == pytest.approx(rayleigh_rho(h1, K8, b, a), rel=1e-14)
    lo, hi = sorted((h1, h2))
    assert rayleigh_rho(hi, K8, a, b) <= rayleigh_rho(lo, K8, a, b)
    # larger cos sum -> smaller rho
    assert rayleigh_rho(h1, K8, min(a, b), min(a, b)) <= rayleigh_rho(h1, K8, max(a, b), max(a, b))


def test_scattering_coefficient_examples():
    assert scattering_coeff_s(0.7, 1.0) == 0.0
    assert scattering_coeff_s(0.0, 0.4) == 0.0
    assert scattering_coeff_s(0.5, 0.8) == pytest.approx(0.3, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 1), st.floats(1e-6, 1))
def test_s_bounded_by_gamma(gamma, rho):
    s = scattering_coeff_s(gamma, rho)
    assert 0.0 <= s <= gamma + 1e-15


# -- normalization ---------------------------------------------------------------------

def test_normalization_hand_values():
    assert normalization_f(1, 0.0) == pytest.approx(1.5 * math.pi, rel=1e-14)
    assert normalization_f(1, math.radians(60)) == pytest.approx(1.25 * math.pi, rel=1e-14)
    with pytest.raises(ParameterError):
        normalization_f(2.5, 0.1)


@pytest.mark.parametrize("alpha", [1, 2, 5, 10, 25])
@pytest.mark.parametrize("theta_deg", [0, 30, 60, 85])
def test_normalization_matches_quadrature(alpha, theta_deg):
    t = math.radians(theta_deg)
    assert normalization_f(alpha, t) == pytest.approx(lobe_integral(alpha, t), rel=1e-6)


def test_normalization_back_examples():
    t = math.radians(30)
    for ai in (1, 4, 9):
        assert normalization_f_back(3, ai, 1.0, t) == normalization_f(3, t)
    assert normalization_f_back(2, 1, 0.0, 0.0) == pytest.approx(1.5 * math.pi, rel=1e-14)
    assert normalization_f_back(2, 2, 0.5, t) == pytest.approx(mixed_lobe_integral(2, 2, 0.5, t), rel=1e-4)


def test_normalization_vectorized():
    th = np.radians([0.0, 20.0, 70.0])
    np.testing.assert_allclose(normalization_f(4, th), [normalization_f(4, float(x)) for x in th], rtol=1e-15)


# -- ER lobes ----------------------------------------------------------------------------

def _single(theta_i=0.5, theta_s=0.5, phi_s=0.0, psi_i=1.0, psi_r=0.0):
    return ScatterAngles(theta_i, theta_s, phi_s, psi_i, psi_r)


def test_directive_lobe_peak_and_null():
    peak = er_directive(1.0, 0.5, _single(psi_r=0.0), 1.0, 1.0, 1e-4, 3)
    other = er_directive(1.0, 0.5, _single(psi_r=0.3), 1.0, 1.0, 1e-4, 3)
    null = er_directive(1.0, 0.5, _single(psi_r=math.pi), 1.0, 1.0, 1e-4, 3)
    assert peak > other > 0
    assert null == pytest.approx(0.0, abs=1e-30)
    expected = 1.0 * 0.25 / (4 * math.pi) * math.cos(0.5) * 1e-4 / normalization_f(3, 0.5)
    assert peak == pytest.approx(expected, rel=1e-14)


def test_inverse_square_law():
    g = _single(psi_r=0.2)
    base = er_directive(2.0, 0.4, g, 1.0, 1.5, 1e-3, 2)
    assert er_directive(2.0, 0.4, g, 1.0, 3.0, 1e-3, 2) == pytest.approx(base / 4, rel=1e-14)


def test_backscatter_back_lobe_peak():
    g = _single(psi_i=0.0, psi_r=1.2)
    pure = er_backscatter(1.0, 0.5, g, 1.0, 1.0, 1.0, 1, 7, 0.0)
    e_s0 = 0.25 / (4 * math.pi) * math.cos(0.5) / normalization_f_back(1, 7, 0.0, 0.5)
    assert pure == pytest.approx(e_s0, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1.5), st.floats(0, 1.5), st.floats(-3.1, 3.1), st.floats(0, math.pi), st.floats(0, math.pi),
       st.integers(1, 20), st.integers(1, 20))
def test_backscatter_reduces_to_directive(ti, ts, ps, pi_, pr, ar, ai):
    g = ScatterAngles(ti, ts, ps, pi_, pr)
    a = er_backscatter(3.0, 0.6, g, 1.2, 0.8, 1e-3, ar, ai, 1.0)
    b = er_directive(3.0, 0.6, g, 1.2, 0.8, 1e-3, ar)
    assert a == pytest.approx(b, rel=1e-12, abs=0)


def test_backscatter_energy_budget():
    """alpha_R=1, alpha_i=10, Lambda=0.2: hemisphere power equals S^2 cos(theta_i)."""
    ti = math.radians(30)
    T, P, W = hemisphere_grid()
    geom = _hemisphere_geom(ti, T, P)
    s = 0.6
    # e_i_sq = 4 pi and unit distances make the prefactor S^2 cos(ti) / F
    pat = er_backscatter(4 * math.pi, s, geom, 1.0, 1.0, 1.0, 1, 10, 0.2)
    assert float(np.sum(W * pat)) == pytest.approx(s**2 * math.cos(ti), rel=1e-3)
    back = er_backscatter(4 * math.pi, s, geom, 1.0, 1.0, 1.0, 1, 10, 0.2)
    fwd_only = er_directive(4 * math.pi, s, geom, 1.0, 1.0, 1.0, 1)
    # back-lobe dominated toward the Tx
    k = np.unravel_index(np.argmax(back), back.shape)
    assert geom.psi_i[k] < geom.psi_r[k]
    assert float(np.sum(W * fwd_only)) == pytest.approx(s**2 * math.cos(ti), rel=1e-3)


def test_lambertian_normalized_and_shape():
    ti = math.radians(40)
    T, P, W = hemisphere_grid()
    pat = er_lambertian(4 * math.pi, 1.0, _hemisphere_geom(ti, T, P), 1.0, 1.0, 1.0) / math.cos(ti)
    assert float(np.sum(W * pat)) == pytest.approx(1.0, rel=1e-4)
    g = lambda ts: _single(theta_i=ti, theta_s=ts)
    assert er_lambertian(1.0, 0.5, g(math.pi / 2), 1.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert er_lambertian(1.0, 0.5, g(0.0), 1.0, 1.0, 1.0) > er_lambertian(1.0, 0.5, g(0.3), 1.0, 1.0, 1.0)


# -- Beckmann-Kirchhoff ------------------------------------------------------------------

def _arc_geom(theta_i_deg=30.0):
    ts = np.radians(np.arange(0.0, 81.0, 10.0))
    n = ts.size
    return ScatterAngles(np.full(n, math.radians(theta_i_deg)), ts, np.zeros(n), np.zeros(n), np.zeros(n))


def test_bk_smooth_surface_is_zero():
    out = bk_pattern(1.0, 0.4, 0.0, 5e-3, K8, _arc_geom(), 1.5, 1.5, 1e-3)
    assert np.all(out == 0.0)


def test_bk_specular_wave_vector_vanishes():
    t = math.radians(35)
    vx, vy, vz = bk_wave_vectors(K8, t, t, 0.0)
    assert vx == pytest.approx(0.0, abs=1e-12) and vy == pytest.approx(0.0, abs=1e-12)
    assert vz == pytest.approx(-2 * K8 * math.cos(t))
    # at the specular point every exponential factor is 1 and the series is a plain sum
    g = 0.3
    plain = math.exp(-g) * sum(g**n / (math.factorial(n) * n) for n in range(1, 60))
    assert bk_series(g, 0.0, 5e-3) == pytest.approx(plain, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1.4), st.floats(0, 1.4), st.floats(-3.1, 3.1))
def test_ogilvy_is_beckmann_times_cos2(ti, ts, ps):
    g = ScatterAngles(np.array([ti]), np.array([ts]), np.array([ps]), np.zeros(1), np.zeros(1))
    b = bk_pattern(2.0, 0.5, 1e-3, 5e-3, K8, g, 1.3, 1.7, 1e-3, factor="beckmann")
    o = bk_pattern(2.0, 0.5, 1e-3, 5e-3, K8, g, 1.3, 1.7, 1e-3, factor="ogilvy")
    assert o[0] == pytest.approx(b[0] * math.cos(ti) ** 2, rel=1e-12, abs=0)
    assert np.isfinite(b).all() and (b >= 0).all()


def test_bk_matches_high_precision_oracle():
    geom = _arc_geom()
    gamma = fresnel_gamma(6.2, math.radians(30))
    ours = bk_pattern(5.0, gamma, 1e-3, 5e-3, K8, geom, 1.5, 1.6, 2.5e-3)
    for j in range(len(geom.theta_s)):
        ref = bk_direct(5.0, gamma, 1e-3, 5e-3, K8, geom.theta_i[j], geom.theta_s[j], 0.0, 1.5, 1.6, 2.5e-3)
        assert ours[j] == pytest.approx(ref, rel=1e-9)


def test_bk_smooth_limit_monotone():
    g = _arc_geom()
    vals = [bk_pattern(1.0, 0.4, h, 5e-3, K8, g, 1.0, 1.0, 1.0) for h in (4e-3, 2e-3, 1e-3, 5e-4, 1e-4, 0.0)]
    for a, b in zip(vals, vals[1:]):
        assert np.all(b <= a)
    assert np.all(vals[-1] == 0)


def test_bk_series_convergence_error_reports_g():
    with pytest.raises(ConvergenceError) as info:
        bk_series(2000.0, 0.0, 1e-3)
    assert info.value.g == pytest.approx(2000.0)


def test_bk_factor_guard_and_options():
    with pytest.raises(GeometryError):
        geometric_factor(math.pi / 2, math.pi / 2, 0.0)
    with pytest.raises(ParameterError):
        geometric_factor(0.1, 0.1, 0.0, "kirchhoff")
    with pytest.raises(ParameterError):
        bk_pattern(1.0, 0.4, 1e-3, 5e-3, K8, _arc_geom(), 1.0, 1.0, 1.0, scale="other")
    printed = bk_pattern(1.0, 0.4, 1e-3, 5e-3, K8, _arc_geom(), 1.0, 1.0, 1.0, scale="printed")
    kirch = bk_pattern(1.0, 0.4, 1e-3, 5e-3, K8, _arc_geom(), 1.0, 1.0, 1.0)
    ratio = printed / kirch
    assert ratio == pytest.approx(np.full_like(ratio, math.pi / (K8**2 * math.cos(math.radians(30)))), rel=1e-12)
