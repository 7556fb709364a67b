"""Closed-form scattering quantities: Fresnel, roughness attenuation, ER lobes and BK series.

Every function is vectorised over its angle/geometry arguments. Lengths are SI
(metres) at this level; :class:`MaterialParams` carries ``h_rms`` and ``T`` in
millimetres as they appear in configuration files.

Intensities ("lobe values") are ``|E_s|^2`` at the receiver in V^2/m^2 for an
incident-field constant ``e_i_sq`` defined so that ``e_i_sq / (4 pi r_i^2)`` is
the squared peak field at the patch, i.e. ``e_i_sq = 240 pi P_t G_t``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, GeometryError, ParameterError
from .geometry import ScatterAngles

FACTORS = ("beckmann", "ogilvy")
POLARIZATIONS = ("te", "tm", "average")


@dataclass(frozen=True)
class MaterialParams:
    """Surface electromagnetic and roughness parameters (``h_rms``/``T`` in mm)."""

    epsilon_r: float
    h_rms: float = 0.0
    corr_length_T: float = 1.0
    alpha_R: int = 1
    alpha_i: int = 1
    lambda_mix: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not self.epsilon_r >= 1.0:
            raise ParameterError(f"epsilon_r must be >= 1, got {self.epsilon_r}")
        if not self.h_rms >= 0.0:
            raise ParameterError(f"h_rms must be >= 0, got {self.h_rms}")
        if not self.corr_length_T > 0.0:
            raise ParameterError(f"corr_length_T must be > 0, got {self.corr_length_T}")
        object.__setattr__(self, "alpha_R", _lobe_exponent(self.alpha_R, "alpha_R"))
        object.__setattr__(self, "alpha_i", _lobe_exponent(self.alpha_i, "alpha_i"))
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ParameterError(f"lambda_mix must be in [0, 1], got {self.lambda_mix}")

    @property
    def h_rms_m(self) -> float:
        return self.h_rms * 1e-3

    @property
    def corr_length_m(self) -> float:
        return self.corr_length_T * 1e-3

    def replace(self, **changes) -> "MaterialParams":
        return replace(self, **changes)


def _lobe_exponent(value, name: str) -> int:
    if isinstance(value, bool):
        raise ParameterError(f"{name} must be a positive integer")
    if isinstance(value, numbers.Integral):
        v = int(value)
    elif isinstance(value, numbers.Real) and float(value).is_integer():
        v = int(value)
    else:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    if v < 1:
        raise ParameterError(f"{name} must be >= 1, got {v}")
    return v


# -- reflection --------------------------------------------------------------

def fresnel_gamma(epsilon_r, theta_i, polarization: str = "te"):
    """Magnitude of the smooth-surface reflection coefficient of a lossless dielectric."""
    if polarization not in POLARIZATIONS:
        raise ParameterError(f"polarization must be one of {POLARIZATIONS}")
    c = np.cos(theta_i)
    root = np.sqrt(epsilon_r - np.sin(theta_i) ** 2)
    te = np.abs((c - root) / (c + root))
    tm = np.abs((epsilon_r * c - root) / (epsilon_r * c + root))
    if polarization == "te":
        out = te
    elif polarization == "tm":
        out = tm
    else:
        out = np.sqrt(0.5 * (te**2 + tm**2))
    return float(out) if np.ndim(out) == 0 else out


def rayleigh_rho(h_rms, wavenumber_k, theta_i, theta_s, form: str = "consistent"):
    """Specular reduction factor of a Gaussian rough surface.

    ``form="consistent"`` is exp(-g/2) with g = (k h (cos ti + cos ts))^2.
    ``form="printed"`` squares ``k h`` once more inside the parenthesis; it is kept
    for comparison only and is not dimensionally consistent.
    """
    s = np.cos(theta_i) + np.cos(theta_s)
    if form == "consistent":
        x = wavenumber_k * h_rms * s
    elif form == "printed":
        x = wavenumber_k**2 * h_rms**2 * s
    else:
        raise ParameterError("form must be 'consistent' or 'printed'")
    out = np.exp(-0.5 * x**2)
    return float(out) if np.ndim(out) == 0 else out


def scattering_coeff_s(gamma, rho):
    """S = sqrt((1 - rho^2) Gamma^2)."""
    out = np.sqrt(np.clip(1.0 - np.asarray(rho, float) ** 2, 0.0, None) * np.asarray(gamma, float) ** 2)
    return float(out) if np.ndim(out) == 0 else out


# -- ER normalisation ----------------------------------------------------------

def _moment(j: int, theta_i):
    """Hemisphere integral of cos^j of the angle to a direction at zenith ``theta_i``."""
    if j % 2 == 0:
        return 2.0 * math.pi / (j + 1) + 0.0 * np.asarray(theta_i, float)
    s2 = np.sin(theta_i) ** 2
    acc = 0.0
    for w in range((j - 1) // 2 + 1):
        acc = acc + math.comb(2 * w, w) * s2**w / 4.0**w
    return 2.0 * math.pi / (j + 1) * np.cos(theta_i) * acc


def normalization_f(alpha_R, theta_i):
    """Hemisphere integral of ((1 + cos psi)/2)^alpha_R about a lobe axis at zenith ``theta_i``."""
    a = _lobe_exponent(alpha_R, "alpha_R")
    total = 0.0
    for j in range(a + 1):
        total = total + math.comb(a, j) * _moment(j, theta_i)
    out = total / 2.0**a
    return float(out) if np.ndim(out) == 0 else out


def normalization_f_back(alpha_R, alpha_i, lambda_mix, theta_i):
    """Normalisation of the Lambda-weighted forward + backscatter lobe pair."""
    if not 0.0 <= lambda_mix <= 1.0:
        raise ParameterError("lambda_mix must be in [0, 1]")
    _lobe_exponent(alpha_i, "alpha_i")
    if lambda_mix == 1.0:
        return normalization_f(alpha_R, theta_i)
    return lambda_mix * normalization_f(alpha_R, theta_i) + (1.0 - lambda_mix) * normalization_f(alpha_i, theta_i)


# -- ER patterns ---------------------------------------------------------------

def _spread(e_i_sq, s, r_i, r_s):
    return e_i_sq * np.asarray(s, float) ** 2 / (4.0 * math.pi * np.asarray(r_i, float) ** 2 * np.asarray(r_s, float) ** 2)


def er_directive(e_i_sq, s, geom: ScatterAngles, r_i, r_s, dS, alpha_R=1):
    lobe = ((1.0 + np.cos(geom.psi_r)) / 2.0) ** alpha_R
    return _spread(e_i_sq, s, r_i, r_s) * np.cos(geom.theta_i) * dS / normalization_f(alpha_R, geom.theta_i) * lobe


def er_backscatter(e_i_sq, s, geom: ScatterAngles, r_i, r_s, dS, alpha_R=1, alpha_i=1, lambda_mix=1.0):
    e_s0 = _spread(e_i_sq, s, r_i, r_s) * np.cos(geom.theta_i) * dS / normalization_f_back(
        alpha_R, alpha_i, lambda_mix, geom.theta_i)
    fwd = ((1.0 + np.cos(geom.psi_r)) / 2.0) ** alpha_R
    back = ((1.0 + np.cos(geom.psi_i)) / 2.0) ** alpha_i
    return e_s0 * (lambda_mix * fwd + (1.0 - lambda_mix) * back)


def er_lambertian(e_i_sq, s, geom: ScatterAngles, r_i, r_s, dS):
    # cos(theta_s) integrates to pi over the hemisphere
    return _spread(e_i_sq, s, r_i, r_s) * np.cos(geom.theta_i) * dS * np.cos(geom.theta_s) / math.pi


# -- Beckmann-Kirchhoff --------------------------------------------------------

def geometric_factor(theta_i, theta_s, phi_s, factor: str = "beckmann"):
    if factor not in FACTORS:
        raise ParameterError(f"factor must be one of {FACTORS}")
    ci, cs = np.cos(theta_i), np.cos(theta_s)
    denom_sum = ci + cs
    if np.any(denom_sum <= 1e-6):
        raise GeometryError("cos(theta_i) + cos(theta_s) too close to zero for the BK factor")
    f = (1.0 + ci * cs - np.sin(theta_i) * np.sin(theta_s) * np.cos(phi_s)) / (ci * denom_sum)
    if factor == "ogilvy":
        f = f * ci
    return f


def bk_wave_vectors(wavenumber_k, theta_i, theta_s, phi_s):
    """``(v_x, v_y, v_z)`` of the scattering vector."""
    vx = wavenumber_k * (np.sin(theta_i) - np.sin(theta_s) * np.cos(phi_s))
    vy = wavenumber_k * (np.sin(theta_s) * np.sin(phi_s))
    vz = -wavenumber_k * (np.cos(theta_i) + np.cos(theta_s))
    return vx, vy, vz


def bk_series(g, vxy_sq, corr_length, rtol: float = 1e-12, nmax: int = 512):
    """exp(-g) * sum_{n>=1} g^n / (n! n) * exp(-T^2 v_xy^2 / (4 n)).

    Terms are accumulated in log space. A sample stops once the series is past its
    peak and the newest term is below ``rtol`` of the partial sum.
    """
    g, a = np.broadcast_arrays(np.asarray(g, float), np.asarray(vxy_sq, float) * corr_length**2 / 4.0)
    out = np.zeros(g.shape)
    idx = np.flatnonzero(g.ravel() > 0)
    if idx.size == 0:
        return float(out) if out.ndim == 0 else out
    gg = g.ravel()[idx]
    aa = a.ravel()[idx]
    logg = np.log(gg)
    log_total = np.full(gg.shape, -np.inf)
    prev = np.full(gg.shape, -np.inf)
    result = np.empty(gg.shape)
    live = np.arange(gg.size)
    log_rtol = math.log(rtol)
    lfact = 0.0
    for n in range(1, nmax + 1):
        lfact += math.log(n)
        lt = n * logg[live] - lfact - math.log(n) - gg[live] - aa[live] / n
        log_total[live] = np.logaddexp(log_total[live], lt)
        done = (lt <= prev[live]) & (lt < log_rtol + log_total[live])
        prev[live] = lt
        if done.any():
            result[live[done]] = log_total[live[done]]
            live = live[~done]
            if live.size == 0:
                break
    else:
        raise ConvergenceError(
            f"BK series did not converge within {nmax} terms (g up to {gg[live].max():.4g})",
            g=float(gg[live].max()),
        )
    flat = out.ravel()
    flat[idx] = np.exp(result)
    out = flat.reshape(g.shape)
    return float(out) if out.ndim == 0 else out


def bk_pattern(e_i_sq, gamma, h_rms, corr_length_T, wavenumber_k, geom: ScatterAngles, r_i, r_s, dS,
               factor: str = "beckmann", scale: str = "kirchhoff", rtol: float = 1e-12):
    """Diffuse |E_s|^2 of the Beckmann-Kirchhoff model for a Gaussian surface.

    ``scale="kirchhoff"`` uses the dimensionally consistent Kirchhoff prefactor
    ``k^2 cos^2(theta_i) T^2``; ``scale="printed"`` uses ``cos(theta_i) pi T^2``.
    Both share the geometric factor, the exp(-g) weighting and the series.
    """
    ti, ts, ps = geom.theta_i, geom.theta_s, geom.phi_s
    f = geometric_factor(ti, ts, ps, factor)
    vx, vy, vz = bk_wave_vectors(wavenumber_k, ti, ts, ps)
    g = h_rms**2 * vz**2
    series = bk_series(g, vx**2 + vy**2, corr_length_T, rtol=rtol)
    base = e_i_sq * np.asarray(gamma, float) ** 2 / ((4.0 * math.pi) ** 2 * np.asarray(r_i, float) ** 2
                                                     * np.asarray(r_s, float) ** 2)
    if scale == "kirchhoff":
        pre = wavenumber_k**2 * np.cos(ti) ** 2 * corr_length_T**2
    elif scale == "printed":
        pre = np.cos(ti) * math.pi * corr_length_T**2
    else:
        raise ParameterError("scale must be 'kirchhoff' or 'printed'")
    return base * dS * pre * f**2 * series
