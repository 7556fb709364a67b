"""Distill BK scattering patterns into ER-form lobes (S, alpha, theta_p) per incidence angle.

Patterns are far-field, per unit patch area and unit incident intensity:
``p = |E_s|^2 * 4 pi r_i^2 r_s^2 / (e_i_sq dS)``. On that scale the modified
directive lobe reads ``S^2 cos(theta_i) ((1 + cos psi')/2)^alpha / F_alpha(theta_p)``,
with ``psi'`` the angle from the ``theta_p`` direction, so a fitted table plugs
straight into the ER directive model with the lobe axis moved to ``theta_p``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .geometry import SPEED_OF_LIGHT, ScatterAngles
from .scattering import MaterialParams, bk_pattern, fresnel_gamma, normalization_f

ALPHA_MAX = 64
S_STEP = 1e-3
FLAT_RATIO = 1.001
# theta_p search grid (zenith x azimuth) and in-plane fit cut, degrees
SEARCH_THETA_DEG = np.arange(0.0, 90.0, 1.0)
SEARCH_PHI_DEG = np.arange(-30.0, 31.0, 2.0)
FIT_THETA_DEG = np.arange(0.0, 90.0, 1.0)

PatternFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class DistillationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HybridEntry:
    frequency_hz: float
    theta_i_deg: float
    s_eff: float
    alpha_eff: int
    theta_p_deg: float
    smape: float
    degenerate: bool = False


def bk_normalized_pattern(material: MaterialParams, frequency_hz: float, theta_i: float,
                          factor: str = "ogilvy", polarization: str = "te",
                          scale: str = "kirchhoff") -> PatternFn:
    """Normalized BK pattern at incidence ``theta_i`` (rad) as a function of (theta_s, phi_s) in rad."""
    k = 2.0 * math.pi * frequency_hz / SPEED_OF_LIGHT
    gamma = fresnel_gamma(material.epsilon_r, theta_i, polarization)

    def pattern(theta_s, phi_s):
        ts, ps = np.broadcast_arrays(np.asarray(theta_s, float), np.asarray(phi_s, float))
        ti = np.full(ts.shape, float(theta_i))
        geom = ScatterAngles(ti, ts, ps, np.zeros_like(ts), np.zeros_like(ts))
        return bk_pattern(4.0 * math.pi, gamma, material.h_rms_m, material.corr_length_m, k, geom, 1.0, 1.0, 1.0,
                          factor=factor, scale=scale)

    return pattern


def modified_lobe(s, alpha: int, theta_p: float, theta_i: float, theta_s, phi_s):
    """ER-form pattern with the lobe axis tilted to ``theta_p`` in the incidence plane."""
    cos_psi = np.cos(theta_s) * math.cos(theta_p) + np.sin(theta_s) * math.sin(theta_p) * np.cos(phi_s)
    lobe = ((1.0 + cos_psi) / 2.0) ** alpha
    return np.asarray(s, float) ** 2 * math.cos(theta_i) * lobe / normalization_f(alpha, theta_p)


def _smape_rows(model: np.ndarray, target: np.ndarray) -> np.ndarray:
    den = model + target
    return np.mean(np.divide(np.abs(model - target), den, out=np.zeros(den.shape), where=den > 0), axis=-1)


def fit_modified_lobe(pattern: PatternFn, theta_i: float, *, alpha_max: int = ALPHA_MAX, s_step: float = S_STEP):
    """Return ``(S, alpha, theta_p, smape, degenerate)``; angles in rad.

    theta_p is the argmax over the search grid; S and alpha minimize the mean
    SMAPE over the forward in-plane cut, alpha over 1..alpha_max and S over
    multiples of ``s_step`` in [0, 1]. Earlier (smaller) alpha wins ties.
    """
    th = np.radians(SEARCH_THETA_DEG)
    ph = np.radians(SEARCH_PHI_DEG)
    TS, PS = np.meshgrid(th, ph, indexing="ij")
    grid = np.asarray(pattern(TS, PS), float)
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise ParameterError("pattern must be finite and nonnegative")
    peak = grid.max()
    degenerate = not (peak > 0 and peak >= FLAT_RATIO * grid.min())
    if degenerate:
        theta_p = float(theta_i)
    else:
        theta_p = float(th[np.unravel_index(np.argmax(grid), grid.shape)[0]])

    ts = np.radians(FIT_THETA_DEG)
    target = np.asarray(pattern(ts, np.zeros_like(ts)), float)
    s_grid = np.round(np.arange(0, int(round(1.0 / s_step)) + 1) * s_step, 12)
    best = (math.inf, 0.0, 1)
    for alpha in (1,) if degenerate else range(1, alpha_max + 1):
        unit = modified_lobe(1.0, alpha, theta_p, theta_i, ts, 0.0)
        scores = _smape_rows(s_grid[:, None] ** 2 * unit[None, :], target[None, :])
        j = int(np.argmin(scores))
        if scores[j] < best[0]:
            best = (float(scores[j]), float(s_grid[j]), alpha)
    return best[1], best[2], theta_p, best[0], degenerate


def hybrid_distill(bk_params: MaterialParams, frequency_hz: float, theta_i_deg: Sequence[float],
                   factor: str = "ogilvy", polarization: str = "te") -> list[HybridEntry]:
    """One ER-form entry per incidence angle; flat patterns warn and fall back to alpha = 1."""
    if not frequency_hz > 0:
        raise ParameterError("frequency must be positive")
    out = []
    for deg in theta_i_deg:
        if not 0.0 <= deg < 90.0:
            raise ParameterError(f"incidence angle {deg} outside [0, 90)")
        ti = math.radians(deg)
        pattern = bk_normalized_pattern(bk_params, frequency_hz, ti, factor, polarization)
        s, alpha, tp, err, flat = fit_modified_lobe(pattern, ti)
        if flat:
            warnings.warn(f"flat BK pattern at {deg:g} deg; emitting alpha = 1", DistillationWarning, stacklevel=2)
        out.append(HybridEntry(float(frequency_hz), float(deg), s, alpha, math.degrees(tp), err, flat))
    return out


def write_hybrid_table(path, entries: Sequence[HybridEntry]) -> None:
    """Ray-tracer ingestible table, one row per (frequency, incidence angle)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_ghz", "theta_i_deg", "s_eff", "alpha_eff", "theta_p_deg", "smape"])
        for e in entries:
            w.writerow([repr(e.frequency_hz / 1e9), repr(e.theta_i_deg), repr(e.s_eff), e.alpha_eff,
                        repr(e.theta_p_deg), repr(e.smape)])
