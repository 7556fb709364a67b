"""Single-bounce ray tracing against one tessellated wall.

Each Rx receives one image-method specular tap plus one diffuse tap per patch.
Field intensities from :mod:`scatterkit.scattering` are converted to received
power through the receive aperture, ``P_r = |E_s|^2 / (2 eta) * G_r lambda^2 / (4 pi)``,
which with ``e_i_sq = 240 pi P_t G_t`` reproduces Friis in free space.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import scattering as sc
from .errors import ParameterError, SpanError
from .geometry import (SPEED_OF_LIGHT, Scene, ScatterAngles, Station, antenna_gain_toward, patch_grid,
                       scatter_geometry, specular_path)
from .pdp import (DEFAULT_RESOLUTION_S, DEFAULT_THRESHOLD_DB, DEFAULT_WINDOW_NS, AngularDataset, Pdp, align,
                  profile_stats)

MODELS = ("lambertian", "directive", "backscatter", "bk")
ETA0 = 120.0 * math.pi
DEFAULT_SPAN_S = 100e-9


class Tap(NamedTuple):
    delay: float  # s
    power: float  # W


@dataclass(frozen=True, eq=False)
class RxResult:
    station: Station
    delays: np.ndarray  # s, ascending
    powers: np.ndarray  # W
    pdp: Pdp
    has_specular: bool

    @property
    def taps(self) -> list[Tap]:
        return [Tap(float(d), float(p)) for d, p in zip(self.delays, self.powers)]

    @property
    def total_power_w(self) -> float:
        return math.fsum(self.powers)

    @property
    def total_power_dbm(self) -> float:
        tot = self.total_power_w
        return 10.0 * math.log10(tot * 1e3) if tot > 0 else -math.inf

    @property
    def rms_delay_spread_ns(self) -> float:
        """Unfiltered RMS spread of the raw tap list."""
        tot = self.total_power_w
        if not tot > 0:
            return 0.0
        t = (self.delays - self.delays[0]) * 1e9
        mean = float(np.dot(self.powers, t)) / tot
        return math.sqrt(max(float(np.dot(self.powers, (t - mean) ** 2)) / tot, 0.0))


@dataclass(frozen=True, eq=False)
class SimResult:
    scene: Scene
    model: str
    factor: str
    rx: tuple[RxResult, ...]
    material: sc.MaterialParams | None = None


@dataclass(frozen=True, eq=False)
class _Prepared:
    """Material-independent geometry of a scene, shape (n_rx, n_patch) unless noted."""

    angles: ScatterAngles
    r_i: np.ndarray
    r_s: np.ndarray
    area: np.ndarray  # (n_patch,)
    g_tx: np.ndarray
    g_rx: np.ndarray
    delays: np.ndarray
    spec: tuple  # per Rx: (theta, length, g_tx, g_rx) or None


@functools.lru_cache(maxsize=16)
def _prepare(scene: Scene) -> _Prepared:
    centers, area = patch_grid(scene.wall, scene.edge)
    n = scene.wall.normal
    tx = scene.tx.position.as_array()
    fields = {k: [] for k in ScatterAngles._fields}
    r_i, r_s, g_tx, g_rx, spec = [], [], [], [], []
    to_patch = centers - tx
    g_tx_row = antenna_gain_toward(scene.tx.antenna, to_patch / np.linalg.norm(to_patch, axis=1, keepdims=True))
    for st in scene.rx:
        rx = st.position.as_array()
        ang, ri, rs = scatter_geometry(tx, centers, n, rx, scene.wall.u_axis)
        for k in ScatterAngles._fields:
            fields[k].append(getattr(ang, k))
        r_i.append(ri)
        r_s.append(rs)
        g_tx.append(g_tx_row)
        back = centers - rx
        g_rx.append(antenna_gain_toward(st.antenna, back / np.linalg.norm(back, axis=1, keepdims=True)))
        sp = specular_path(tx, rx, scene.wall)
        if sp is None:
            spec.append(None)
        else:
            p, theta, length = sp
            gt = antenna_gain_toward(scene.tx.antenna, (p - tx) / np.linalg.norm(p - tx))
            gr = antenna_gain_toward(st.antenna, (p - rx) / np.linalg.norm(p - rx))
            spec.append((theta, length, gt, gr))
    angles = ScatterAngles(*(np.array(fields[k]) for k in ScatterAngles._fields))
    r_i = np.array(r_i)
    r_s = np.array(r_s)
    for a in (*angles, r_i, r_s):
        a.setflags(write=False)
    return _Prepared(angles, r_i, r_s, area, np.array(g_tx), np.array(g_rx), (r_i + r_s) / SPEED_OF_LIGHT,
                     tuple(spec))


def diffuse_field(scene: Scene, material: sc.MaterialParams, model: str, factor: str = "beckmann", *,
                  polarization: str = "te", rayleigh_form: str = "consistent",
                  bk_scale: str = "kirchhoff") -> np.ndarray:
    """``|E_s|^2`` of every (Rx, patch) pair, shape (n_rx, n_patch)."""
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}")
    prep = _prepare(scene)
    ang = prep.angles
    k = scene.wavenumber
    e_i_sq = 240.0 * math.pi * _dbm_to_w(scene.tx_power_dbm) * prep.g_tx
    gamma = sc.fresnel_gamma(material.epsilon_r, ang.theta_i, polarization)
    if model == "bk":
        return sc.bk_pattern(e_i_sq, gamma, material.h_rms_m, material.corr_length_m, k, ang, prep.r_i, prep.r_s,
                             prep.area, factor=factor, scale=bk_scale)
    rho = sc.rayleigh_rho(material.h_rms_m, k, ang.theta_i, ang.theta_s, form=rayleigh_form)
    s = sc.scattering_coeff_s(gamma, rho)
    if model == "lambertian":
        return sc.er_lambertian(e_i_sq, s, ang, prep.r_i, prep.r_s, prep.area)
    if model == "directive":
        return sc.er_directive(e_i_sq, s, ang, prep.r_i, prep.r_s, prep.area, material.alpha_R)
    return sc.er_backscatter(e_i_sq, s, ang, prep.r_i, prep.r_s, prep.area, material.alpha_R, material.alpha_i,
                             material.lambda_mix)


def _dbm_to_w(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def _specular_power(scene: Scene, spec, gamma: float, rho: float) -> tuple[float, float]:
    theta, length, gt, gr = spec
    lam = scene.wavelength
    p = _dbm_to_w(scene.tx_power_dbm) * gt * gr * (lam / (4.0 * math.pi * length)) ** 2 * (gamma * rho) ** 2
    return length / SPEED_OF_LIGHT, p


def _assemble(scene, prep, diffuse_w, spec_taps, resolution_s, span_s):
    out = []
    for i, st in enumerate(scene.rx):
        d = prep.delays[i] if diffuse_w is not None else np.empty(0)
        p = diffuse_w[i] if diffuse_w is not None else np.empty(0)
        sp = spec_taps[i]
        if sp is not None:
            d = np.concatenate([[sp[0]], d])
            p = np.concatenate([[sp[1]], p])
        order = np.argsort(d, kind="stable")
        d, p = d[order], p[order]
        out.append(RxResult(st, d, p, synthesize_pdp(zip(d, p), resolution_s, span_s), sp is not None))
    return tuple(out)


def simulate(scene: Scene, material: sc.MaterialParams, model: str = "bk", factor: str = "beckmann", *,
             polarization: str = "te", rayleigh_form: str = "consistent", bk_scale: str = "kirchhoff",
             resolution_s: float = DEFAULT_RESOLUTION_S, span_s: float = DEFAULT_SPAN_S) -> SimResult:
    """Specular plus diffuse taps for every Rx of ``scene``."""
    if factor not in sc.FACTORS:
        raise ParameterError(f"factor must be one of {sc.FACTORS}")
    prep = _prepare(scene)
    e_sq = diffuse_field(scene, material, model, factor, polarization=polarization,
                         rayleigh_form=rayleigh_form, bk_scale=bk_scale)
    aperture = scene.wavelength**2 / (4.0 * math.pi)
    diffuse_w = e_sq / (2.0 * ETA0) * prep.g_rx * aperture

    k = scene.wavenumber
    spec_taps = []
    for sp in prep.spec:
        if sp is None:
            spec_taps.append(None)
            continue
        theta = sp[0]
        gamma = sc.fresnel_gamma(material.epsilon_r, theta, polarization)
        rho = sc.rayleigh_rho(material.h_rms_m, k, theta, theta, form=rayleigh_form)
        spec_taps.append(_specular_power(scene, sp, gamma, rho))
    rx = _assemble(scene, prep, diffuse_w, spec_taps, resolution_s, span_s)
    return SimResult(scene, model, factor, rx, material)


def simulate_metal_plate(scene: Scene, *, resolution_s: float = DEFAULT_RESOLUTION_S,
                         span_s: float = DEFAULT_SPAN_S) -> SimResult:
    """Specular-only response of a perfectly reflecting, perfectly smooth plate."""
    prep = _prepare(scene)
    spec_taps = [None if sp is None else _specular_power(scene, sp, 1.0, 1.0) for sp in prep.spec]
    return SimResult(scene, "metal", "none", _assemble(scene, prep, None, spec_taps, resolution_s, span_s))


def synthesize_pdp(taps: Iterable, resolution_s: float = DEFAULT_RESOLUTION_S,
                   span_s: float = DEFAULT_SPAN_S) -> Pdp:
    """Accumulate ``(delay, power)`` taps into bins of width ``resolution_s``; bin n starts at n * resolution."""
    if not resolution_s > 0:
        raise ParameterError("resolution must be positive")
    nbins = max(1, math.ceil(span_s / resolution_s - 1e-9))
    arr = np.array([(float(d), float(p)) for d, p in taps], dtype=float).reshape(-1, 2)
    if arr.size == 0:
        return Pdp(np.zeros(nbins), resolution_s, resolution_s / 2)
    delays, powers = arr[:, 0], arr[:, 1]
    if np.any(delays < 0):
        raise SpanError("negative tap delay")
    idx = np.floor(delays / resolution_s).astype(np.int64)
    if np.any(idx >= nbins):
        raise SpanError(f"tap at {delays.max() * 1e9:.3f} ns beyond the {span_s * 1e9:.3f} ns span")
    return Pdp(np.bincount(idx, weights=powers, minlength=nbins), resolution_s, resolution_s / 2)


def angular_spectra(result: SimResult, threshold_db: float = DEFAULT_THRESHOLD_DB,
                    window_ns: float = DEFAULT_WINDOW_NS) -> AngularDataset:
    """Filtered received power and RMS delay spread per Rx position."""
    stats = [profile_stats(r.pdp, threshold_db, window_ns) for r in result.rx]
    angles = [r.station.angle_deg if r.station.angle_deg is not None else float(i) for i, r in enumerate(result.rx)]
    heights = [r.station.height_m for r in result.rx]
    multi_height = None not in heights and len(set(heights)) > 1
    return AngularDataset(np.array(angles), np.array([s[0] for s in stats]), np.array([s[1] for s in stats]),
                          np.array(heights, dtype=float) if multi_height else None)


def rmse_spectra(a: AngularDataset, b: AngularDataset) -> float:
    """RMS difference of the dB power spectra of two datasets on the same label grid."""
    ix = align(a, b)
    diff = a.power_dbm - b.power_dbm[ix]
    if np.all(a.power_dbm == b.power_dbm[ix]):
        return 0.0
    return float(np.sqrt(np.mean(diff**2)))
