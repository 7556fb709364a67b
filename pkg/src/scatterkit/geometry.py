"""Scene description and the angle/distance bookkeeping used by the scattering models.

World frame: ``z`` is up, the wall lies in the ``x``-``z`` plane and its normal
points along ``+y`` into the illuminated half-space. Horizontal placement
angles are measured from the wall normal, positive toward ``+x``; the Tx of the
standard arc measurement sits at ``-30`` deg so the specular Rx is at ``+30``.

Angles are radians internally; configuration and file I/O use degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GeometryError, InvalidSceneError, ParameterError

SPEED_OF_LIGHT = 299_792_458.0
_UNIT_TOL = 1e-12


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ParameterError(f"non-finite point {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, a) -> "Point3":
        return cls(float(a[0]), float(a[1]), float(a[2]))


class ScatterAngles(NamedTuple):
    """Angles of one (or, with array fields, many) Tx -> patch -> Rx bounce.

    ``phi_i`` is fixed at pi by construction of the local frame, so it is not
    carried. ``psi_i`` is measured from the direction back toward the Tx, so a
    pure backscatter lobe peaks at ``psi_i == 0``.
    """

    theta_i: float | np.ndarray
    theta_s: float | np.ndarray
    phi_s: float | np.ndarray
    psi_i: float | np.ndarray
    psi_r: float | np.ndarray


@dataclass(frozen=True)
class SurfacePatch:
    center: Point3
    normal: tuple[float, float, float]
    area: float

    def __post_init__(self):
        if not self.area > 0:
            raise ParameterError("patch area must be positive")
        if abs(math.sqrt(sum(c * c for c in self.normal)) - 1.0) > _UNIT_TOL:
            raise ParameterError("patch normal must have unit length")


@dataclass(frozen=True)
class Antenna:
    gain_dbi: float
    hpbw_deg: float
    boresight: tuple[float, float, float] = (0.0, -1.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.hpbw_deg < 180.0:
            raise ParameterError(f"hpbw_deg must be in (0, 180), got {self.hpbw_deg}")
        if not math.isfinite(self.gain_dbi):
            raise ParameterError("gain_dbi must be finite")

    def pointed_at(self, origin: Point3, target: Point3) -> "Antenna":
        d = target.as_array() - origin.as_array()
        d = d / np.linalg.norm(d)
        return Antenna(self.gain_dbi, self.hpbw_deg, tuple(float(c) for c in d))


def antenna_gain_toward(antenna: Antenna, direction) -> float | np.ndarray:
    """Linear gain of a Gaussian main lobe toward ``direction`` (unit vector(s), shape (..., 3)).

    G(theta) = G0 * exp(-4 ln2 (theta / HPBW)^2); the -3 dB point falls at HPBW/2.
    """
    d = np.asarray(direction, dtype=float)
    b = np.asarray(antenna.boresight, dtype=float)
    b = b / np.linalg.norm(b)
    cos_off = np.clip(d @ b, -1.0, 1.0)
    off = np.arccos(cos_off)
    g0 = 10.0 ** (antenna.gain_dbi / 10.0)
    hpbw = math.radians(antenna.hpbw_deg)
    g = g0 * np.exp(-4.0 * math.log(2.0) * (off / hpbw) ** 2)
    return float(g) if np.ndim(g) == 0 else g


@dataclass(frozen=True)
class Wall:
    """Rectangular reflecting surface: ``width`` along ``u_axis``, ``height`` along ``normal x ...``."""

    center: Point3 = Point3(0.0, 0.0, 1.7)
    width: float = 3.0
    height: float = 2.0
    normal: tuple[float, float, float] = (0.0, 1.0, 0.0)
    u_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidSceneError(f"wall extents must be positive, got {self.width} x {self.height}")
        n = np.asarray(self.normal, float)
        u = np.asarray(self.u_axis, float)
        if abs(np.linalg.norm(n) - 1) > _UNIT_TOL or abs(np.linalg.norm(u) - 1) > _UNIT_TOL:
            raise InvalidSceneError("wall normal and u_axis must be unit vectors")
        if abs(n @ u) > 1e-12:
            raise InvalidSceneError("wall u_axis must be orthogonal to the normal")

    @property
    def v_axis(self) -> np.ndarray:
        return np.cross(np.asarray(self.u_axis, float), np.asarray(self.normal, float))

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, p: np.ndarray, tol: float = 1e-12) -> np.ndarray | bool:
        """True for in-plane points within the rectangle (closed)."""
        rel = np.asarray(p, float) - self.center.as_array()
        a = rel @ np.asarray(self.u_axis, float)
        b = rel @ self.v_axis
        return (np.abs(a) <= self.width / 2 + tol) & (np.abs(b) <= self.height / 2 + tol)


def _cells(length: float, max_edge: float) -> int:
    # guard against 0.3/0.1 style round-off pushing an exact ratio over an integer
    return max(1, math.ceil(length / max_edge - 1e-9))


def tessellate(wall: Wall, max_edge_m: float) -> list[SurfacePatch]:
    """Split ``wall`` into a regular grid of equal rectangles no wider than ``max_edge_m``."""
    centers, areas = patch_grid(wall, max_edge_m)
    normal = tuple(float(c) for c in wall.normal)
    return [SurfacePatch(Point3.from_array(c), normal, float(a)) for c, a in zip(centers, areas)]


def patch_grid(wall: Wall, max_edge_m: float) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`tessellate`: ``(centers (N, 3), areas (N,))``."""
    if not max_edge_m > 0:
        raise ParameterError("max_edge_m must be positive")
    if not (wall.width > 0 and wall.height > 0):
        raise InvalidSceneError("wall extents must be positive")
    nu = _cells(wall.width, max_edge_m)
    nv = _cells(wall.height, max_edge_m)
    du = wall.width / nu
    dv = wall.height / nv
    a = (np.arange(nu) + 0.5) * du - wall.width / 2
    b = (np.arange(nv) + 0.5) * dv - wall.height / 2
    A, B = np.meshgrid(a, b, indexing="ij")
    u = np.asarray(wall.u_axis, float)
    v = wall.v_axis
    centers = wall.center.as_array() + A.reshape(-1, 1) * u + B.reshape(-1, 1) * v
    areas = np.full(centers.shape[0], du * dv)
    return centers, areas


def default_patch_edge(frequency_hz: float) -> float:
    """Ten wavelengths, capped at 5 cm."""
    return min(10.0 * SPEED_OF_LIGHT / frequency_hz, 0.05)


def scatter_geometry(tx, centers, normal, rx, u_axis=(1.0, 0.0, 0.0)):
    """Vectorised angles and path lengths for bounces off patches at ``centers``.

    ``centers`` has shape (N, 3) (or (3,)); ``tx`` and ``rx`` are single points.
    Returns ``(ScatterAngles, r_i, r_s)`` with array fields of shape (N,).
    """
    tx = np.asarray(tx, float)
    rx = np.asarray(rx, float)
    c = np.atleast_2d(np.asarray(centers, float))
    n = np.asarray(normal, float)

    to_tx = tx - c
    to_rx = rx - c
    r_i = np.linalg.norm(to_tx, axis=-1)
    r_s = np.linalg.norm(to_rx, axis=-1)
    if np.any(r_i == 0) or np.any(r_s == 0):
        raise GeometryError("Tx or Rx coincides with a patch")
    w_tx = to_tx / r_i[:, None]
    s = to_rx / r_s[:, None]

    cos_ti = w_tx @ n
    cos_ts = s @ n
    if np.any(cos_ti <= 0):
        raise GeometryError("Tx is on or behind the reflecting surface")
    if np.any(cos_ts <= 0):
        raise GeometryError("Rx is on or behind the reflecting surface")

    # local frame: +x points away from the Tx, so the incident azimuth is pi
    tang = w_tx - cos_ti[:, None] * n
    tlen = np.linalg.norm(tang, axis=-1)
    fallback = np.asarray(u_axis, float)
    ex = np.where((tlen > 1e-12)[:, None], -tang / np.maximum(tlen, 1e-300)[:, None], fallback)
    ey = np.cross(n, ex)

    phi_s = np.arctan2(np.einsum("ij,ij->i", s, ey), np.einsum("ij,ij->i", s, ex))
    phi_s = np.where(phi_s <= -np.pi, np.pi, phi_s)

    spec = -w_tx + 2.0 * cos_ti[:, None] * n  # mirror of the propagation direction
    cos_psi_r = np.clip(np.einsum("ij,ij->i", s, spec), -1.0, 1.0)
    cos_psi_i = np.clip(np.einsum("ij,ij->i", s, w_tx), -1.0, 1.0)

    angles = ScatterAngles(
        theta_i=np.arccos(np.clip(cos_ti, -1.0, 1.0)),
        theta_s=np.arccos(np.clip(cos_ts, -1.0, 1.0)),
        phi_s=phi_s,
        psi_i=np.arccos(cos_psi_i),
        psi_r=np.arccos(cos_psi_r),
    )
    return angles, r_i, r_s


def scatter_angles(tx: Point3, patch: SurfacePatch, rx: Point3) -> ScatterAngles:
    """Incidence/scattering angles of the bounce ``tx -> patch -> rx``."""
    ang, _, _ = scatter_geometry(tx.as_array(), patch.center.as_array(), patch.normal, rx.as_array())
    return ScatterAngles(*(float(a[0]) for a in ang))


@dataclass(frozen=True)
class Station:
    """A Tx or Rx: position, antenna, and the (angle, height) label it was placed by."""

    position: Point3
    antenna: Antenna
    angle_deg: float | None = None
    height_m: float | None = None


@dataclass(frozen=True)
class Scene:
    wall: Wall
    tx: Station
    rx: tuple[Station, ...]
    frequency_hz: float
    tx_power_dbm: float = 10.0
    patch_edge_m: float | None = None

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise InvalidSceneError("frequency must be positive")
        if not self.rx:
            raise InvalidSceneError("scene needs at least one Rx position")
        if self.patch_edge_m is not None and not self.patch_edge_m > 0:
            raise InvalidSceneError("patch_edge_m must be positive")
        n = np.asarray(self.wall.normal, float)
        c = self.wall.center.as_array()
        for name, st in [("tx", self.tx)] + [(f"rx[{i}]", r) for i, r in enumerate(self.rx)]:
            if (st.position.as_array() - c) @ n <= 0:
                raise GeometryError(f"{name} is not on the illuminated side of the wall")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def edge(self) -> float:
        return self.patch_edge_m if self.patch_edge_m is not None else default_patch_edge(self.frequency_hz)

    def with_rx(self, rx: Sequence[Station]) -> "Scene":
        return Scene(self.wall, self.tx, tuple(rx), self.frequency_hz, self.tx_power_dbm, self.patch_edge_m)

    def with_edge(self, edge: float | None) -> "Scene":
        return Scene(self.wall, self.tx, self.rx, self.frequency_hz, self.tx_power_dbm, edge)

    def scaled(self, factor: float) -> "Scene":
        """Same scene with every length about the wall center multiplied by ``factor``."""
        c = self.wall.center.as_array()

        def move(p: Point3) -> Point3:
            return Point3.from_array(c + factor * (p.as_array() - c))

        wall = Wall(self.wall.center, self.wall.width * factor, self.wall.height * factor,
                    self.wall.normal, self.wall.u_axis)
        tx = Station(move(self.tx.position), self.tx.antenna, self.tx.angle_deg, self.tx.height_m)
        rx = tuple(Station(move(r.position), r.antenna, r.angle_deg, r.height_m) for r in self.rx)
        edge = None if self.patch_edge_m is None else self.patch_edge_m * factor
        return Scene(wall, tx, rx, self.frequency_hz, self.tx_power_dbm, edge)


def polar_position(wall: Wall, distance_m: float, angle_deg: float, height_m: float) -> Point3:
    """Point ``distance_m`` from the wall center (horizontally) at ``angle_deg`` off the normal."""
    a = math.radians(angle_deg)
    n = np.asarray(wall.normal, float)
    u = np.asarray(wall.u_axis, float)
    p = wall.center.as_array() + distance_m * (math.sin(a) * u + math.cos(a) * n)
    v = wall.v_axis
    p = p + (height_m - wall.center.as_array() @ v) * v
    return Point3.from_array(p)


def place(wall: Wall, antenna: Antenna, distance_m: float, angle_deg: float, height_m: float) -> Station:
    """Station on the polar grid, antenna aimed at the wall center."""
    pos = polar_position(wall, distance_m, angle_deg, height_m)
    return Station(pos, antenna.pointed_at(pos, wall.center), float(angle_deg), float(height_m))


def specular_path(tx, rx, wall: Wall):
    """Image-method reflection point.

    Returns ``(point, theta, length)`` or ``None`` when the mirror point falls off the wall.
    """
    tx = np.asarray(tx, float)
    rx = np.asarray(rx, float)
    n = np.asarray(wall.normal, float)
    c = wall.center.as_array()
    dt = (tx - c) @ n
    dr = (rx - c) @ n
    if dt <= 0 or dr <= 0:
        raise GeometryError("specular path needs Tx and Rx in front of the wall")
    image = tx - 2.0 * dt * n
    t = dt / (dt + dr)
    p = image + t * (rx - image)
    if not wall.contains(p):
        return None
    length = float(np.linalg.norm(rx - image))
    cos_t = dt / float(np.linalg.norm(tx - p))
    return p, math.acos(min(1.0, cos_t)), length
