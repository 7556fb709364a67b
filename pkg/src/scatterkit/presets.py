"""Measurement-campaign constants and the standard scene layouts."""

from __future__ import annotations

from typing import Sequence

from .geometry import Antenna, Scene, Wall, place
from .scattering import MaterialParams

# horn antennas per carrier: (gain dBi, HPBW deg)
HORNS = {
    8e9: (19.4, 18.7),
    12e9: (21.8, 12.5),
    28e9: (15.0, 23.0),
}
BANDWIDTH_HZ = 1.532e9
TX_POWER_DBM = 10.0
DELAY_RESOLUTION_S = 650e-12
FREQUENCIES_HZ = (8e9, 12e9, 28e9)

# fitted surfaces; h_rms and T in mm
MATERIALS = {
    "marble_er": MaterialParams(6.1, h_rms=1.1, alpha_R=1, name="marble_er"),
    "marble_bk": MaterialParams(6.2, h_rms=1.0, corr_length_T=5.0, name="marble_bk"),
    "smooth_er": MaterialParams(6.0, h_rms=4.2, alpha_R=3, name="smooth_er"),
    "smooth_bk": MaterialParams(5.7, h_rms=4.1, corr_length_T=0.8, name="smooth_bk"),
    "brick_er": MaterialParams(10.1, h_rms=8.0, alpha_R=1, alpha_i=4, lambda_mix=0.8, name="brick_er"),
    "brick_bk": MaterialParams(11.5, h_rms=6.5, corr_length_T=2.1, name="brick_bk"),
}
MATERIAL_MODELS = {
    "marble_er": "directive",
    "marble_bk": "bk",
    "smooth_er": "directive",
    "smooth_bk": "bk",
    "brick_er": "backscatter",
    "brick_bk": "bk",
}

ARC_DISTANCE_M = 1.5
TX_HEIGHT_M = 1.7
RX_HEIGHTS_3D_M = (1.7, 1.8, 1.9, 2.0)


def horn(frequency_hz: float) -> Antenna:
    try:
        gain, hpbw = HORNS[float(frequency_hz)]
    except KeyError:
        raise KeyError(f"no horn on record for {frequency_hz / 1e9:g} GHz; give the antenna explicitly") from None
    return Antenna(gain, hpbw)


def arc_angles(incidence_deg: float = 30.0, start: float = -80.0, stop: float = 80.0,
               step: float = 10.0) -> list[float]:
    """Rx arc in ``step`` increments, skipping the slot the Tx occupies (16 positions by default)."""
    n = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(n) if abs(start + i * step + incidence_deg) > 1e-9]


def arc_scene(frequency_hz: float, incidence_deg: float = 30.0, rx_angles: Sequence[float] | None = None,
              rx_heights: Sequence[float] = (TX_HEIGHT_M,), distance_m: float = ARC_DISTANCE_M,
              antenna: Antenna | None = None, wall: Wall | None = None,
              tx_power_dbm: float = TX_POWER_DBM, patch_edge_m: float | None = None) -> Scene:
    """Tx at ``-incidence_deg`` and Rx on a horizontal arc about the wall center, antennas aimed at the center."""
    wall = wall or Wall()
    antenna = antenna or horn(frequency_hz)
    if rx_angles is None:
        rx_angles = arc_angles(incidence_deg)
    tx = place(wall, antenna, distance_m, -incidence_deg, TX_HEIGHT_M)
    rx = tuple(place(wall, antenna, distance_m, a, h) for h in rx_heights for a in rx_angles)
    return Scene(wall, tx, rx, frequency_hz, tx_power_dbm, patch_edge_m)


def generalization_scene(frequency_hz: float, incidence_deg: float, **kw) -> Scene:
    """Rx only at the wall normal (0 deg) and at the specular direction."""
    return arc_scene(frequency_hz, incidence_deg, rx_angles=[0.0, float(incidence_deg)], **kw)
