"""Power-delay-profile processing: calibration, threshold/window filtering, statistics, CSV I/O.

Linear powers are watts in memory; files store dB referenced to 1 mW.

CSV schemas (one header row, comma separated):

* ``pdp.csv``       -- ``delay_ns,power_db`` (``bin_delay_ns,power_dbm`` accepted as well)
* ``freqresp.csv``  -- ``freq_hz,re,im``
* ``angular.csv``   -- ``angle_deg[,height_m],power_dbm,delay_spread_ns``
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (AlignmentError, CalibrationError, EmptyProfileError, ParameterError, ParseError,
                     SchemaError)

DEFAULT_THRESHOLD_DB = 30.0
DEFAULT_WINDOW_NS = 20.0
DEFAULT_RESOLUTION_S = 650e-12


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    samples: np.ndarray  # complex, K bins
    bandwidth: float  # Hz
    f_start: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size == 0:
            raise ParameterError("frequency response needs K > 0 samples")
        if not self.bandwidth > 0:
            raise ParameterError("bandwidth must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def freqs(self) -> np.ndarray:
        return self.f_start + np.arange(self.samples.size) * self.bandwidth / self.samples.size


@dataclass(frozen=True, eq=False)
class Pdp:
    power: np.ndarray  # linear W per bin
    bin_width: float  # s
    t0: float = 0.0  # delay of bin 0, s

    def __post_init__(self):
        p = np.asarray(self.power, dtype=float)
        if p.ndim != 1:
            raise ParameterError("PDP power must be one-dimensional")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ParameterError("PDP powers must be finite and non-negative")
        if not self.bin_width > 0:
            raise ParameterError("bin width must be positive")
        object.__setattr__(self, "power", p)

    @property
    def delays(self) -> np.ndarray:
        return self.t0 + np.arange(self.power.size) * self.bin_width

    def __len__(self):
        return self.power.size


@dataclass(frozen=True, eq=False)
class AngularDataset:
    """Per-Rx received power (dBm) and RMS delay spread (ns), labelled by angle and optional height."""

    angle_deg: np.ndarray
    power_dbm: np.ndarray
    delay_spread_ns: np.ndarray
    height_m: np.ndarray | None = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.angle_deg, float))
        p = np.atleast_1d(np.asarray(self.power_dbm, float))
        d = np.atleast_1d(np.asarray(self.delay_spread_ns, float))
        h = None if self.height_m is None else np.atleast_1d(np.asarray(self.height_m, float))
        if not (a.size == p.size == d.size) or (h is not None and h.size != a.size):
            raise SchemaError("angular dataset columns have different lengths")
        if np.any(d < 0):
            raise SchemaError("delay spread must be non-negative")
        object.__setattr__(self, "angle_deg", a)
        object.__setattr__(self, "power_dbm", p)
        object.__setattr__(self, "delay_spread_ns", d)
        object.__setattr__(self, "height_m", h)
        keys = self.keys()
        if len(set(keys)) != len(keys):
            raise SchemaError("angular dataset labels must be unique")

    def __len__(self):
        return self.angle_deg.size

    def keys(self, with_height: bool | None = None) -> list[tuple]:
        use_h = self.height_m is not None if with_height is None else with_height
        if use_h and self.height_m is None:
            raise AlignmentError("dataset has no height labels")
        if use_h:
            return [(round(float(a), 6), round(float(h), 6)) for a, h in zip(self.angle_deg, self.height_m)]
        return [(round(float(a), 6),) for a in self.angle_deg]

    @property
    def power_mw(self) -> np.ndarray:
        return 10.0 ** (self.power_dbm / 10.0)

    def subset(self, mask) -> "AngularDataset":
        m = np.asarray(mask, bool)
        return AngularDataset(self.angle_deg[m], self.power_dbm[m], self.delay_spread_ns[m],
                              None if self.height_m is None else self.height_m[m])


def align(a: AngularDataset, b: AngularDataset) -> np.ndarray:
    """Index array ``ix`` such that ``b[ix]`` lines up with ``a`` label by label."""
    with_h = a.height_m is not None and b.height_m is not None
    ka, kb = a.keys(with_h), b.keys(with_h)
    if len(set(ka)) != len(ka) or len(set(kb)) != len(kb):
        raise AlignmentError("labels are not unique once heights are ignored")
    if set(ka) != set(kb):
        missing = sorted(set(ka) ^ set(kb))
        raise AlignmentError(f"angle grids differ at {missing[:5]}")
    pos = {k: i for i, k in enumerate(kb)}
    return np.array([pos[k] for k in ka], dtype=int)


# -- calibration ----------------------------------------------------------------

def back_to_back_calibrate(raw: FrequencyResponse, reference: FrequencyResponse,
                           floor_rel: float = 1e-6) -> Pdp:
    """Remove the sounder response: ``|IDFT(H_raw / G)|^2``."""
    if raw.samples.size != reference.samples.size:
        raise ParameterError(f"K mismatch: raw has {raw.samples.size} bins, reference {reference.samples.size}")
    if not math.isclose(raw.bandwidth, reference.bandwidth, rel_tol=1e-9):
        raise ParameterError("raw and reference bandwidths differ")
    mag = np.abs(reference.samples)
    floor = floor_rel * mag.max() if mag.max() > 0 else math.inf
    bad = np.flatnonzero(mag <= floor)
    if bad.size:
        raise CalibrationError(f"reference response below floor at bins {bad.tolist()[:20]}", bins=bad.tolist())
    h = np.fft.ifft(raw.samples / reference.samples)
    return Pdp(np.abs(h) ** 2, 1.0 / raw.bandwidth)


# -- filtering and statistics -----------------------------------------------------

def threshold_window(pdp: Pdp, threshold_db: float = DEFAULT_THRESHOLD_DB, window_ns: float = DEFAULT_WINDOW_NS,
                     order: str = "window_first") -> Pdp:
    """Keep bins within ``window_ns`` of the peak and no more than ``threshold_db`` below it.

    Both masks are anchored on the global peak bin, which always survives.
    """
    if not threshold_db > 0 or not window_ns > 0:
        raise ParameterError("threshold_db and window_ns must be positive")
    p = pdp.power
    if p.size == 0 or not np.any(p > 0):
        raise EmptyProfileError("PDP has no power")
    k = int(np.argmax(p))
    t = pdp.delays

    def windowed(x):
        return np.where(np.abs(t - t[k]) <= window_ns * 1e-9 * (1 + 1e-12), x, 0.0)

    def thresholded(x):
        return np.where(x >= p[k] * 10.0 ** (-threshold_db / 10.0), x, 0.0)

    if order == "window_first":
        out = thresholded(windowed(p))
    elif order == "threshold_first":
        out = windowed(thresholded(p))
    else:
        raise ParameterError("order must be 'window_first' or 'threshold_first'")
    return Pdp(out, pdp.bin_width, pdp.t0)


def total_power(pdp: Pdp) -> float:
    """Sum of bin powers in dBm."""
    tot = math.fsum(pdp.power)
    if not tot > 0:
        raise EmptyProfileError("PDP has no power")
    return 10.0 * math.log10(tot * 1e3)


def rms_delay_spread(pdp: Pdp) -> float:
    """Power-weighted RMS delay spread in ns."""
    p = pdp.power
    tot = p.sum()
    if not tot > 0:
        raise EmptyProfileError("PDP has no power")
    t = (pdp.delays - pdp.delays[int(np.argmax(p))]) * 1e9  # centred for numerical stability
    mean = (p * t).sum() / tot
    var = (p * (t - mean) ** 2).sum() / tot
    return math.sqrt(max(var, 0.0))


def profile_stats(pdp: Pdp, threshold_db: float = DEFAULT_THRESHOLD_DB,
                  window_ns: float = DEFAULT_WINDOW_NS) -> tuple[float, float]:
    """``(power_dbm, delay_spread_ns)`` after filtering; ``(-inf, 0)`` for an empty profile."""
    if not np.any(pdp.power > 0):
        return -math.inf, 0.0
    f = threshold_window(pdp, threshold_db, window_ns)
    return total_power(f), rms_delay_spread(f)


# -- files -------------------------------------------------------------------------

def _read_rows(path):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror}", path=path) from e
    with fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file", line=1, path=path)
    return path, [c.strip() for c in rows[0][1]], rows[1:]


def _floats(path, lineno, row, ncols):
    if len(row) != ncols:
        raise ParseError(f"expected {ncols} columns, got {len(row)}", line=lineno, path=path)
    try:
        return [float(c) for c in row]
    except ValueError as e:
        raise ParseError(f"non-numeric value ({e})", line=lineno, path=path) from None


_PDP_HEADERS = (["delay_ns", "power_db"], ["bin_delay_ns", "power_dbm"], ["delay_ns", "power_dbm"])


def load_measured(path, kind: str | None = None):
    """Parse a documented CSV into :class:`Pdp`, :class:`FrequencyResponse` or :class:`AngularDataset`.

    ``kind`` ("pdp", "freqresp", "angular") is inferred from the header when omitted.
    """
    path, header, rows = _read_rows(path)
    h = [c.lower() for c in header]
    if kind is None:
        if h in _PDP_HEADERS:
            kind = "pdp"
        elif h == ["freq_hz", "re", "im"]:
            kind = "freqresp"
        elif h and h[0] == "angle_deg":
            kind = "angular"
        else:
            raise SchemaError(f"unrecognised header {header}", line=1, path=path)
    if not rows:
        raise SchemaError("no data rows", line=1, path=path)

    if kind == "pdp":
        if h not in _PDP_HEADERS:
            raise SchemaError(f"PDP header must be delay_ns,power_db; got {header}", line=1, path=path)
        data = np.array([_floats(path, i, r, 2) for i, r in rows])
        t = data[:, 0] * 1e-9
        if t.size > 1:
            dt = np.diff(t)
            step = dt[0]
            if not step > 0 or not np.allclose(dt, step, rtol=1e-6, atol=0):
                bad = int(np.argmax(~np.isclose(dt, step, rtol=1e-6, atol=0))) + 1
                raise SchemaError("delays must be uniformly spaced and increasing", line=rows[bad][0], path=path)
        else:
            step = DEFAULT_RESOLUTION_S
        return Pdp(10.0 ** (data[:, 1] / 10.0) * 1e-3, step, float(t[0]))

    if kind == "freqresp":
        if h != ["freq_hz", "re", "im"]:
            raise SchemaError(f"frequency response header must be freq_hz,re,im; got {header}", line=1, path=path)
        data = np.array([_floats(path, i, r, 3) for i, r in rows])
        f = data[:, 0]
        if f.size < 2:
            raise SchemaError("need at least two frequency bins", line=rows[0][0], path=path)
        df = np.diff(f)
        if not df[0] > 0 or not np.allclose(df, df[0], rtol=1e-6, atol=0):
            raise SchemaError("frequencies must be uniformly spaced and increasing", path=path)
        return FrequencyResponse(data[:, 1] + 1j * data[:, 2], f.size * df[0], float(f[0]))

    if kind == "angular":
        if h == ["angle_deg", "power_dbm", "delay_spread_ns"]:
            has_h = False
        elif h == ["angle_deg", "height_m", "power_dbm", "delay_spread_ns"]:
            has_h = True
        else:
            raise SchemaError(f"angular header must be angle_deg[,height_m],power_dbm,delay_spread_ns; got {header}",
                              line=1, path=path)
        ncol = 4 if has_h else 3
        data = np.array([_floats(path, i, r, ncol) for i, r in rows])
        seen = {}
        for (lineno, _), row in zip(rows, data):
            key = tuple(np.round(row[:2 if has_h else 1], 6))
            if key in seen:
                raise SchemaError(f"duplicate label {key} (first at line {seen[key]})", line=lineno, path=path)
            seen[key] = lineno
            if row[-1] < 0:
                raise SchemaError("negative delay spread", line=lineno, path=path)
        if has_h:
            return AngularDataset(data[:, 0], data[:, 2], data[:, 3], data[:, 1])
        return AngularDataset(data[:, 0], data[:, 1], data[:, 2])

    raise ParameterError(f"unknown kind {kind!r}")


def _fmt(x: float) -> str:
    return repr(float(x))


def _dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w * 1e3) if p_w > 0 else -math.inf


def write_pdp(path, pdp: Pdp, header=("delay_ns", "power_db")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, p in zip(pdp.delays, pdp.power):
            w.writerow([_fmt(t * 1e9), _fmt(_dbm(p))])


def write_freqresp(path, fr: FrequencyResponse):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "re", "im"])
        for f, s in zip(fr.freqs, fr.samples):
            w.writerow([_fmt(f), _fmt(s.real), _fmt(s.imag)])


def write_angular(path, ds: AngularDataset):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if ds.height_m is None:
            w.writerow(["angle_deg", "power_dbm", "delay_spread_ns"])
            for a, p, d in zip(ds.angle_deg, ds.power_dbm, ds.delay_spread_ns):
                w.writerow([_fmt(a), _fmt(p), _fmt(d)])
        else:
            w.writerow(["angle_deg", "height_m", "power_dbm", "delay_spread_ns"])
            for a, h, p, d in zip(ds.angle_deg, ds.height_m, ds.power_dbm, ds.delay_spread_ns):
                w.writerow([_fmt(a), _fmt(h), _fmt(p), _fmt(d)])
