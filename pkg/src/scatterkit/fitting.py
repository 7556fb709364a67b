"""Joint power / delay-spread SMAPE objective and exhaustive grid-search parameter fitting."""

from __future__ import annotations

import csv
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, ParameterError, ScatterkitError, SimulationError
from .geometry import Scene, place
from .pdp import DEFAULT_RESOLUTION_S, DEFAULT_THRESHOLD_DB, DEFAULT_WINDOW_NS, AngularDataset, align
from .raytracer import MODELS, angular_spectra, rmse_spectra, simulate
from .scattering import MaterialParams

PARAM_ORDER = ("epsilon_r", "h_rms", "corr_length_T", "alpha_R", "alpha_i", "lambda_mix")
MODEL_PARAMS = {
    "lambertian": ("epsilon_r", "h_rms"),
    "directive": ("epsilon_r", "h_rms", "alpha_R"),
    "backscatter": ("epsilon_r", "h_rms", "alpha_R", "alpha_i", "lambda_mix"),
    "bk": ("epsilon_r", "h_rms", "corr_length_T"),
}


def smape_l(x, y):
    """|x - y| / (x + y), with l(0, 0) = 0."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    s = x + y
    out = np.divide(np.abs(x - y), s, out=np.zeros(np.broadcast(x, y).shape), where=s > 0)
    return float(out) if out.ndim == 0 else out


def objective(measured: AngularDataset, simulated: AngularDataset) -> float:
    """Mean of the per-position delay-spread and linear-power discrepancies."""
    ix = align(measured, simulated)
    n = len(measured)
    if n == 0:
        raise InputError("empty dataset")
    tau = smape_l(measured.delay_spread_ns, simulated.delay_spread_ns[ix])
    pw = smape_l(measured.power_mw, simulated.power_mw[ix])
    return float((np.sum(tau) + np.sum(pw)) / (2 * n))


def scene_for_dataset(template: Scene, dataset: AngularDataset, distance_m: float | None = None) -> Scene:
    """Copy of ``template`` whose Rx set is exactly the dataset's (angle, height) labels.

    Rx sit on the template's arc radius; without height labels they take the Tx height.
    """
    wall = template.wall
    ref = template.rx[0]
    if distance_m is None:
        rel = ref.position.as_array() - wall.center.as_array()
        rel = rel - (rel @ wall.v_axis) * wall.v_axis
        distance_m = float(np.linalg.norm(rel))
    default_h = template.tx.height_m if template.tx.height_m is not None else template.tx.position.z
    heights = dataset.height_m if dataset.height_m is not None else [default_h] * len(dataset)
    rx = [place(wall, ref.antenna, distance_m, float(a), float(h)) for a, h in zip(dataset.angle_deg, heights)]
    return template.with_rx(rx)


@dataclass
class FitConfig:
    model: str
    scene: Scene
    dataset: AngularDataset
    grids: Mapping[str, Sequence[float]]
    base: MaterialParams = field(default_factory=lambda: MaterialParams(epsilon_r=6.0, h_rms=1.0,
                                                                       corr_length_T=5.0))
    factor: str = "beckmann"
    polarization: str = "te"
    threshold_db: float = DEFAULT_THRESHOLD_DB
    window_ns: float = DEFAULT_WINDOW_NS
    resolution_s: float = DEFAULT_RESOLUTION_S

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}")
        unknown = set(self.grids) - set(PARAM_ORDER)
        if unknown:
            raise ParameterError(f"unknown grid parameters {sorted(unknown)}")
        for k, v in self.grids.items():
            if len(v) == 0:
                raise ParameterError(f"grid for {k} is empty")

    def candidates(self) -> list[MaterialParams]:
        """Grid points in lexicographic order of PARAM_ORDER (the tie-break order)."""
        names = [p for p in PARAM_ORDER if p in self.grids or p in MODEL_PARAMS[self.model]]
        values = [list(self.grids[p]) if p in self.grids else [getattr(self.base, p)] for p in names]
        return [self.base.replace(**dict(zip(names, combo)), name="") for combo in itertools.product(*values)]


@dataclass(frozen=True)
class TraceEntry:
    params: MaterialParams
    smape: float
    error: str | None = None


@dataclass(frozen=True)
class FitResult:
    best: MaterialParams
    smape: float
    trace: tuple[TraceEntry, ...]
    model: str = "bk"
    factor: str = "beckmann"

    @property
    def failed(self) -> int:
        return sum(e.error is not None for e in self.trace)


def simulate_dataset(scene: Scene, material: MaterialParams, model: str, factor: str = "beckmann", *,
                     polarization: str = "te", threshold_db: float = DEFAULT_THRESHOLD_DB,
                     window_ns: float = DEFAULT_WINDOW_NS,
                     resolution_s: float = DEFAULT_RESOLUTION_S) -> AngularDataset:
    res = simulate(scene, material, model, factor, polarization=polarization, resolution_s=resolution_s)
    return angular_spectra(res, threshold_db, window_ns)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SCATTERKIT_THREADS", "1")))
    except ValueError:
        return 1


def evaluate_candidate(config: FitConfig, params: MaterialParams) -> TraceEntry:
    try:
        sim = simulate_dataset(config.scene, params, config.model, config.factor,
                               polarization=config.polarization, threshold_db=config.threshold_db,
                               window_ns=config.window_ns, resolution_s=config.resolution_s)
        return TraceEntry(params, objective(config.dataset, sim))
    except InputError:
        raise
    except ScatterkitError as e:
        return TraceEntry(params, math.nan, f"{type(e).__name__}: {e}")


def grid_search_fit(config: FitConfig, threads: int | None = None) -> FitResult:
    """Evaluate every grid point; the first minimum in grid order wins."""
    cands = config.candidates()
    # label mismatch is a config error, not a per-candidate failure
    align(config.dataset, angular_spectra_labels(config.scene))
    n = threads or _threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            trace = list(pool.map(lambda p: evaluate_candidate(config, p), cands))
    else:
        trace = [evaluate_candidate(config, p) for p in cands]
    scores = np.array([e.smape if e.error is None else np.inf for e in trace])
    if not np.isfinite(scores).any():
        raise SimulationError("every candidate failed to simulate")
    i = int(np.argmin(scores))
    return FitResult(trace[i].params, float(scores[i]), tuple(trace), config.model, config.factor)


def angular_spectra_labels(scene: Scene) -> AngularDataset:
    """Label-only dataset (zero power/spread) for alignment checks."""
    heights = [r.height_m for r in scene.rx]
    multi = None not in heights and len(set(heights)) > 1
    z = np.zeros(len(scene.rx))
    return AngularDataset(np.array([r.angle_deg for r in scene.rx], float), z, z,
                          np.array(heights, float) if multi else None)


@dataclass(frozen=True)
class GeneralizationRow:
    incidence_deg: float
    smape: float
    rmse_db: float
    labels: tuple[float, ...]


def evaluate_generalization(fitted: MaterialParams, scenes: Sequence[Scene], datasets: Sequence[AngularDataset],
                            model: str = "bk", factor: str = "beckmann", **sim_kw) -> list[GeneralizationRow]:
    """Score fixed parameters against data taken at other incidence angles, without refitting."""
    if len(scenes) != len(datasets):
        raise InputError("need one dataset per scene")
    rows = []
    for scene, data in zip(scenes, datasets):
        sim = simulate_dataset(scene, fitted, model, factor, **sim_kw)
        inc = -scene.tx.angle_deg if scene.tx.angle_deg is not None else math.nan
        rows.append(GeneralizationRow(float(inc), objective(data, sim), rmse_spectra(data, sim),
                                      tuple(float(a) for a in data.angle_deg)))
    return rows


# -- CSV output ------------------------------------------------------------------------

_PARAM_COLUMNS = ("epsilon_r", "h_rms_mm", "corr_length_mm", "alpha_R", "alpha_i", "lambda_mix")


def _param_row(p: MaterialParams) -> list:
    return [repr(float(p.epsilon_r)), repr(float(p.h_rms)), repr(float(p.corr_length_T)), str(p.alpha_R),
            str(p.alpha_i), repr(float(p.lambda_mix))]


def write_fit_result(path, result: FitResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "factor", *_PARAM_COLUMNS, "smape", "candidates", "failed"])
        w.writerow([result.model, result.factor, *_param_row(result.best), repr(result.smape),
                    len(result.trace), result.failed])


def write_trace(path, result: FitResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", *_PARAM_COLUMNS, "smape", "error"])
        for i, e in enumerate(result.trace):
            w.writerow([i, *_param_row(e.params), repr(e.smape), e.error or ""])
