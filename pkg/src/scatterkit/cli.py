"""``scatterkit`` command line: file in, CSV + manifest out.

Exit codes: 0 success, 2 input or schema problem, 3 simulation failure, 4 calibration failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

from . import __version__
from .config import GRID_KEYS, load_fit, load_material, load_scene, parse_grid_override
from .errors import CalibrationError, InputError, ParameterError, SimulationError
from .fitting import FitConfig, grid_search_fit, scene_for_dataset, write_fit_result, write_trace
from .hybrid import DistillationWarning, hybrid_distill, write_hybrid_table
from .pdp import (DEFAULT_RESOLUTION_S, DEFAULT_THRESHOLD_DB, DEFAULT_WINDOW_NS, AngularDataset,
                  back_to_back_calibrate, load_measured, write_angular, write_pdp)
from .raytracer import MODELS, angular_spectra, rmse_spectra, simulate, simulate_metal_plate
from .scattering import FACTORS, POLARIZATIONS, MaterialParams

EXIT_OK, EXIT_INPUT, EXIT_SIMULATION, EXIT_CALIBRATION = 0, 2, 3, 4


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, config: dict, inputs: list, outputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [p.name for p in outputs],
        "version": __version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stats_flags(args) -> dict:
    return {"threshold_db": args.threshold_db, "window_ns": args.window_ns, "resolution_ps": args.resolution_ps}


def _pdp_name(angle: float, height: float | None, multi: bool) -> str:
    name = f"pdp_{angle:g}deg"
    if multi and height is not None:
        name += f"_{height:g}m"
    return name + ".csv"


def _write_spectra(out: Path, result, dataset: AngularDataset) -> list[Path]:
    paths = [out / "angular.csv"]
    write_angular(paths[0], dataset)
    multi = dataset.height_m is not None
    for r in result.rx:
        p = out / _pdp_name(r.station.angle_deg, r.station.height_m, multi)
        write_pdp(p, r.pdp, header=("bin_delay_ns", "power_dbm"))
        paths.append(p)
    return paths


# -- commands ----------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    scene, scene_cfg = load_scene(args.scene)
    material, mat_cfg = load_material(args.material)
    res = simulate(scene, material, args.model, args.factor, polarization=args.polarization,
                   resolution_s=args.resolution_ps * 1e-12)
    ds = angular_spectra(res, args.threshold_db, args.window_ns)
    out = _outdir(args.out)
    outputs = _write_spectra(out, res, ds)
    config = {"scene": scene_cfg, "material": mat_cfg, "model": args.model, "factor": args.factor,
              "polarization": args.polarization, **_stats_flags(args)}
    _write_manifest(out, "simulate", config, [args.scene, args.material], outputs)
    print(f"simulated {len(ds)} Rx positions -> {outputs[0]}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    raw = load_measured(args.raw, "freqresp")
    ref = load_measured(args.reference, "freqresp")
    pdp = back_to_back_calibrate(raw, ref, args.floor_rel)
    out = _outdir(args.out)
    path = out / "pdp.csv"
    write_pdp(path, pdp, header=("bin_delay_ns", "power_dbm"))
    _write_manifest(out, "calibrate", {"floor_rel": args.floor_rel}, [args.raw, args.reference], [path])
    print(f"calibrated PDP ({len(pdp)} bins) -> {path}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg, resolved = load_fit(args.config)
    measured = load_measured(args.measured, "angular")
    grid = {GRID_KEYS[k]: list(v) for k, v in cfg.grid.items()}
    for text in args.grid or ():
        name, values = parse_grid_override(text)
        grid[GRID_KEYS[name]] = values
        resolved["grid"][name] = values
    if not grid:
        raise ParameterError("grid is empty; give at least one parameter list")
    model = args.model or cfg.model
    factor = args.factor or cfg.factor
    resolved.update(model=model, factor=factor)
    scene = scene_for_dataset(cfg.scene.build(), measured, cfg.scene.rx.distance_m)
    fit_cfg = FitConfig(model, scene, measured, grid, cfg.base.build(), factor, cfg.polarization,
                        cfg.threshold_db, cfg.window_ns, cfg.resolution_ps * 1e-12)
    result = grid_search_fit(fit_cfg)
    out = _outdir(args.out)
    paths = [out / "fit_result.csv", out / "trace.csv"]
    write_fit_result(paths[0], result)
    write_trace(paths[1], result)
    inputs = [args.config, args.measured] + ([resolved["scene_file"]] if "scene_file" in resolved else [])
    _write_manifest(out, "fit", resolved, inputs, paths)
    b = result.best
    heights = "multi-height" if measured.height_m is not None else "single-plane"
    print(f"{heights} fit over {len(result.trace)} candidates ({result.failed} failed): "
          f"eps_r={b.epsilon_r:g} h_rms={b.h_rms:g} mm T={b.corr_length_T:g} mm alpha_R={b.alpha_R} "
          f"alpha_i={b.alpha_i} lambda={b.lambda_mix:g} smape={result.smape:.6g}")
    return EXIT_OK


def _floats_arg(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def cmd_hybrid(args) -> int:
    inputs = []
    if args.material:
        material, mat_cfg = load_material(args.material)
        inputs.append(args.material)
    else:
        if args.epsilon_r is None or args.h_rms_mm is None or args.corr_length_mm is None:
            raise ParameterError("give --material or all of --epsilon-r, --h-rms-mm, --corr-length-mm")
        material = MaterialParams(args.epsilon_r, h_rms=args.h_rms_mm, corr_length_T=args.corr_length_mm)
        mat_cfg = {"epsilon_r": args.epsilon_r, "h_rms_mm": args.h_rms_mm, "corr_length_mm": args.corr_length_mm}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DistillationWarning)
        entries = hybrid_distill(material, args.frequency_ghz * 1e9, args.angles, args.factor, args.polarization)
    n_warn = sum(issubclass(w.category, DistillationWarning) for w in caught)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _outdir(args.out)
    path = out / "hybrid_table.csv"
    write_hybrid_table(path, entries)
    config = {"material": mat_cfg, "frequency_ghz": args.frequency_ghz, "angles_deg": args.angles,
              "factor": args.factor, "polarization": args.polarization, "warnings": n_warn}
    _write_manifest(out, "hybrid", config, inputs, [path])
    print(f"{len(entries)} hybrid entries -> {path}; warnings: {n_warn}")
    return EXIT_OK


def cmd_validate_metal(args) -> int:
    scene, scene_cfg = load_scene(args.scene)
    res = simulate_metal_plate(scene, resolution_s=args.resolution_ps * 1e-12)
    ds = angular_spectra(res, args.threshold_db, args.window_ns)
    inputs = [args.scene]
    rmse = None
    if args.measured:
        measured = load_measured(args.measured, "angular")
        inputs.append(args.measured)
        rmse = rmse_spectra(measured, ds)
    out = _outdir(args.out)
    outputs = _write_spectra(out, res, ds)
    config = {"scene": scene_cfg, **_stats_flags(args)}
    if rmse is not None:
        config["rmse_db"] = rmse
    _write_manifest(out, "validate-metal", config, inputs, outputs)
    k = max(range(len(ds)), key=lambda i: ds.power_dbm[i])
    print(f"specular peak at {ds.angle_deg[k]:g} deg ({ds.power_dbm[k]:.2f} dBm)")
    if rmse is not None:
        print(f"RMSE vs measured: {rmse:.4f} dB")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------

def _add_stats(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold-db", type=float, default=DEFAULT_THRESHOLD_DB)
    p.add_argument("--window-ns", type=float, default=DEFAULT_WINDOW_NS)
    p.add_argument("--resolution-ps", type=float, default=DEFAULT_RESOLUTION_S * 1e12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatterkit", description="Diffuse-scattering ray tracing and fitting.")
    parser.add_argument("--version", action="version", version=f"scatterkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="angular power / delay-spread spectra for one wall")
    p.add_argument("--scene", required=True)
    p.add_argument("--material", required=True)
    p.add_argument("--model", choices=MODELS, default="bk")
    p.add_argument("--factor", choices=FACTORS, default="beckmann")
    p.add_argument("--polarization", choices=POLARIZATIONS, default="te")
    _add_stats(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="back-to-back calibration of a measured frequency response")
    p.add_argument("--raw", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--floor-rel", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fit", help="grid-search material parameters against a measured angular spectrum")
    p.add_argument("--config", required=True)
    p.add_argument("--measured", required=True)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--factor", choices=FACTORS)
    p.add_argument("--grid", action="append", metavar="NAME=V1,V2",
                   help=f"replace one grid axis; NAME in {', '.join(GRID_KEYS)}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("hybrid", help="distill BK patterns into an ER lobe table")
    p.add_argument("--material")
    p.add_argument("--epsilon-r", type=float)
    p.add_argument("--h-rms-mm", type=float)
    p.add_argument("--corr-length-mm", type=float)
    p.add_argument("--frequency-ghz", type=float, required=True)
    p.add_argument("--angles", type=_floats_arg, default=[20.0, 40.0, 60.0, 80.0])
    p.add_argument("--factor", choices=FACTORS, default="ogilvy")
    p.add_argument("--polarization", choices=POLARIZATIONS, default="te")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hybrid)

    p = sub.add_parser("validate-metal", help="specular-only metal plate spectrum, optional RMSE vs data")
    p.add_argument("--scene", required=True)
    p.add_argument("--measured")
    _add_stats(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_validate_metal)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("threshold_db", "window_ns", "resolution_ps"):
        v = getattr(args, name, None)
        if v is not None and not (math.isfinite(v) and v > 0):
            print(f"error: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except CalibrationError as e:
        bins = f" (bins {list(e.bins)[:20]})" if e.bins else ""
        print(f"calibration error: {e}{bins}", file=sys.stderr)
        return EXIT_CALIBRATION
    except SimulationError as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_SIMULATION
    except (InputError, OSError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
