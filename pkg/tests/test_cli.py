import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from scatterkit.cli import main
from scatterkit.fitting import simulate_dataset
from scatterkit.pdp import AngularDataset, FrequencyResponse, load_measured, write_angular, write_freqresp
from scatterkit.presets import MATERIALS, arc_scene

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


@pytest.fixture(scope="module")
def marble_measured(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "marble.csv"
    write_angular(path, simulate_dataset(arc_scene(8e9), MATERIALS["marble_bk"], "bk"))
    return path


# -- simulate ----------------------------------------------------------------------------

def test_simulate_writes_spectra_and_manifest(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main(["simulate", "--scene", str(CONFIGS / "scene_arc_8ghz.yaml"),
                 "--material", str(CONFIGS / "material_marble_bk.yaml"), "--factor", "ogilvy", "--out", str(out)])
    assert code == 0
    rows = _rows(out / "angular.csv")
    assert len(rows) == 16
    assert (out / "pdp_30deg.csv").exists() and (out / "pdp_-80deg.csv").exists()
    assert _rows(out / "pdp_0deg.csv")[0].keys() == {"bin_delay_ns", "power_dbm"}
    m = _manifest(out)
    assert m["command"] == "simulate" and m["config"]["factor"] == "ogilvy"
    assert m["config"]["material"]["preset"] == "marble_bk"
    assert len(m["inputs"]) == 2 and all(len(h) == 64 for h in m["inputs"].values())
    assert "angular.csv" in m["outputs"] and "16 Rx" in capsys.readouterr().out


def test_simulate_rerun_is_byte_identical(tmp_path):
    args = ["simulate", "--scene", str(CONFIGS / "scene_arc_12ghz.yaml"),
            "--material", str(CONFIGS / "material_brick_er.yaml"), "--model", "backscatter"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_simulate_multi_height_file_names(tmp_path):
    out = tmp_path / "sim3d"
    assert main(["simulate", "--scene", str(CONFIGS / "scene_3d_8ghz.yaml"),
                 "--material", str(CONFIGS / "material_brick_er.yaml"), "--model", "directive",
                 "--out", str(out)]) == 0
    assert len(_rows(out / "angular.csv")) == 64
    assert (out / "pdp_30deg_1.9m.csv").exists()


def test_missing_file_exit_2(tmp_path, capsys):
    code = main(["simulate", "--scene", str(tmp_path / "nope.yaml"),
                 "--material", str(CONFIGS / "material_marble_bk.yaml"), "--out", str(tmp_path / "o")])
    assert code == 2 and "input error" in capsys.readouterr().err


def test_schema_error_exit_2_with_line(tmp_path, capsys):
    bad = tmp_path / "scene.yaml"
    bad.write_text("frequency_ghz: 8\nrx:\n  arc: {}\n  colour: red\n")
    code = main(["simulate", "--scene", str(bad), "--material", str(CONFIGS / "material_marble_bk.yaml"),
                 "--out", str(tmp_path / "o")])
    assert code == 2 and ":4" in capsys.readouterr().err


def test_nonpositive_stats_flag_exit_2(tmp_path):
    assert main(["simulate", "--scene", str(CONFIGS / "scene_arc_8ghz.yaml"),
                 "--material", str(CONFIGS / "material_marble_bk.yaml"), "--window-ns", "0",
                 "--out", str(tmp_path / "o")]) == 2


def test_simulation_failure_exit_3(tmp_path, capsys):
    mat = tmp_path / "rough.yaml"
    mat.write_text("epsilon_r: 6.0\nh_rms_mm: 150\ncorr_length_mm: 5\n")
    code = main(["simulate", "--scene", str(CONFIGS / "scene_arc_8ghz.yaml"), "--material", str(mat),
                 "--out", str(tmp_path / "o")])
    assert code == 3 and "simulation error" in capsys.readouterr().err


# -- calibrate ---------------------------------------------------------------------------

def _fr(tmp_path, name, samples, bw=1 / 650e-12):
    p = tmp_path / name
    write_freqresp(p, FrequencyResponse(np.asarray(samples, complex), bw))
    return p


def test_calibrate_loopback_and_delay(tmp_path):
    rng = np.random.default_rng(2)
    k = 128
    g = rng.uniform(0.5, 2, k) * np.exp(1j * rng.uniform(-3, 3, k))
    ref = _fr(tmp_path, "ref.csv", g)
    assert main(["calibrate", "--raw", str(ref), "--reference", str(ref), "--out", str(tmp_path / "a")]) == 0
    pdp = load_measured(tmp_path / "a" / "pdp.csv")
    assert int(np.argmax(pdp.power)) == 0 and pdp.power[0] == pytest.approx(1.0, rel=1e-9)
    f = np.arange(k) * (1 / 650e-12) / k
    raw = _fr(tmp_path, "raw.csv", g * np.exp(-2j * np.pi * f * 6.5e-9))
    assert main(["calibrate", "--raw", str(raw), "--reference", str(ref), "--out", str(tmp_path / "b")]) == 0
    assert int(np.argmax(load_measured(tmp_path / "b" / "pdp.csv").power)) == 10
    assert _manifest(tmp_path / "b")["outputs"] == ["pdp.csv"]


def test_calibrate_length_mismatch_exit_2(tmp_path):
    a = _fr(tmp_path, "a.csv", np.ones(64))
    b = _fr(tmp_path, "b.csv", np.ones(32))
    assert main(["calibrate", "--raw", str(a), "--reference", str(b), "--out", str(tmp_path / "o")]) == 2


def test_calibrate_reference_floor_exit_4(tmp_path, capsys):
    g = np.ones(64, complex)
    g[[5, 7]] = 1e-9
    ref = _fr(tmp_path, "ref.csv", g)
    raw = _fr(tmp_path, "raw.csv", np.ones(64))
    assert main(["calibrate", "--raw", str(raw), "--reference", str(ref), "--out", str(tmp_path / "o")]) == 4
    assert "[5, 7]" in capsys.readouterr().err


# -- fit ---------------------------------------------------------------------------------

def test_fit_recovers_truth_row(tmp_path, marble_measured):
    out = tmp_path / "fit"
    code = main(["fit", "--config", str(CONFIGS / "fit_marble_bk.yaml"), "--measured", str(marble_measured),
                 "--grid", "epsilon_r=6.0,6.2", "--grid", "corr_length_mm=4,5", "--out", str(out)])
    assert code == 0
    best = _rows(out / "fit_result.csv")[0]
    assert (float(best["epsilon_r"]), float(best["h_rms_mm"]), float(best["corr_length_mm"])) == (6.2, 1.0, 5.0)
    assert float(best["smape"]) < 1e-9 and best["candidates"] == "20"
    trace = _rows(out / "trace.csv")
    assert len(trace) == 2 * 5 * 2
    m = _manifest(out)
    assert m["config"]["grid"]["epsilon_r"] == [6.0, 6.2]
    assert any(k.endswith("scene_arc_8ghz.yaml") for k in m["inputs"])


def test_fit_multi_height(tmp_path):
    measured = tmp_path / "brick3d.csv"
    write_angular(measured, simulate_dataset(arc_scene(8e9, rx_heights=(1.7, 1.8, 1.9, 2.0)),
                                             MATERIALS["brick_er"], "backscatter"))
    out = tmp_path / "fit3d"
    code = main(["fit", "--config", str(CONFIGS / "fit_brick_3d.yaml"), "--measured", str(measured),
                 "--grid", "epsilon_r=10.1", "--grid", "h_rms_mm=8", "--out", str(out)])
    assert code == 0
    best = _rows(out / "fit_result.csv")[0]
    assert (float(best["alpha_i"]), float(best["lambda_mix"])) == (4, 0.8)
    assert len(_rows(out / "trace.csv")) == 9


def test_fit_empty_grid_exit_2(tmp_path, marble_measured):
    cfg = tmp_path / "fit.yaml"
    cfg.write_text(f"scene: {CONFIGS / 'scene_arc_8ghz.yaml'}\n")
    assert main(["fit", "--config", str(cfg), "--measured", str(marble_measured), "--out", str(tmp_path / "o")]) == 2
    assert main(["fit", "--config", str(CONFIGS / "fit_marble_bk.yaml"), "--measured", str(marble_measured),
                 "--grid", "h_rms_mm=", "--out", str(tmp_path / "o")]) == 2


def test_fit_places_receivers_at_measured_angles(tmp_path):
    measured = tmp_path / "m.csv"
    write_angular(measured, AngularDataset([0.0, 15.0], [-40.0, -41.0], [1.0, 1.0]))
    out = tmp_path / "o"
    assert main(["fit", "--config", str(CONFIGS / "fit_marble_bk.yaml"), "--measured", str(measured),
                 "--grid", "h_rms_mm=1", "--out", str(out)]) == 0
    assert len(_rows(out / "trace.csv")) == 25


# -- hybrid ------------------------------------------------------------------------------

def test_hybrid_table(tmp_path, capsys):
    out = tmp_path / "hy"
    assert main(["hybrid", "--material", str(CONFIGS / "material_marble_hybrid.yaml"), "--frequency-ghz", "28",
                 "--out", str(out)]) == 0
    rows = _rows(out / "hybrid_table.csv")
    assert [float(r["theta_i_deg"]) for r in rows] == [20, 40, 60, 80]
    assert "warnings: 0" in capsys.readouterr().out
    assert _manifest(out)["config"]["factor"] == "ogilvy"


def test_hybrid_single_angle_inline_params(tmp_path):
    out = tmp_path / "hy1"
    assert main(["hybrid", "--epsilon-r", "6.2", "--h-rms-mm", "1.1", "--corr-length-mm", "5",
                 "--frequency-ghz", "28", "--angles", "45", "--out", str(out)]) == 0
    assert len(_rows(out / "hybrid_table.csv")) == 1


def test_hybrid_flat_pattern_warns_but_succeeds(tmp_path, capsys):
    out = tmp_path / "flat"
    assert main(["hybrid", "--epsilon-r", "6.2", "--h-rms-mm", "0", "--corr-length-mm", "5",
                 "--frequency-ghz", "28", "--angles", "40", "--out", str(out)]) == 0
    cap = capsys.readouterr()
    assert "warnings: 1" in cap.out and "warning:" in cap.err
    assert _rows(out / "hybrid_table.csv")[0]["alpha_eff"] == "1"


def test_hybrid_missing_params_exit_2(tmp_path):
    assert main(["hybrid", "--epsilon-r", "6.2", "--frequency-ghz", "28", "--out", str(tmp_path / "o")]) == 2


# -- validate-metal ----------------------------------------------------------------------

def test_validate_metal_self_rmse_zero(tmp_path, capsys):
    first = tmp_path / "first"
    assert main(["validate-metal", "--scene", str(CONFIGS / "scene_arc_28ghz.yaml"), "--out", str(first)]) == 0
    assert "peak at 30 deg" in capsys.readouterr().out
    second = tmp_path / "second"
    assert main(["validate-metal", "--scene", str(CONFIGS / "scene_arc_28ghz.yaml"),
                 "--measured", str(first / "angular.csv"), "--out", str(second)]) == 0
    assert "RMSE vs measured: 0.0000 dB" in capsys.readouterr().out
    assert _manifest(second)["config"]["rmse_db"] == 0.0


def test_validate_metal_misaligned_exit_2(tmp_path):
    measured = tmp_path / "m.csv"
    write_angular(measured, AngularDataset([0.0, 15.0], [-40.0, -41.0], [1.0, 1.0]))
    assert main(["validate-metal", "--scene", str(CONFIGS / "scene_arc_28ghz.yaml"), "--measured", str(measured),
                 "--out", str(tmp_path / "o")]) == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "scatterkit.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
