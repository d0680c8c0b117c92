import json
import subprocess
import sys

import numpy as np
import pytest

from glowgan.camera import MEAN_CRF, camera_project
from glowgan.cli import main, parse_evs
from glowgan.image import quantize_ldr, read_pfm, read_ppm

TINY = {
    "dataset": {"n": 40},
    "train": {"steps": 4, "batch_size": 8, "log_every": 2, "eval_samples": 8},
    "inversion": {"stage1_iters": 8, "stage2_iters": 3},
}


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "c.json").write_text(json.dumps(TINY))
    return tmp_path


def _tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_synth_then_train_zero_steps(workdir):
    assert main(["synth-dataset", "--config", "c.json", "--out", "ds"]) == 0
    assert (workdir / "ds" / "manifest.csv").exists()
    assert len(list((workdir / "ds").glob("*.ppm"))) == 40
    assert main(["train", "--config", "c.json", "--data", "ds", "--out", "run", "--steps", "0"]) == 0
    assert (workdir / "run" / "final.bin").exists()
    assert (workdir / "run" / "trainlog.csv").read_text().startswith("step,g_loss,d_loss")
    cfg = json.loads((workdir / "run" / "config.json").read_text())
    assert cfg["train"]["steps"] == 0


def test_pipeline_is_byte_reproducible(workdir):
    for tag in ("a", "b"):
        assert main(["synth-dataset", "--config", "c.json", "--out", f"{tag}/ds"]) == 0
        assert main(["train", "--config", "c.json", "--data", f"{tag}/ds", "--out", f"{tag}/run"]) == 0
        assert main(["sample", "--ckpt", f"{tag}/run/final.bin", "--n", "3", "--out", f"{tag}/samples"]) == 0
        args = ["invert", "--in", f"{tag}/ds/00002.ppm", "--ckpt", f"{tag}/run/final.bin", "--config", "c.json"]
        assert main(args + ["--restarts", "2", "--out", f"{tag}/inv"]) == 0
        assert main(["interpolate", "--ckpt", f"{tag}/run/final.bin", "--seed1", "1", "--seed2", "2", "--steps", "3", "--out", f"{tag}/interp"]) == 0
    a, b = _tree_bytes(workdir / "a"), _tree_bytes(workdir / "b")
    a.pop("run/config.json"), b.pop("run/config.json")  # records the data path
    assert a.keys() == b.keys() and a == b
    rows = (workdir / "a" / "run" / "trainlog.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["2", "4"]
    assert sorted(p.name for p in (workdir / "a" / "inv").iterdir()) == ["restart_00", "restart_01", "summary.json"]


def test_ev_sweep_single_ev_matches_camera(workdir):
    assert main(["synth-dataset", "--config", "c.json", "--out", "ds", "--n", "2"]) == 0
    assert main(["ev-sweep", "--in", "ds/gt/00000.pfm", "--evs", "0", "--out", "ev"]) == 0
    scene = read_pfm(workdir / "ds" / "gt" / "00000.pfm")
    expected = quantize_ldr(camera_project(scene, 0.0, MEAN_CRF))
    np.testing.assert_array_equal(read_ppm(workdir / "ev" / "ev_+0.ppm").data, expected.data)
    assert main(["ev-sweep", "--in", "ds/gt/00000.pfm", "--evs", "-3..3", "--out", "ev7"]) == 0
    assert len(list((workdir / "ev7").iterdir())) == 7


def test_merge_and_metrics(workdir):
    assert main(["synth-dataset", "--config", "c.json", "--out", "ds", "--n", "2"]) == 0
    scene = read_pfm(workdir / "ds" / "gt" / "00000.pfm")
    assert main(["ev-sweep", "--in", "ds/gt/00000.pfm", "--evs", "-16,-12,-8,-4,0,4", "--out", "stack"]) == 0
    lines = ["path,e"] + [f"ev_{ev:+d}.ppm,{2 * ev}" for ev in (-16, -12, -8, -4, 0, 4)]
    (workdir / "stack" / "stack.csv").write_text("\n".join(lines) + "\n")
    assert main(["merge", "--manifest", "stack/stack.csv", "--out", "merged/r.pfm"]) == 0
    merged = read_pfm(workdir / "merged" / "r.pfm").data
    rel = np.abs(merged - scene.data) / scene.data
    assert np.median(rel) < 0.05  # 8-bit quantization of the stack dominates
    assert main(["metrics", "--images", "merged", "--out", "m"]) == 0
    report = json.loads((workdir / "m" / "metrics.json").read_text())
    assert report["n"] == 1 and report["dr50"] > 5
    assert (workdir / "m" / "histogram.csv").exists()


def test_parse_evs():
    assert parse_evs("-2..1") == [-2.0, -1.0, 0.0, 1.0]
    assert parse_evs("0.5,-1") == [0.5, -1.0]


def test_exit_codes(workdir, capsys):
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert main(["sample", "--out", "x"]) == 1  # missing --ckpt
    assert main(["ev-sweep", "--in", "a.pfm", "--evs", "x..y", "--out", "e"]) == 1
    (workdir / "bad.pfm").write_bytes(b"P6\n1 1\n255\n\0\0\0")
    assert main(["ev-sweep", "--in", "bad.pfm", "--out", "e"]) == 2
    assert main(["sample", "--ckpt", "missing.bin", "--out", "x"]) == 2
    (workdir / "unknown.json").write_text(json.dumps({"nonsense": {}}))
    assert main(["synth-dataset", "--config", "unknown.json", "--out", "d"]) == 1
    assert main(["synth-dataset", "--config", "c.json", "--out", "ds", "--n", "20"]) == 0
    blowup = dict(TINY, train={"steps": 5, "batch_size": 8, "lr_g": 1e200, "lr_d": 1e200, "log_every": 0})
    (workdir / "blowup.json").write_text(json.dumps(blowup))
    assert main(["train", "--config", "blowup.json", "--data", "ds", "--out", "run"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "glowgan.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for name in ("synth-dataset", "train", "sample", "ev-sweep", "invert", "merge", "metrics", "interpolate"):
        assert name in out.stdout
