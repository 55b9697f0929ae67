import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sauna.cli import main
from sauna.grid import ScalarField, load_field, load_mask, save_field

from conftest import GOLDEN_ROW, write_pgm


@pytest.fixture
def row_pgm(tmp_path):
    path = tmp_path / "row.pgm"
    write_pgm(path, np.array([GOLDEN_ROW]) * 255)
    return path


def test_transform_row(tmp_path, row_pgm):
    out = tmp_path / "row.field"
    assert main(["--quiet", "transform", "--mask", str(row_pgm), "--out", str(out)]) == 0
    assert load_field(out).data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]


def test_transform_boundary_only(tmp_path, row_pgm):
    out = tmp_path / "yb.field"
    assert main(["--quiet", "transform", "--mask", str(row_pgm), "--out", str(out), "--no-thickness"]) == 0
    assert load_field(out).data.tolist() == [[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]
    out_t = tmp_path / "yt.field"
    assert main(["--quiet", "transform", "--mask", str(row_pgm), "--out", str(out_t), "--no-boundary"]) == 0
    assert load_field(out_t).data.tolist() == [[-0.5, 0, 0, 0, 0, 0, -0.5]]


def test_transform_render_and_profile(tmp_path, row_pgm):
    args = ["--quiet", "transform", "--mask", str(row_pgm), "--out", str(tmp_path / "f.field"),
            "--render", str(tmp_path / "h.png"), "--profile", str(tmp_path / "p.png"), "--row", "0"]
    assert main(args) == 0
    for name in ("h.png", "p.png"):
        assert (tmp_path / name).read_bytes().startswith(b"\x89PNG")


def test_transform_errors(tmp_path, capsys, row_pgm):
    full = tmp_path / "full.pgm"
    write_pgm(full, np.full((3, 3), 255))
    assert main(["transform", "--mask", str(full), "--out", str(tmp_path / "x.field")]) == 2
    assert "degenerate mask" in capsys.readouterr().err
    assert not (tmp_path / "x.field").exists()
    both = ["transform", "--mask", str(row_pgm), "--out", str(tmp_path / "y.field"), "--no-thickness", "--no-boundary"]
    assert main(both) == 2
    bad_row = ["transform", "--mask", str(row_pgm), "--out", str(tmp_path / "z.field"),
               "--profile", str(tmp_path / "p.png"), "--row", "5"]
    assert main(bad_row) == 2
    assert main(["transform", "--mask", str(tmp_path / "missing.pgm"), "--out", str(tmp_path / "m.field")]) == 1


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["transform", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_loss_json(tmp_path, capsys):
    save_field(ScalarField(np.array([[0.25]]), "prediction"), tmp_path / "p.field")
    save_field(ScalarField(np.array([[0.5]]), "sauna"), tmp_path / "t.field")
    assert main(["loss", "--pred", str(tmp_path / "p.field"), "--target", str(tmp_path / "t.field")]) == 0
    out = capsys.readouterr().out
    rec = json.loads(out)
    assert rec == {"gjml": pytest.approx(0.5 / 1.0), "sfl1": 0.0625, "focal_l1": 0.125,
                   "total": pytest.approx(0.5625)}
    assert '"sfl1": 0.062500' in out


def test_eval_csv(tmp_path):
    save_field(ScalarField(np.array([[0.5, -0.5, 0.5, -0.5]]), "prediction"), tmp_path / "a.field")
    write_pgm(tmp_path / "a.pgm", np.array([[255, 255, 0, 0]]))
    out = tmp_path / "m.csv"
    args = ["eval", "--pred", str(tmp_path / "a.field"), "--gt", str(tmp_path / "a.pgm"), "--out", str(out)]
    assert main(args) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["id"] == "a"
    assert rows[0]["iou"] == "0.333333" and rows[0]["ba"] == "0.500000"
    assert rows[-1]["id"] == "aggregate"
    assert main(["eval", "--pred", str(tmp_path / "a.field"), "--gt"] + [str(tmp_path / "a.pgm")] * 2) == 2


def test_render(tmp_path):
    save_field(ScalarField(np.array([[0.0, 2.0]]), "distance"), tmp_path / "d.field")
    assert main(["render", "--field", str(tmp_path / "d.field"), "--out", str(tmp_path / "d.png"),
                 "--kind", "distance"]) == 0
    assert (tmp_path / "d.png").exists()
    # a distance field is out of range for the default signed kind
    assert main(["render", "--field", str(tmp_path / "d.field"), "--out", str(tmp_path / "e.png")]) == 2


def test_synth_outputs(tmp_path):
    out = tmp_path / "s"
    assert main(["--quiet", "--seed", "5", "synth", "--out", str(out), "--count", "3", "--size", "48"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["count"] == 3
    assert manifest["config"]["size"] == 48
    for k in range(3):
        img = load_field(out / f"img_{k:04d}.field", "image")
        mask = load_mask(out / f"mask_{k:04d}.pgm")
        assert img.shape == mask.shape == (48, 48)
    assert main(["synth", "--out", str(out), "--count", "0"]) == 2


def test_train_demo_small(tmp_path):
    out = tmp_path / "t"
    args = ["--quiet", "--seed", "2", "train-demo", "--out", str(out), "--n-train", "2", "--n-test", "2",
            "--epochs", "3", "--variants", "hard-l1,sauna"]
    assert main(args) == 0
    rows = list(csv.DictReader((out / "comparison.csv").open()))
    assert [r["variant"] for r in rows] == ["hard-l1", "sauna"]
    curves = (out / "loss_curves.csv").read_text().splitlines()
    assert curves[0] == "epoch,hard-l1,sauna"
    assert len(curves) == 1 + 4
    assert (out / "loss_curves.png").exists() and (out / "ablation_iou.png").exists()
    assert main(["train-demo", "--out", str(out), "--variants", "bogus"]) == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SAUNA_THREADS", "x")
    assert main(["synth", "--out", str(tmp_path), "--count", "1", "--size", "32"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sauna", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "transform" in proc.stdout
