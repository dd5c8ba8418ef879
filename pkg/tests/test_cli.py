import numpy as np
import pytest

from mocha_stereo.cli import main
from mocha_stereo.io import read_pfm
from mocha_stereo.metrics import parse_report


@pytest.fixture
def scene_dir(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "s"), "--seed", "2"]) == 0
    return tmp_path / "s"


def test_synth_writes_all_files(scene_dir):
    assert {p.name for p in scene_dir.iterdir()} == {"left.ppm", "right.ppm", "gt.pfm", "mask.pgm"}
    gt, _ = read_pfm(scene_dir / "gt.pfm")
    assert gt.shape == (64, 64)
    assert set(np.unique(gt)) <= {4.0, 8.0, 12.0, 16.0, 20.0, 24.0}


def test_match_with_ground_truth(scene_dir, tmp_path, capsys):
    out = tmp_path / "d.pfm"
    rc = main(["match", "--left", str(scene_dir / "left.ppm"), "--right", str(scene_dir / "right.ppm"),
               "--gt", str(scene_dir / "gt.pfm"), "--mask", str(scene_dir / "mask.pgm"),
               "--out", str(out), "--iters", "2"])
    assert rc == 0
    metrics = parse_report((tmp_path / "d.metrics.txt").read_text())
    assert {"epe", "bad_3.0"} <= set(metrics)
    assert read_pfm(out)[0].shape == (64, 64)


def test_match_is_bitwise_reproducible_in_float64(scene_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dtype = float64\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"d{k}.pfm"
        assert main(["match", "--config", str(cfg), "--left", str(scene_dir / "left.ppm"),
                     "--right", str(scene_dir / "right.ppm"), "--out", str(out), "--seed", "3"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_match_with_rig_file(scene_dir, tmp_path):
    from mocha_stereo.refine import StereoRig, format_rig
    rig = tmp_path / "rig.txt"
    rig.write_text(format_rig(StereoRig.rectified(size=(64, 64))))
    assert main(["match", "--left", str(scene_dir / "left.ppm"), "--right", str(scene_dir / "right.ppm"),
                 "--rig", str(rig), "--out", str(tmp_path / "d.pfm")]) == 0


def test_eval_self_is_zero(scene_dir, capsys):
    gt = str(scene_dir / "gt.pfm")
    assert main(["eval", gt, gt]) == 0
    assert parse_report(capsys.readouterr().out)["epe"] == 0.0


def test_motif_profile(tmp_path, capsys):
    series = tmp_path / "s.txt"
    series.write_text("0 1 0 5 5 0 1 0\n")
    assert main(["motif-profile", str(series), "--L", "3"]) == 0
    assert capsys.readouterr().out.strip() == "motif 0 5 distance 0.0"


def test_gradcheck_and_fit_run(tmp_path, capsys):
    assert main(["gradcheck", "--coords", "2"]) == 0
    disc = float(capsys.readouterr().out.split()[-1])
    assert disc < 1e-3
    bank = tmp_path / "bank.txt"
    assert main(["fit", "--steps", "1", "--scenes", "1", "--out", str(bank)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("step 0 loss") and lines[1].startswith("step 1 loss")
    assert len(bank.read_text().splitlines()) == 4


@pytest.mark.parametrize("argv", [
    ["eval", "missing.pfm", "missing.pfm"],
    ["match", "--left", "nope.ppm", "--right", "nope.ppm", "--out", "x.pfm"],
    ["motif-profile", "SERIES", "--L", "9"],
])
def test_errors_exit_nonzero_with_one_line(tmp_path, capsys, argv):
    series = tmp_path / "s.txt"
    series.write_text("1 2 3 4\n")
    argv = [str(series) if a == "SERIES" else a for a in argv]
    assert main(argv) != 0
    err = capsys.readouterr().err
    assert len(err.strip().splitlines()) == 1 and "error" in err


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("warp_speed = 9\n")
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "warp_speed" in capsys.readouterr().err


def test_truncated_pfm_reports_offset(tmp_path, capsys):
    bad = tmp_path / "bad.pfm"
    bad.write_bytes(b"Pf\n4 4\n-1.0\n" + bytes(10))
    assert main(["eval", str(bad), str(bad)]) == 2
    assert "byte" in capsys.readouterr().err
