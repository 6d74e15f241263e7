import filecmp
import json
import os

import numpy as np
import pytest

from diversort.appearance import FREQ_SLICE, write_ppm
from diversort.cli import main


def scen(fixtures_dir, name, f):
    return os.path.join(fixtures_dir, "scenarios", name, f)


def track(fixtures_dir, name, out, *extra):
    return main(["track", "--detections", scen(fixtures_dir, name, "det.txt"),
                 "--features", scen(fixtures_dir, name, "features.txt"), "--out", str(out), *extra])


def idf1(capsys, gt, result):
    assert main(["eval", "--gt", gt, "--result", str(result)]) == 0
    lines = dict(l.split("=") for l in capsys.readouterr().out.splitlines() if "=" in l and " " not in l)
    return float(lines["IDF1"])


def test_track_steady2_matches_committed_output(fixtures_dir, tmp_path):
    out = tmp_path / "o.txt"
    assert track(fixtures_dir, "steady2", out) == 0
    assert filecmp.cmp(out, scen(fixtures_dir, "steady2", "expected_tracks.txt"), shallow=False)
    assert {l.split(",")[1] for l in out.read_text().splitlines()} == {"1", "2"}


def test_recovery_flag_changes_ids_and_score(fixtures_dir, tmp_path, capsys):
    on, off = tmp_path / "on.txt", tmp_path / "off.txt"
    assert track(fixtures_dir, "recovery", on) == 0
    assert track(fixtures_dir, "recovery", off, "--no-identity-recovery") == 0
    ids_on = {l.split(",")[1] for l in on.read_text().splitlines()}
    ids_off = {l.split(",")[1] for l in off.read_text().splitlines()}
    assert len(ids_off) == len(ids_on) + 1
    gt = scen(fixtures_dir, "recovery", "gt.txt")
    assert idf1(capsys, gt, on) > idf1(capsys, gt, off)


def test_track_manifest(fixtures_dir, tmp_path):
    manifest = tmp_path / "m" / "manifest.json"
    assert track(fixtures_dir, "recovery", tmp_path / "o.txt", "--manifest", str(manifest)) == 0
    data = json.loads(manifest.read_text())
    assert len(data["frame_timing_ms"]) == 120
    assert data["merges"] and data["merges"][0]["surviving"] < data["merges"][0]["absorbed"]
    assert data["config"]["location_gate"] == 25.0


def test_track_config_file(fixtures_dir, tmp_path):
    cfg = tmp_path / "t.cfg"
    cfg.write_text("identity_recovery_enabled = false\n")
    out = tmp_path / "o.txt"
    assert track(fixtures_dir, "recovery", out, "--config", str(cfg)) == 0
    assert len({l.split(",")[1] for l in out.read_text().splitlines()}) == 3


def test_track_usage_errors(fixtures_dir, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["track", "--detections", scen(fixtures_dir, "steady2", "det.txt"),
              "--features", scen(fixtures_dir, "steady2", "features.txt")])
    assert exc.value.code == 2
    assert main(["track", "--detections", scen(fixtures_dir, "steady2", "det.txt"),
                 "--out", str(tmp_path / "o.txt")]) == 2


def test_track_missing_file(tmp_path, capsys):
    code = main(["track", "--detections", str(tmp_path / "nope.txt"), "--features", "x",
                 "--out", str(tmp_path / "o.txt")])
    assert code == 1
    assert "nope.txt" in capsys.readouterr().err


def test_eval_self(fixtures_dir, tmp_path, capsys):
    gt = scen(fixtures_dir, "steady2", "gt.txt")
    out = tmp_path / "report.txt"
    assert main(["eval", "--gt", gt, "--result", gt, "--out", str(out)]) == 0
    assert "IDF1=1.000000" in capsys.readouterr().out
    assert "IDF1=1.000000" in out.read_text()


def test_eval_iou_range(fixtures_dir, capsys):
    gt = scen(fixtures_dir, "steady2", "gt.txt")
    assert main(["eval", "--gt", gt, "--result", gt, "--iou-min", "1.01"]) == 2


def test_simulate_commands(tmp_path, capsys):
    assert main(["simulate", "--list"]) == 0
    assert "recovery" in capsys.readouterr().out.split()
    a, b = tmp_path / "deep" / "a", tmp_path / "b"
    assert main(["simulate", "--scenario", "clutter", "--seed", "4", "--out", str(a)]) == 0
    assert main(["simulate", "--scenario", "clutter", "--seed", "4", "--out", str(b)]) == 0
    for f in ("det.txt", "features.txt", "gt.txt"):
        assert filecmp.cmp(a / f, b / f, shallow=False)
    capsys.readouterr()
    assert main(["simulate", "--scenario", "nope", "--out", str(tmp_path / "c")]) == 2
    assert "steady2" in capsys.readouterr().err


def test_simulate_from_config(fixtures_dir, tmp_path):
    cfg = os.path.join(fixtures_dir, "scenario_example.cfg")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "gt.txt").exists()


def gray_frames(tmp_path, count=2, size=(64, 48)):
    images = tmp_path / "img"
    images.mkdir()
    for f in range(1, count + 1):
        write_ppm(images / f"{f:06d}.ppm", np.full((size[1], size[0], 3), 128, np.uint8))
    return images


def test_features_on_uniform_gray(tmp_path):
    images = gray_frames(tmp_path)
    det = tmp_path / "d.txt"
    # the second box runs past the image edge and is clamped
    det.write_text("1,-1,5,5,20,20,0.9,-1,-1,-1\n2,-1,50,40,40,40,0.9,-1,-1,-1\n")
    out1, out2 = tmp_path / "f1.txt", tmp_path / "f2.txt"
    for out in (out1, out2):
        assert main(["features", "--detections", str(det), "--images", str(images), "--out", str(out)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = np.loadtxt(out1, delimiter=",")
    assert rows.shape == (2, 58)
    np.testing.assert_array_equal(rows[:, FREQ_SLICE][:, 1:], 0)


def test_features_missing_frame_image(tmp_path, capsys):
    images = gray_frames(tmp_path, count=1)
    det = tmp_path / "d.txt"
    det.write_text("3,-1,5,5,20,20,0.9,-1,-1,-1\n")
    assert main(["features", "--detections", str(det), "--images", str(images),
                 "--out", str(tmp_path / "f.txt")]) == 1
    assert "frame 3" in capsys.readouterr().err


def test_rendered_scenario_end_to_end(tmp_path, capsys):
    d = tmp_path / "r"
    assert main(["simulate", "--scenario", "rendered2", "--out", str(d)]) == 0
    feats = tmp_path / "f.txt"
    assert main(["features", "--detections", str(d / "det.txt"), "--images", str(d / "images"),
                 "--out", str(feats), "--threads", "2"]) == 0
    assert feats.read_bytes() == (d / "features.txt").read_bytes()
    out = tmp_path / "o.txt"
    assert main(["track", "--detections", str(d / "det.txt"), "--images", str(d / "images"),
                 "--out", str(out)]) == 0
    assert {l.split(",")[1] for l in out.read_text().splitlines()} == {"1", "2"}
    assert idf1(capsys, str(d / "gt.txt"), out) == 1.0
