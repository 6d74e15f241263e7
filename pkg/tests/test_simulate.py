import filecmp
import os
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from diversort.appearance import cosine_distance
from diversort.core_io import TrackerConfig, load_detections, load_features
from diversort.metrics import load_labelled
from diversort.simulate import (ScenarioConfig, TargetSpec, builtin_scenario, builtin_scenarios,
                                generate, load_scenario_config, simulate)

FILES = ("det.txt", "features.txt", "gt.txt")


def test_same_seed_gives_identical_files(tmp_path):
    cfg = builtin_scenario("clutter")
    generate(cfg, tmp_path / "a")
    generate(cfg, tmp_path / "b")
    for name in FILES:
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)


def test_different_seed_changes_output():
    a = simulate(builtin_scenario("clutter"))
    b = simulate(builtin_scenario("clutter", seed=99))
    assert len(a.detections) != len(b.detections) or a.detections != b.detections


@pytest.mark.parametrize("name", ["steady2", "reacquire", "recovery"])
def test_committed_fixtures_regenerate_exactly(fixtures_dir, tmp_path, name):
    generate(builtin_scenario(name), tmp_path)
    for f in FILES:
        assert filecmp.cmp(tmp_path / f, os.path.join(fixtures_dir, "scenarios", name, f), shallow=False), f


def test_noiseless_detections_equal_ground_truth(tmp_path):
    paths = generate(builtin_scenario("steady2"), tmp_path)
    det_lines = [l.split(",")[0:1] + l.split(",")[2:] for l in open(paths["detections"])]
    gt_lines = [l.split(",")[0:1] + l.split(",")[2:] for l in open(paths["ground_truth"])]
    strip = lambda rows: [r[:5] for r in rows]
    assert strip(det_lines) == strip(gt_lines)
    scen = simulate(builtin_scenario("steady2"))
    gt_ids = [label for _, label, _, _ in scen.ground_truth]
    for label in (1, 2):
        feats = [f for f, i in zip(scen.features, gt_ids) if i == label]
        assert all(np.array_equal(f, feats[0]) for f in feats)


def test_absence_interval_removes_detections_and_ground_truth():
    scen = simulate(builtin_scenario("reacquire"))
    frames_present = {f for f, label, _, _ in scen.ground_truth if label == 2}
    assert frames_present.isdisjoint(range(40, 60))
    assert {39, 60} <= frames_present
    per_frame = Counter(f for f, _, _, _ in scen.detections)
    assert all(per_frame[f] == 1 for f in range(40, 60))


def test_ground_truth_unique_and_features_unit(scenario_dir):
    d = scenario_dir("clutter")
    gt = load_labelled(str(d / "gt.txt"))   # raises on duplicate ids
    assert sum(len(v) for v in gt.values()) > 0
    for f in simulate(builtin_scenario("clutter")).features:
        assert abs(np.linalg.norm(f) - 1) < 1e-9


def test_builtin_catalogue():
    cat = builtin_scenarios()
    assert {"steady2", "reacquire", "recovery", "clutter", "rendered2"} <= set(cat)
    assert len(cat["steady2"].targets) == 2 and not any(t.absences for t in cat["steady2"].targets)
    assert len(cat["clutter"].targets) == 4 and cat["clutter"].frames == 500
    assert cat["clutter"].miss_rate == 0.05 and cat["clutter"].false_positive_rate == 0.05
    (s, e) = cat["reacquire"].targets[1].absences[0]
    assert e - s + 1 == 20 > TrackerConfig().long_term_after


def test_recovery_shift_breaks_the_gate():
    scen = simulate(builtin_scenario("recovery"))
    shifted = [f for (frame, _, _, _), f in zip(scen.detections, scen.features) if 60 <= frame <= 64]
    own, other = scen.base_features[2], scen.base_features[1]
    returning = [f for f in shifted if cosine_distance(f, other) > 0.5]
    assert len(returning) == 5
    assert all(cosine_distance(f, own) > 5e-4 for f in returning)


def test_invalid_config_writes_nothing(tmp_path):
    bad = replace(builtin_scenario("steady2"), miss_rate=1.5)
    with pytest.raises(ValueError):
        generate(bad, tmp_path / "out")
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("target", [
    TargetSpec(1, [(5, 0, 0), (5, 1, 1)]),
    TargetSpec(1, [(1, 0, 0)], absences=[(3, 8), (6, 9)]),
    TargetSpec(0, [(1, 0, 0)]),
])
def test_invalid_targets(target):
    with pytest.raises(ValueError):
        simulate(ScenarioConfig("x", 0, 10, [target]))


def test_scenario_config_file(fixtures_dir, tmp_path):
    cfg = load_scenario_config(os.path.join(fixtures_dir, "scenario_example.cfg"))
    assert cfg.name == "example" and cfg.seed == 42 and cfg.image_size == (640, 480)
    assert cfg.targets[1].absences == [(10, 15)]
    paths = generate(cfg, tmp_path)
    dets = load_features(paths["features"], load_detections(paths["detections"]))
    assert all(len(dets[f]) == 1 for f in range(10, 16))


def test_rendered_scenario_writes_images(tmp_path):
    cfg = replace(builtin_scenario("rendered2"), frames=3)
    paths = generate(cfg, tmp_path)
    assert sorted(os.listdir(paths["images"])) == ["000001.ppm", "000002.ppm", "000003.ppm"]
    with open(paths["features"]) as fh:
        assert len(fh.readlines()) == 6
