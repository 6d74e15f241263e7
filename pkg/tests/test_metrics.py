import itertools
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diversort.core_io import BoundingBox
from diversort.metrics import (evaluate, event_metrics, identity_metrics, load_labelled, match_frame)


def box(x, y=0.0, w=10.0, h=10.0):
    return BoundingBox(x, y, w, h)


@pytest.fixture
def toy(fixtures_dir):
    d = os.path.join(fixtures_dir, "toy10")
    return {name: load_labelled(os.path.join(d, name + ".txt"))
            for name in ("gt", "result", "gt_gap", "result_gap")}


def test_match_frame_identical_and_disjoint():
    boxes = [box(0), box(50), box(100)]
    assert match_frame(boxes, boxes) == [(0, 0), (1, 1), (2, 2)]
    assert match_frame(boxes, [box(500), box(600)]) == []


def test_match_frame_prefers_higher_iou():
    gt = [box(0, w=100, h=100)]
    preds = [box(0, w=100, h=60), box(0, w=100, h=90)]   # IOU 0.6, 0.9
    # enumerate both single pairings: each gives one match, 0.9 has higher IOU
    assert match_frame(gt, preds) == [(0, 1)]


def test_match_frame_maximizes_count_before_iou():
    gt = [box(0, 0, w=100, h=100), box(0, 35, w=100, h=100)]
    # pred 0: IOU 0.82 with gt 0 and 0.6 with gt 1; pred 1: 0.54 with gt 0 only
    preds = [box(0, 10, w=100, h=100), box(0, -30, w=100, h=100)]
    assert match_frame(gt, preds, 0.5) == [(0, 1), (1, 0)]


def test_match_frame_validates_threshold():
    with pytest.raises(ValueError):
        match_frame([box(0)], [box(0)], 1.01)


def test_toy_sequence_identity_split(toy):
    r = evaluate(toy["gt"], toy["result"])
    assert (r.DP, r.DR) == (1.0, 1.0)
    assert (r.IDTP, r.IDFP, r.IDFN) == (6, 4, 4)
    assert (r.IDF1, r.IDP, r.IDR) == (0.6, 0.6, 0.6)
    assert (r.IDS, r.FM) == (1, 0)


def test_toy_sequence_coverage_gap(toy):
    r = evaluate(toy["gt_gap"], toy["result_gap"])
    assert (r.TP, r.FP, r.FN) == (7, 0, 2)
    assert (r.IDS, r.FM) == (0, 1)
    assert r.IDF1 == pytest.approx(14 / 16)


def test_perfect_and_empty_output(toy):
    r = evaluate(toy["gt"], toy["gt"])
    assert (r.IDF1, r.IDP, r.IDR, r.IDS, r.FM) == (1.0, 1.0, 1.0, 0, 0)
    r = evaluate(toy["gt"], {})
    assert (r.IDR, r.IDTP, r.IDF1, r.DR) == (0.0, 0, 0.0, 0.0)
    r = evaluate({}, {})
    assert (r.DP, r.DR, r.IDF1) == (1.0, 1.0, 1.0)


def test_identity_metrics_tuple_order(toy):
    assert identity_metrics(toy["gt"], toy["result"]) == (0.6, 0.6, 0.6, 6, 4, 4)
    assert event_metrics(toy["gt"], toy["result"]) == (1, 0)


def test_absence_is_not_fragmentation():
    gt = {f: [(1, box(0))] for f in (1, 2, 3, 7, 8)}
    pred = {f: [(4, box(0))] for f in (1, 2, 3, 7, 8)}
    assert event_metrics(gt, pred) == (0, 0)


def test_report_formats(toy):
    r = evaluate(toy["gt"], toy["result"])
    kv = dict(line.split("=") for line in r.to_key_values().splitlines())
    assert kv["IDF1"] == "0.600000" and kv["IDS"] == "1"
    table = r.to_table().splitlines()
    assert table[0].split() == ["DP", "DR", "IDF1", "IDP", "IDR", "IDS", "FM"]


def test_duplicate_identity_in_frame_rejected(tmp_path):
    path = tmp_path / "gt.txt"
    path.write_text("1,1,0,0,5,5,1,-1,-1,-1\n1,1,9,9,5,5,1,-1,-1,-1\n")
    with pytest.raises(ValueError):
        load_labelled(path)


# -- random sequences ---------------------------------------------------------

def random_sequence(rng, frames=8, gt_ids=3, pred_ids=4):
    gt, pred = {}, {}
    for f in range(1, frames + 1):
        g = [(i, box(40 * i + rng.uniform(-2, 2))) for i in range(1, gt_ids + 1) if rng.random() < 0.8]
        if g:
            gt[f] = g
        used = set()
        p = []
        for i, b in g:
            if rng.random() < 0.8:
                pid = int(rng.integers(1, pred_ids + 1))
                if pid not in used:
                    used.add(pid)
                    p.append((pid, box(b.left + rng.uniform(-4, 4))))
        if rng.random() < 0.3:
            pid = pred_ids + 1
            p.append((pid, box(rng.uniform(0, 200))))
        if p:
            pred[f] = p
    return gt, pred


def brute_force_idtp(gt, pred, iou_min=0.5):
    from oracles import raster_iou  # noqa: F401  (documentation of independence)

    gids = sorted({i for r in gt.values() for i, _ in r})
    pids = sorted({i for r in pred.values() for i, _ in r})

    def overlap(a, b):
        iw = min(a.right, b.right) - max(a.left, b.left)
        ih = min(a.bottom, b.bottom) - max(a.top, b.top)
        if iw <= 0 or ih <= 0:
            return 0.0
        return iw * ih / (a.width * a.height + b.width * b.height - iw * ih)

    agree = {(g, p): 0 for g in gids for p in pids}
    for f in gt:
        for g, gb in gt[f]:
            for p, pb in pred.get(f, []):
                if overlap(gb, pb) >= iou_min:
                    agree[g, p] += 1
    best = 0
    small, large, flip = (gids, pids, False) if len(gids) <= len(pids) else (pids, gids, True)
    for perm in itertools.permutations(large, len(small)):
        pairs = [(b, a) if flip else (a, b) for a, b in zip(small, perm)]
        best = max(best, sum(agree[pair] for pair in pairs))
    return best


@pytest.mark.parametrize("seed", range(30))
def test_idtp_matches_enumeration(seed):
    gt, pred = random_sequence(np.random.default_rng(seed))
    assert identity_metrics(gt, pred)[3] == brute_force_idtp(gt, pred)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_invariants(seed):
    rng = np.random.default_rng(seed)
    gt, pred = random_sequence(rng)
    r = evaluate(gt, pred)
    assert r.IDP <= r.DP + 1e-12 and r.IDR <= r.DR + 1e-12
    assert (r.IDF1 == 0) == (r.IDTP == 0)
    assert (r.IDF1 == 1) == (r.IDFP == 0 and r.IDFN == 0)
    if r.IDP + r.IDR > 0:
        assert r.IDF1 == pytest.approx(2 * r.IDP * r.IDR / (r.IDP + r.IDR))

    ids = sorted({i for rows in pred.values() for i, _ in rows})
    relabel = dict(zip(ids, rng.permutation([1000 + i for i in range(len(ids))]).tolist()))
    shuffled = {}
    for f, rows in pred.items():
        rows = [(relabel[i], b) for i, b in rows]
        shuffled[f] = [rows[k] for k in rng.permutation(len(rows))]
    assert evaluate(gt, shuffled) == r
