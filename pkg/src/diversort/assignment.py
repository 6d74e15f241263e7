"""Detection-to-track association: IOU fast path, gated costs, Hungarian solve."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .appearance import Gallery
from .core_io import BoundingBox, Detection
from .kalman import MotionState, NoiseModel, squared_mahalanobis

INFEASIBLE = math.inf


@dataclass
class MatchResult:
    matches: List[Tuple[int, int]] = field(default_factory=list)
    unmatched_detections: List[int] = field(default_factory=list)
    unmatched_tracks: List[int] = field(default_factory=list)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return min(inter / (a.width * a.height + b.width * b.height - inter), 1.0)


def boxes_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    return np.array([b.as_ltwh() for b in boxes], dtype=np.float64).reshape(-1, 4)


def iou_fast_path(current: Sequence[Detection], previous: Sequence[Tuple[Detection, int]],
                  threshold: float = 0.75) -> Tuple[List[Tuple[int, int]], List[int]]:
    """Greedy one-to-one matching of current detections to last frame's matched ones.

    Pairs with IOU >= ``threshold`` are taken in descending IOU order; equal
    IOUs go to the lower detection index first. Returns
    ``(assignments, leftovers)`` where assignments hold
    ``(detection index, track id)``.
    """
    if not current or not previous:
        return [], list(range(len(current)))
    scores = kernels.iou_matrix(boxes_array([d.box for d in current]),
                                boxes_array([d.box for d, _ in previous]))
    rows, cols = np.nonzero(scores >= threshold)
    order = sorted(zip(rows.tolist(), cols.tolist()), key=lambda rc: (-scores[rc], rc[0], rc[1]))
    used_rows, used_cols = set(), set()
    assignments = []
    for r, c in order:
        if r in used_rows or c in used_cols:
            continue
        used_rows.add(r)
        used_cols.add(c)
        assignments.append((r, previous[c][1]))
    assignments.sort()
    leftovers = [i for i in range(len(current)) if i not in used_rows]
    return assignments, leftovers


def hungarian(costs) -> MatchResult:
    """Minimum-cost one-to-one assignment that never uses an infeasible entry.

    Among all assignments it first maximizes the number of feasible pairs,
    then minimizes their total cost. Infeasible entries (``inf``) and the
    padding of rectangular inputs are replaced by a finite sentinel larger
    than the sum of every finite cost, and any pair landing on the sentinel
    is reported as unmatched.
    """
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 2:
        c = c.reshape(len(c), -1) if c.size else np.zeros((len(c), 0))
    n, m = c.shape
    result = MatchResult()
    feasible = np.isfinite(c)
    if np.any(c[feasible] < 0) or np.any(np.isnan(c)):
        raise ValueError("costs must be non-negative or infeasible")
    if n == 0 or m == 0 or not feasible.any():
        result.unmatched_detections = list(range(n))
        result.unmatched_tracks = list(range(m))
        return result
    size = max(n, m)
    sentinel = 2.0 * float(c[feasible].sum()) + 1.0
    padded = np.full((size, size), sentinel)
    padded[:n, :m] = np.where(feasible, c, sentinel)
    cols = kernels.solve_dense(padded)
    matched_tracks = set()
    for r in range(n):
        col = int(cols[r])
        if col < m and feasible[r, col]:
            result.matches.append((r, col))
            matched_tracks.add(col)
        else:
            result.unmatched_detections.append(r)
    result.unmatched_tracks = [j for j in range(m) if j not in matched_tracks]
    return result


@dataclass
class TrackCandidate:
    """What cost construction needs to know about one track."""

    gallery: Gallery
    long_term: bool
    motion: Optional[MotionState] = None
    noise: NoiseModel = field(default_factory=NoiseModel)


def build_cost_matrix(detections: Sequence[Detection], tracks: Sequence[TrackCandidate],
                      config) -> np.ndarray:
    """Gated appearance costs with a location tie-breaker.

    Rows are detections, columns tracks. An entry is ``INFEASIBLE`` when the
    appearance distance exceeds the regime's gate, or (short-term tracks
    only) the squared Mahalanobis distance exceeds ``location_gate``. When a
    detection passes the appearance gate of two or more tracks, every
    short-term entry in its row gets ``mahalanobis / location_gate`` added.
    """
    n, m = len(detections), len(tracks)
    costs = np.full((n, m), INFEASIBLE)
    if n == 0 or m == 0:
        return costs
    for d in detections:
        if d.feature is None:
            raise ValueError(f"detection at frame {d.frame} has no feature vector")
    features = np.vstack([d.feature for d in detections])
    centers = [d.box.center() for d in detections]

    appearance = np.empty((n, m))
    for j, track in enumerate(tracks):
        appearance[:, j] = np.min(1.0 - features @ track.gallery.matrix().T, axis=1)
    gates = np.array([config.appearance_gate_long if t.long_term else config.appearance_gate_short
                      for t in tracks])
    passes = appearance <= gates

    location = np.full((n, m), np.nan)
    for j, track in enumerate(tracks):
        if track.long_term or track.motion is None:
            continue
        for i in range(n):
            if passes[i, j]:
                location[i, j] = squared_mahalanobis(track.motion, centers[i], track.noise)

    for i in range(n):
        tie = int(passes[i].sum()) >= 2
        for j in range(m):
            if not passes[i, j]:
                continue
            loc = location[i, j]
            if not np.isnan(loc) and loc > config.location_gate:
                continue
            cost = appearance[i, j]
            if tie and not np.isnan(loc):
                cost += loc / config.location_gate
            costs[i, j] = max(cost, 0.0)
    return costs
