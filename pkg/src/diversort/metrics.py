"""Detection and identity metrics for tracker output against ground truth."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from . import kernels
from .assignment import INFEASIBLE, boxes_array, hungarian
from .core_io import BoundingBox, FormatError, read_mot_rows

# frame -> [(identity, box)]
Labelled = Dict[int, List[Tuple[int, BoundingBox]]]


def load_labelled(path, unique_ids: bool = True) -> Labelled:
    """Read a MOT16 gt or result file keeping the id column."""
    frames: Labelled = defaultdict(list)
    seen = set()
    for frame, ident, box, _conf in read_mot_rows(path):
        if unique_ids:
            if (frame, ident) in seen:
                raise FormatError(path, None, f"identity {ident} appears twice in frame {frame}")
            seen.add((frame, ident))
        frames[frame].append((ident, box))
    return dict(sorted(frames.items()))


def rows_to_labelled(rows) -> Labelled:
    frames: Labelled = defaultdict(list)
    for frame, ident, box, *_ in rows:
        frames[frame].append((ident, box))
    return dict(sorted(frames.items()))


@dataclass
class MetricsReport:
    DP: float
    DR: float
    IDF1: float
    IDP: float
    IDR: float
    IDS: int
    FM: int
    TP: int
    FP: int
    FN: int
    IDTP: int
    IDFP: int
    IDFN: int

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    def to_key_values(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            lines.append(f"{key}={value:.6f}" if isinstance(value, float) else f"{key}={value}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        head = ["DP", "DR", "IDF1", "IDP", "IDR", "IDS", "FM"]
        cells = [f"{100 * getattr(self, k):.1f}" for k in head[:5]] + [str(self.IDS), str(self.FM)]
        widths = [max(len(h), len(c)) for h, c in zip(head, cells)]
        top = "  ".join(h.rjust(w) for h, w in zip(head, widths))
        bottom = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        tallies = (f"TP={self.TP} FP={self.FP} FN={self.FN} "
                   f"IDTP={self.IDTP} IDFP={self.IDFP} IDFN={self.IDFN}")
        return f"{top}\n{bottom}\n{tallies}\n"


def _ratio(num: float, den: float, vacuous: bool) -> float:
    if den == 0:
        return 1.0 if vacuous else 0.0
    return num / den


def match_frame(gt_boxes: Sequence[BoundingBox], pred_boxes: Sequence[BoundingBox],
                iou_min: float = 0.5) -> List[Tuple[int, int]]:
    """One-to-one gt/prediction pairs with IOU >= ``iou_min``.

    Maximizes the number of pairs, then their total IOU.
    """
    if not 0 < iou_min <= 1:
        raise ValueError("iou_min must lie in (0, 1]")
    if not gt_boxes or not pred_boxes:
        return []
    scores = kernels.iou_matrix(boxes_array(gt_boxes), boxes_array(pred_boxes))
    costs = np.where(scores >= iou_min, 1.0 - scores, INFEASIBLE)
    return sorted(hungarian(costs).matches)


def _all_frames(gt: Labelled, pred: Labelled) -> List[int]:
    return sorted(set(gt) | set(pred))


def detection_counts(gt: Labelled, pred: Labelled, iou_min: float = 0.5) -> Tuple[int, int, int]:
    tp = fp = fn = 0
    for frame in _all_frames(gt, pred):
        g = gt.get(frame, [])
        p = pred.get(frame, [])
        pairs = match_frame([b for _, b in g], [b for _, b in p], iou_min)
        tp += len(pairs)
        fp += len(p) - len(pairs)
        fn += len(g) - len(pairs)
    return tp, fp, fn


def identity_metrics(gt: Labelled, pred: Labelled, iou_min: float = 0.5):
    """Trajectory-level identity scores.

    Returns ``(IDF1, IDP, IDR, IDTP, IDFP, IDFN)``. Each gt identity is
    paired with at most one predicted identity so that the number of
    frames in which paired boxes overlap at ``iou_min`` is maximal.
    """
    gt_ids = sorted({i for rows in gt.values() for i, _ in rows})
    pred_ids = sorted({i for rows in pred.values() for i, _ in rows})
    total_gt = sum(len(r) for r in gt.values())
    total_pred = sum(len(r) for r in pred.values())
    gi = {k: n for n, k in enumerate(gt_ids)}
    pi = {k: n for n, k in enumerate(pred_ids)}
    agree = np.zeros((len(gt_ids), len(pred_ids)), dtype=np.int64)
    for frame in _all_frames(gt, pred):
        g = gt.get(frame, [])
        p = pred.get(frame, [])
        if not g or not p:
            continue
        scores = kernels.iou_matrix(boxes_array([b for _, b in g]), boxes_array([b for _, b in p]))
        for r, c in zip(*np.nonzero(scores >= iou_min)):
            agree[gi[g[r][0]], pi[p[c][0]]] += 1

    idtp = 0
    if agree.size and agree.max() > 0:
        # maximize total agreement; every pair stays feasible so the count of
        # pairs is fixed at min(#gt, #pred) and only the sum varies
        costs = (agree.max() - agree).astype(np.float64)
        for r, c in hungarian(costs).matches:
            idtp += int(agree[r, c])
    idfp = total_pred - idtp
    idfn = total_gt - idtp
    vacuous = total_gt == 0 and total_pred == 0
    idp = _ratio(idtp, idtp + idfp, vacuous)
    idr = _ratio(idtp, idtp + idfn, vacuous)
    idf1 = _ratio(2 * idtp, 2 * idtp + idfp + idfn, vacuous)
    return idf1, idp, idr, idtp, idfp, idfn


def event_metrics(gt: Labelled, pred: Labelled, iou_min: float = 0.5) -> Tuple[int, int]:
    """Identity switches and fragmentations per gt identity.

    A switch is a matched frame whose predicted id differs from the one at
    the identity's previous matched frame. A fragmentation is a resumption
    of coverage after at least one frame in which the identity was present
    in the ground truth but unmatched.
    """
    per_identity: Dict[int, List[Tuple[int, object]]] = defaultdict(list)
    for frame in _all_frames(gt, pred):
        g = gt.get(frame, [])
        p = pred.get(frame, [])
        pairs = dict(match_frame([b for _, b in g], [b for _, b in p], iou_min))
        for r, (ident, _) in enumerate(g):
            per_identity[ident].append((frame, p[pairs[r]][0] if r in pairs else None))

    ids = fm = 0
    for history in per_identity.values():
        last_pred = None
        gap = False
        for _frame, pred_id in history:
            if pred_id is None:
                if last_pred is not None:
                    gap = True
                continue
            if last_pred is not None:
                if pred_id != last_pred:
                    ids += 1
                if gap:
                    fm += 1
            last_pred = pred_id
            gap = False
    return ids, fm


def evaluate(gt: Labelled, pred: Labelled, iou_min: float = 0.5) -> MetricsReport:
    if not 0 < iou_min <= 1:
        raise ValueError("iou_min must lie in (0, 1]")
    tp, fp, fn = detection_counts(gt, pred, iou_min)
    vacuous = tp + fp + fn == 0
    idf1, idp, idr, idtp, idfp, idfn = identity_metrics(gt, pred, iou_min)
    ids, fm = event_metrics(gt, pred, iou_min)
    return MetricsReport(
        DP=_ratio(tp, tp + fp, vacuous), DR=_ratio(tp, tp + fn, vacuous),
        IDF1=idf1, IDP=idp, IDR=idr, IDS=ids, FM=fm,
        TP=tp, FP=fp, FN=fn, IDTP=idtp, IDFP=idfp, IDFN=idfn,
    )
