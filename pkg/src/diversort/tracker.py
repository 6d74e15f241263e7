"""Track lifecycle and the per-frame tracking step."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import kalman
from .appearance import Gallery
from .assignment import TrackCandidate, build_cost_matrix, hungarian, iou_fast_path
from .core_io import BoundingBox, Detection, TrackerConfig


class TrackState(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"


@dataclass
class Track:
    id: int
    state: TrackState
    gallery: Gallery
    motion: kalman.MotionState
    created_frame: int
    last_seen_frame: int
    consecutive_hits: int
    last_box: BoundingBox
    last_confidence: float = 1.0

    @property
    def confirmed(self) -> bool:
        return self.state is TrackState.CONFIRMED

    def frames_inactive(self, frame: int) -> int:
        """Frames since this track was last matched, not counting ``frame``."""
        return frame - 1 - self.last_seen_frame


@dataclass(frozen=True)
class AssignmentEntry:
    track_id: int
    box: BoundingBox
    confidence: float
    provisional: bool


@dataclass
class FrameAssignments:
    frame: int
    entries: List[AssignmentEntry] = field(default_factory=list)


@dataclass(frozen=True)
class MergeEvent:
    frame: int
    absorbed: int
    surviving: int


@dataclass(frozen=True)
class TrackSummary:
    id: int
    state: str
    regime: str
    last_seen: int
    gallery_size: int


class Tracker:
    """Online multi-target tracker; one :meth:`step` call per frame, in order."""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.tracks: Dict[int, Track] = {}
        self.frame: Optional[int] = None
        self.merges: List[MergeEvent] = []
        self._next_id = 1
        self._previous: List[Tuple[Detection, int]] = []

    def noise_for(self, box: BoundingBox) -> kalman.NoiseModel:
        c = self.config
        return kalman.NoiseModel.for_height(box.height, c.noise_position_weight,
                                            c.noise_velocity_weight, c.noise_measurement_weight)

    def is_long_term(self, track: Track, frame: int) -> bool:
        return track.frames_inactive(frame) > self.config.long_term_after

    # ------------------------------------------------------------------
    def step(self, frame: int, detections: Sequence[Detection]) -> FrameAssignments:
        if self.frame is not None and frame <= self.frame:
            raise ValueError(f"frame {frame} does not follow frame {self.frame}")
        for d in detections:
            if d.feature is None:
                raise ValueError(f"detection at frame {frame} has no feature vector")
        cfg = self.config
        self.frame = frame

        # tentative tracks that skipped a frame are gone
        for tid in [t.id for t in self.tracks.values()
                    if not t.confirmed and t.last_seen_frame < frame - 1]:
            del self.tracks[tid]

        for track in self.tracks.values():
            if not self.is_long_term(track, frame):
                track.motion = kalman.predict(track.motion, self.noise_for(track.last_box))

        previous = [(d, tid) for d, tid in self._previous if tid in self.tracks]
        fast, leftovers = iou_fast_path(detections, previous, cfg.iou_threshold)
        matched: Dict[int, int] = {tid: i for i, tid in fast}

        remaining = [t for t in sorted(self.tracks.values(), key=lambda t: t.id) if t.id not in matched]
        if leftovers and remaining:
            candidates = []
            for t in remaining:
                long_term = self.is_long_term(t, frame)
                candidates.append(TrackCandidate(t.gallery, long_term,
                                                 None if long_term else t.motion,
                                                 self.noise_for(t.last_box)))
            costs = build_cost_matrix([detections[i] for i in leftovers], candidates, cfg)
            result = hungarian(costs)
            for r, c in result.matches:
                matched[remaining[c].id] = leftovers[r]
            unmatched = [leftovers[r] for r in result.unmatched_detections]
        else:
            unmatched = list(leftovers)

        for tid, det_index in matched.items():
            self._apply_match(self.tracks[tid], detections[det_index], frame)

        for tid in [t.id for t in self.tracks.values() if not t.confirmed and t.id not in matched]:
            del self.tracks[tid]

        for det_index in sorted(unmatched):
            track = self._create(detections[det_index], frame)
            matched[track.id] = det_index

        for track in self.tracks.values():
            if not track.confirmed and track.consecutive_hits >= cfg.confirm_after:
                track.state = TrackState.CONFIRMED

        if cfg.identity_recovery_enabled:
            for event in self.identity_recovery(frame):
                det_index = matched.pop(event.absorbed, None)
                if det_index is not None:
                    matched[event.surviving] = det_index

        out = FrameAssignments(frame)
        self._previous = []
        for tid in sorted(matched):
            track = self.tracks[tid]
            out.entries.append(AssignmentEntry(tid, track.last_box, track.last_confidence,
                                               provisional=not track.confirmed))
            self._previous.append((detections[matched[tid]], tid))
        return out

    def _apply_match(self, track: Track, det: Detection, frame: int) -> None:
        noise = self.noise_for(det.box)
        if self.is_long_term(track, frame):
            # no prediction was kept for a long-absent track; restart the filter
            track.motion = kalman.initiate(det.box.center(), noise)
        else:
            track.motion = kalman.update(track.motion, det.box.center(), noise)
        track.gallery.push(det.feature)
        track.consecutive_hits = track.consecutive_hits + 1 if track.last_seen_frame == frame - 1 else 1
        track.last_seen_frame = frame
        track.last_box = det.box
        track.last_confidence = det.confidence

    def _create(self, det: Detection, frame: int) -> Track:
        track = Track(
            id=self._next_id,
            state=TrackState.TENTATIVE,
            gallery=Gallery(self.config.gallery_capacity, [det.feature]),
            motion=kalman.initiate(det.box.center(), self.noise_for(det.box)),
            created_frame=frame,
            last_seen_frame=frame,
            consecutive_hits=1,
            last_box=det.box,
            last_confidence=det.confidence,
        )
        self._next_id += 1
        self.tracks[track.id] = track
        if self.config.confirm_after <= 1:
            track.state = TrackState.CONFIRMED
        return track

    # ------------------------------------------------------------------
    def identity_recovery(self, frame: int) -> List[MergeEvent]:
        """Merge young confirmed tracks into older tracks absent since their creation.

        A pair qualifies when strictly more than ``merge_fraction`` of all
        gallery cross pairs have cosine distance strictly below
        ``appearance_gate_long``; the best fraction wins, ties going to the
        older id.
        """
        cfg = self.config
        events = []
        young = [t for t in sorted(self.tracks.values(), key=lambda t: t.id)
                 if t.confirmed and frame - t.created_frame <= cfg.new_track_window]
        for new in young:
            if new.id not in self.tracks:
                continue
            new_matrix = new.gallery.matrix()
            best, best_fraction = None, cfg.merge_fraction
            for old in sorted(self.tracks.values(), key=lambda t: t.id):
                if old.id == new.id or old.last_seen_frame >= new.created_frame:
                    continue
                distances = 1.0 - new_matrix @ old.gallery.matrix().T
                fraction = float(np.count_nonzero(distances < cfg.appearance_gate_long)) / distances.size
                if fraction > best_fraction:
                    best, best_fraction = old, fraction
            if best is None:
                continue
            self._merge(new, best)
            event = MergeEvent(frame, new.id, best.id)
            self.merges.append(event)
            events.append(event)
        return events

    def _merge(self, absorbed: Track, survivor: Track) -> None:
        survivor.gallery.extend(absorbed.gallery)
        survivor.motion = absorbed.motion
        survivor.last_box = absorbed.last_box
        survivor.last_confidence = absorbed.last_confidence
        survivor.last_seen_frame = absorbed.last_seen_frame
        survivor.consecutive_hits = absorbed.consecutive_hits
        survivor.state = TrackState.CONFIRMED
        del self.tracks[absorbed.id]

    # ------------------------------------------------------------------
    def snapshot(self) -> List[TrackSummary]:
        out = []
        for t in sorted(self.tracks.values(), key=lambda t: t.id):
            long_term = self.frame is not None and self.frame - t.last_seen_frame > self.config.long_term_after
            out.append(TrackSummary(t.id, t.state.value, "long-term" if long_term else "short-term",
                                    t.last_seen_frame, len(t.gallery)))
        return out


# --------------------------------------------------------------------------
# sequence drivers
# --------------------------------------------------------------------------

def resolve_merges(events: Iterable[MergeEvent]) -> Dict[int, int]:
    """Map every absorbed id to the id that finally survived."""
    parent: Dict[int, int] = {}
    for e in events:
        parent[e.absorbed] = e.surviving

    def root(i):
        while i in parent:
            i = parent[i]
        return i

    return {i: root(i) for i in parent}


@dataclass
class SequenceResult:
    rows: List[Tuple[int, int, BoundingBox, float]]
    frames: List[FrameAssignments]
    merges: List[MergeEvent]
    timings_ms: List[float]


def run_sequence(detections: Mapping[int, Sequence[Detection]], config: Optional[TrackerConfig] = None,
                 emit: str = "confirmed", streaming: bool = False, last_frame: Optional[int] = None,
                 featurize: Optional[Callable[[int, Sequence[Detection]], Sequence[Detection]]] = None,
                 ) -> SequenceResult:
    """Track every frame from 1 to the last one and collect output rows.

    Batch mode rewrites absorbed ids everywhere and, with ``emit="confirmed"``,
    keeps the entries of every track that was ever confirmed. Streaming mode
    keeps ids as emitted and drops provisional entries.
    """
    if emit not in ("confirmed", "tentative"):
        raise ValueError(f"emit must be 'confirmed' or 'tentative', got {emit!r}")
    tracker = Tracker(config)
    end = last_frame if last_frame is not None else max(detections, default=0)
    frames, timings = [], []
    for frame in range(1, end + 1):
        dets = list(detections.get(frame, ()))
        if featurize is not None:
            dets = list(featurize(frame, dets))
        start = time.perf_counter()
        frames.append(tracker.step(frame, dets))
        timings.append((time.perf_counter() - start) * 1000.0)

    rows = []
    if streaming:
        for fa in frames:
            for e in fa.entries:
                if emit == "tentative" or not e.provisional:
                    rows.append((fa.frame, e.track_id, e.box, e.confidence))
    else:
        rename = resolve_merges(tracker.merges)
        confirmed_ids = {rename.get(e.track_id, e.track_id)
                         for fa in frames for e in fa.entries if not e.provisional}
        for fa in frames:
            for e in fa.entries:
                tid = rename.get(e.track_id, e.track_id)
                if emit == "tentative" or tid in confirmed_ids:
                    rows.append((fa.frame, tid, e.box, e.confidence))
    rows.sort(key=lambda r: (r[0], r[1]))
    return SequenceResult(rows, frames, list(tracker.merges), timings)
