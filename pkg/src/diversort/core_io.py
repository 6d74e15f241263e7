"""Domain types, MOT16 file I/O and tracker configuration."""
from __future__ import annotations

import configparser
import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np


class FormatError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, path, line: Optional[int], message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class BoundingBox:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"box must have positive size, got {self.width}x{self.height}")

    def center(self) -> Tuple[float, float]:
        return (self.left + self.width / 2, self.top + self.height / 2)

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    def as_ltwh(self) -> Tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "BoundingBox":
        return cls(cx - width / 2, cy - height / 2, width, height)


@dataclass(frozen=True)
class Detection:
    frame: int
    box: BoundingBox
    confidence: float = 1.0
    feature: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    crop_ref: Any = field(default=None, compare=False, repr=False)
    # row position in the source file, used to align the feature sidecar
    row: int = field(default=-1, compare=False, repr=False)

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame index must be >= 1, got {self.frame}")
        if self.feature is not None:
            check_unit_vector(self.feature)

    def with_feature(self, feature: np.ndarray) -> "Detection":
        return dataclasses.replace(self, feature=feature)


def check_unit_vector(v: np.ndarray, tol: float = 1e-9) -> None:
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise ValueError("feature vector must be a finite 1-D array")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"feature vector must have unit norm, got {norm!r}")


def l2_normalize(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / norm


@dataclass(frozen=True)
class TrackerConfig:
    """Every tunable of the tracker. Defaults are the published values.

    The three ``noise_*_weight`` entries scale Kalman noise by the track's
    box height (position, velocity and measurement standard deviations).
    """

    iou_threshold: float = 0.75
    location_gate: float = 25.0
    appearance_gate_short: float = 1e-4
    appearance_gate_long: float = 5e-4
    long_term_after: int = 5
    gallery_capacity: int = 100
    confirm_after: int = 3
    new_track_window: int = 15
    merge_fraction: float = 0.25
    identity_recovery_enabled: bool = True
    noise_position_weight: float = 1.0 / 20
    noise_velocity_weight: float = 1.0 / 160
    noise_measurement_weight: float = 1.0 / 20

    def __post_init__(self):
        positive = (
            "iou_threshold", "location_gate", "appearance_gate_short", "appearance_gate_long",
            "gallery_capacity", "confirm_after", "noise_position_weight",
            "noise_velocity_weight", "noise_measurement_weight",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.long_term_after < 0 or self.new_track_window < 0:
            raise ValueError("frame windows must be non-negative")
        if self.appearance_gate_long < self.appearance_gate_short:
            raise ValueError("appearance_gate_long must be >= appearance_gate_short")
        if not 0 < self.merge_fraction <= 1:
            raise ValueError("merge_fraction must lie in (0, 1]")
        if self.iou_threshold > 1:
            raise ValueError("iou_threshold must lie in (0, 1]")

    def replace(self, **changes) -> "TrackerConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "TrackerConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(types[key], raw, key)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, **overrides) -> "TrackerConfig":
        values = read_key_values(path)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)


def _coerce(type_name: str, raw: Any, key: str):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if type_name == "bool":
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if type_name == "int":
            return int(text)
        return float(text)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r} as {type_name}") from None


def read_key_values(path) -> Dict[str, str]:
    """Read a flat ``key = value`` file (``#`` comments, no sections)."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    with open(path, "r", encoding="utf-8") as fh:
        try:
            parser.read_string("[root]\n" + fh.read(), source=str(path))
        except configparser.Error as exc:
            raise FormatError(path, None, str(exc)) from None
    return dict(parser["root"])


# --------------------------------------------------------------------------
# MOT16 files
# --------------------------------------------------------------------------

MotRow = Tuple[int, int, BoundingBox, float]


def read_mot_rows(path) -> List[MotRow]:
    """Parse a 10-column MOT16 file into ``(frame, id, box, conf)`` rows."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.split(",")
            if len(parts) < 7:
                raise FormatError(path, lineno, f"expected 10 comma-separated fields, got {len(parts)}")
            try:
                frame = int(float(parts[0]))
                ident = int(float(parts[1]))
                left, top, width, height, conf = (float(p) for p in parts[2:7])
            except ValueError:
                raise FormatError(path, lineno, "non-numeric field") from None
            if frame < 1 or float(parts[0]) != frame:
                raise FormatError(path, lineno, f"invalid frame index {parts[0]!r}")
            if not all(math.isfinite(v) for v in (left, top, width, height, conf)):
                raise FormatError(path, lineno, "non-finite value")
            if width <= 0 or height <= 0:
                raise FormatError(path, lineno, "box width and height must be positive")
            rows.append((frame, ident, BoundingBox(left, top, width, height), conf))
    return rows


def load_detections(path) -> Dict[int, List[Detection]]:
    """Group MOT16 detections by frame. Ids and the trailing x,y,z columns are ignored."""
    frames: Dict[int, List[Detection]] = {}
    for row, (frame, _ident, box, conf) in enumerate(read_mot_rows(path)):
        frames.setdefault(frame, []).append(Detection(frame, box, conf, row=row))
    return dict(sorted(frames.items()))


def iter_in_file_order(detections: Mapping[int, List[Detection]]) -> List[Detection]:
    flat = [d for dets in detections.values() for d in dets]
    if all(d.row >= 0 for d in flat):
        flat.sort(key=lambda d: d.row)
    return flat


def load_features(path, detections: Mapping[int, List[Detection]]) -> Dict[int, List[Detection]]:
    """Attach L2-normalized sidecar features, one CSV row per detection row."""
    vectors = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values = [float(p) for p in text.split(",")]
            except ValueError:
                raise FormatError(path, lineno, "non-numeric feature value") from None
            if vectors and len(values) != len(vectors[0]):
                raise FormatError(path, lineno, f"expected {len(vectors[0])} values, got {len(values)}")
            try:
                vectors.append(l2_normalize(values))
            except ValueError:
                raise FormatError(path, lineno, "zero or non-finite feature vector") from None

    ordered = iter_in_file_order(detections)
    if len(vectors) != len(ordered):
        raise FormatError(path, None, f"expected {len(ordered)} feature rows, found {len(vectors)}")
    attached = {id(d): d.with_feature(v) for d, v in zip(ordered, vectors)}
    return {frame: [attached[id(d)] for d in dets] for frame, dets in detections.items()}


def write_features(path, vectors: Iterable[np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in vectors:
            fh.write(",".join(format(float(x), ".17g") for x in v))
            fh.write("\n")


def format_track_line(frame: int, track_id: int, box: BoundingBox, conf: float) -> str:
    return (f"{frame},{track_id},{box.left:.2f},{box.top:.2f},{box.width:.2f},"
            f"{box.height:.2f},{conf:.2f},-1,-1,-1")


def write_tracks(path, results: Iterable[Tuple[int, int, BoundingBox, float]]) -> None:
    """Write ``(frame, track_id, box, conf)`` tuples as MOT16 result lines."""
    rows = sorted(results, key=lambda r: (r[0], r[1]))
    for frame, track_id, _box, _conf in rows:
        if track_id < 1:
            raise ValueError(f"track ids must be positive, got {track_id} at frame {frame}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(format_track_line(*row))
            fh.write("\n")


def write_mot_rows(path, rows: Iterable[MotRow]) -> None:
    """Write detections/ground truth (ids may be -1) in MOT16 layout with full precision."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame, ident, box, conf in rows:
            fh.write(f"{frame},{ident},{box.left:.6f},{box.top:.6f},{box.width:.6f},"
                     f"{box.height:.6f},{conf:.6f},-1,-1,-1\n")


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
