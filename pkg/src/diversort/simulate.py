"""Seeded synthetic scenarios: detections, feature sidecar and ground truth.

Randomness comes from numpy's ``PCG64`` bit generator seeded with the
scenario seed (normals from ``Generator.standard_normal``, uniforms from
``Generator.random``). Draw order is fixed and part of the format:

1. per target, in list order: a 58-vector for the base feature when none is
   given, then one 58-vector per feature shift without an explicit direction;
2. per frame, per present target: 2 jitter normals, 1 miss uniform, 58
   feature-noise normals; then 1 false-positive uniform, and when it fires
   4 box uniforms and 58 feature normals.

Files: ``det.txt`` (MOT16, id -1), ``features.txt`` (sidecar CSV), ``gt.txt``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .appearance import FEATURE_DIM, crop_box, extract_features, write_ppm
from .core_io import BoundingBox, read_key_values, write_features, write_mot_rows

DETECTIONS_FILE = "det.txt"
FEATURES_FILE = "features.txt"
GROUND_TRUTH_FILE = "gt.txt"
IMAGES_DIR = "images"


@dataclass
class TargetSpec:
    label: int
    waypoints: List[Tuple[int, float, float]]
    size: Tuple[float, float] = (60.0, 120.0)
    absences: List[Tuple[int, int]] = field(default_factory=list)
    # (start, end, direction or None for a seeded random orthogonal direction)
    feature_shifts: List[Tuple[int, int, Optional[np.ndarray]]] = field(default_factory=list)
    base_feature: Optional[np.ndarray] = None
    color: Tuple[int, int, int] = (200, 60, 60)

    def validate(self) -> None:
        if self.label < 1:
            raise ValueError(f"target label must be positive, got {self.label}")
        if not self.waypoints:
            raise ValueError(f"target {self.label} has no waypoints")
        frames = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"target {self.label}: waypoint frames must be strictly increasing")
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise ValueError(f"target {self.label}: box size must be positive")
        spans = sorted(self.absences)
        for s, e in spans:
            if e < s:
                raise ValueError(f"target {self.label}: absence ({s}, {e}) is reversed")
        for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
            if s1 <= e0:
                raise ValueError(f"target {self.label}: absence intervals overlap")
        for s, e, _ in self.feature_shifts:
            if e < s:
                raise ValueError(f"target {self.label}: feature shift ({s}, {e}) is reversed")

    def position(self, frame: int) -> Optional[Tuple[float, float]]:
        """Waypoint-interpolated center, or None outside the waypoint span."""
        wp = self.waypoints
        if frame < wp[0][0] or frame > wp[-1][0]:
            return None
        for (f0, x0, y0), (f1, x1, y1) in zip(wp, wp[1:]):
            if f0 <= frame <= f1:
                t = (frame - f0) / (f1 - f0)
                return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
        return (wp[0][1], wp[0][2])

    def present(self, frame: int) -> bool:
        if self.position(frame) is None:
            return False
        return not any(s <= frame <= e for s, e in self.absences)


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    frames: int
    targets: List[TargetSpec]
    false_positive_rate: float = 0.0
    miss_rate: float = 0.0
    jitter_std: float = 0.0
    feature_noise_std: float = 0.0
    image_size: Tuple[int, int] = (960, 540)
    render: bool = False
    background: Tuple[int, int, int] = (20, 45, 80)

    def validate(self) -> None:
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        for name in ("false_positive_rate", "miss_rate"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.jitter_std < 0 or self.feature_noise_std < 0:
            raise ValueError("noise levels must be >= 0")
        if self.image_size[0] < 16 or self.image_size[1] < 16:
            raise ValueError("image is too small")
        labels = [t.label for t in self.targets]
        if len(set(labels)) != len(labels):
            raise ValueError("target labels must be unique")
        for t in self.targets:
            t.validate()


@dataclass
class Scenario:
    config: ScenarioConfig
    detections: List[Tuple[int, int, BoundingBox, float]]
    features: List[np.ndarray]
    ground_truth: List[Tuple[int, int, BoundingBox, float]]
    base_features: Dict[int, np.ndarray]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _orthogonal_unit(rng: np.random.Generator, base: np.ndarray) -> np.ndarray:
    v = rng.standard_normal(FEATURE_DIM)
    v -= np.dot(v, base) * base
    return _unit(v)


def simulate(config: ScenarioConfig) -> Scenario:
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    bases: Dict[int, np.ndarray] = {}
    shifts: Dict[int, List[Tuple[int, int, np.ndarray]]] = {}
    for t in config.targets:
        base = _unit(np.asarray(t.base_feature, dtype=np.float64)) if t.base_feature is not None \
            else _unit(rng.standard_normal(FEATURE_DIM))
        bases[t.label] = base
        shifts[t.label] = [(s, e, _unit(np.asarray(d, dtype=np.float64)) if d is not None
                            else _orthogonal_unit(rng, base))
                           for s, e, d in t.feature_shifts]

    width, height = config.image_size
    dets, feats, gt = [], [], []
    for frame in range(1, config.frames + 1):
        for t in config.targets:
            if not t.present(frame):
                continue
            cx, cy = t.position(frame)
            w, h = t.size
            gt.append((frame, t.label, BoundingBox.from_center(cx, cy, w, h), 1.0))
            jitter = rng.standard_normal(2) * config.jitter_std
            missed = rng.random() < config.miss_rate
            noise = rng.standard_normal(FEATURE_DIM) * config.feature_noise_std
            if missed:
                continue
            direction = bases[t.label]
            for s, e, alt in shifts[t.label]:
                if s <= frame <= e:
                    direction = alt
            box = BoundingBox.from_center(cx + jitter[0], cy + jitter[1], w, h)
            dets.append((frame, -1, box, 0.9))
            feats.append(_unit(direction + noise))
        if rng.random() < config.false_positive_rate:
            u = rng.random(4)
            w = 40.0 + 40.0 * u[2]
            h = 80.0 + 80.0 * u[3]
            box = BoundingBox(u[0] * (width - w), u[1] * (height - h), w, h)
            dets.append((frame, -1, box, 0.5))
            feats.append(_unit(rng.standard_normal(FEATURE_DIM)))
    return Scenario(config, dets, feats, gt, bases)


def render_frame(config: ScenarioConfig, frame: int) -> np.ndarray:
    """Draw every present target as a filled disk inside its box."""
    import cv2

    width, height = config.image_size
    image = np.empty((height, width, 3), dtype=np.uint8)
    image[:] = config.background
    for t in config.targets:
        if not t.present(frame):
            continue
        cx, cy = t.position(frame)
        radius = int(min(t.size) * 0.3)
        cv2.circle(image, (int(round(cx)), int(round(cy))), radius, tuple(int(c) for c in t.color),
                   thickness=-1, lineType=cv2.LINE_8)
    return image


def generate(config: ScenarioConfig, out_dir) -> Dict[str, str]:
    """Write the scenario files into ``out_dir`` and return their paths."""
    scenario = simulate(config)
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "detections": os.path.join(out_dir, DETECTIONS_FILE),
        "features": os.path.join(out_dir, FEATURES_FILE),
        "ground_truth": os.path.join(out_dir, GROUND_TRUTH_FILE),
    }
    features = scenario.features
    if config.render:
        image_dir = os.path.join(out_dir, IMAGES_DIR)
        os.makedirs(image_dir, exist_ok=True)
        frames = {}
        for frame in range(1, config.frames + 1):
            frames[frame] = render_frame(config, frame)
            write_ppm(os.path.join(image_dir, f"{frame:06d}.ppm"), frames[frame])
        features = [extract_features(crop_box(frames[f], box)) for f, _, box, _ in scenario.detections]
        paths["images"] = image_dir
    write_mot_rows(paths["detections"], scenario.detections)
    write_features(paths["features"], features)
    write_mot_rows(paths["ground_truth"], scenario.ground_truth)
    return paths


# --------------------------------------------------------------------------
# built-in scenarios
# --------------------------------------------------------------------------

def _steady2() -> ScenarioConfig:
    return ScenarioConfig("steady2", seed=7, frames=100, targets=[
        TargetSpec(1, [(1, 200.0, 200.0), (100, 400.0, 230.0)]),
        TargetSpec(2, [(1, 750.0, 380.0), (100, 560.0, 350.0)]),
    ])


def _two_with_absence(name: str, shift: bool) -> ScenarioConfig:
    returning = TargetSpec(2, [(1, 750.0, 380.0), (120, 520.0, 330.0)], absences=[(40, 59)])
    if shift:
        returning.feature_shifts = [(60, 64, None)]
    return ScenarioConfig(name, seed=11 if shift else 5, frames=120, targets=[
        TargetSpec(1, [(1, 150.0, 180.0), (120, 380.0, 200.0)]),
        returning,
    ], jitter_std=0.5, feature_noise_std=5e-4)


def _clutter() -> ScenarioConfig:
    lanes = [
        TargetSpec(1, [(1, 120.0, 110.0), (250, 420.0, 130.0), (500, 140.0, 100.0)]),
        TargetSpec(2, [(1, 820.0, 120.0), (250, 560.0, 110.0), (500, 840.0, 140.0)]),
        TargetSpec(3, [(1, 150.0, 400.0), (250, 400.0, 420.0), (500, 160.0, 390.0)]),
        TargetSpec(4, [(1, 800.0, 410.0), (250, 580.0, 400.0), (500, 810.0, 420.0)]),
    ]
    return ScenarioConfig("clutter", seed=3, frames=500, targets=lanes, false_positive_rate=0.05,
                          miss_rate=0.05, jitter_std=1.0, feature_noise_std=5e-4)


def _rendered2() -> ScenarioConfig:
    return ScenarioConfig("rendered2", seed=1, frames=30, image_size=(320, 240), render=True, targets=[
        TargetSpec(1, [(1, 70.0, 80.0), (30, 130.0, 90.0)], size=(48.0, 48.0), color=(220, 50, 40)),
        TargetSpec(2, [(1, 250.0, 170.0), (30, 190.0, 160.0)], size=(48.0, 48.0), color=(240, 210, 40)),
    ])


_BUILTIN = {
    "steady2": _steady2,
    "reacquire": lambda: _two_with_absence("reacquire", shift=False),
    "recovery": lambda: _two_with_absence("recovery", shift=True),
    "clutter": _clutter,
    "rendered2": _rendered2,
}


def builtin_scenarios() -> Dict[str, ScenarioConfig]:
    return {name: make() for name, make in _BUILTIN.items()}


def builtin_scenario(name: str, seed: Optional[int] = None) -> ScenarioConfig:
    if name not in _BUILTIN:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(sorted(_BUILTIN))}")
    config = _BUILTIN[name]()
    return config if seed is None else replace(config, seed=seed)


# --------------------------------------------------------------------------
# flat key/value scenario files
# --------------------------------------------------------------------------

def _pairs(text: str, sep: str) -> List[Tuple[int, int]]:
    out = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        a, b = item.split(sep)
        out.append((int(a), int(b)))
    return out


def load_scenario_config(path) -> ScenarioConfig:
    """Read a scenario from ``key = value`` lines.

    Global keys mirror :class:`ScenarioConfig` (``image_size = W H``);
    per-target keys are ``target.<label>.waypoints = f:x:y f:x:y``,
    ``.size = W H``, ``.absent = s-e, s-e``, ``.shift = s-e`` and
    ``.color = R G B``.
    """
    values = read_key_values(path)
    targets: Dict[int, TargetSpec] = {}
    top = {}
    try:
        for key, raw in values.items():
            if not key.startswith("target."):
                top[key] = raw.strip()
                continue
            _, label, attr = key.split(".", 2)
            spec = targets.setdefault(int(label), TargetSpec(int(label), []))
            if attr == "waypoints":
                spec.waypoints = [(int(f), float(x), float(y))
                                  for f, x, y in (w.split(":") for w in raw.split())]
            elif attr == "size":
                w, h = raw.split()
                spec.size = (float(w), float(h))
            elif attr == "absent":
                spec.absences = _pairs(raw, "-")
            elif attr == "shift":
                spec.feature_shifts = [(s, e, None) for s, e in _pairs(raw, "-")]
            elif attr == "color":
                spec.color = tuple(int(c) for c in raw.split())
            else:
                raise ValueError(f"unknown target key {key!r}")
        kwargs = dict(
            name=top.pop("name", os.path.splitext(os.path.basename(str(path)))[0]),
            seed=int(top.pop("seed", 0)),
            frames=int(top.pop("frames")),
            targets=[targets[k] for k in sorted(targets)],
        )
        for key in ("false_positive_rate", "miss_rate", "jitter_std", "feature_noise_std"):
            if key in top:
                kwargs[key] = float(top.pop(key))
        if "image_size" in top:
            w, h = top.pop("image_size").split()
            kwargs["image_size"] = (int(w), int(h))
        if "render" in top:
            kwargs["render"] = top.pop("render").lower() in ("1", "true", "yes", "on")
        if top:
            raise ValueError(f"unknown scenario keys: {', '.join(sorted(top))}")
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: invalid scenario config ({exc})") from None
    config = ScenarioConfig(**kwargs)
    config.validate()
    return config
