"""Hand-crafted appearance descriptors, per-track galleries and cosine distances.

Feature layout (58 values, L2-normalized as a whole):

====== ==========================================================
0-29   LAB colour: per-channel mean, std, then 8-bin histograms
30-45  log-amplitude spectrum of the 64x64 grayscale, 16 radial bins
46-48  largest contour: extent, compactness, polygon vertex count
49-50  convex hull: solidity, hull/contour perimeter ratio
51-57  log-compressed Hu invariants of the binary mask
====== ==========================================================
"""
from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import cv2
import numpy as np

FEATURE_DIM = 58
LAB_SLICE = slice(0, 30)
FREQ_SLICE = slice(30, 46)
CONTOUR_SLICE = slice(46, 49)
HULL_SLICE = slice(49, 51)
HU_SLICE = slice(51, 58)

COLOR_SIZE = 128
FREQ_SIZE = 64
HIST_BINS = 8
FREQ_BINS = 16
MIN_CROP = 8

# L in [0, 100]; a, b roughly in [-128, 127]
_LAB_RANGES = ((0.0, 100.0), (-128.0, 128.0), (-128.0, 128.0))


# --------------------------------------------------------------------------
# cosine distances and galleries
# --------------------------------------------------------------------------

def cosine_distance(f: np.ndarray, g: np.ndarray) -> float:
    return 1.0 - float(np.dot(f, g))


class Gallery:
    """Ring buffer of the most recent unit feature vectors of one track."""

    def __init__(self, capacity: int = 100, vectors: Iterable[np.ndarray] = ()):
        if capacity < 1:
            raise ValueError("gallery capacity must be >= 1")
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)
        self._matrix: Optional[np.ndarray] = None
        for v in vectors:
            self.push(v)

    def push(self, f: np.ndarray) -> "Gallery":
        self._items.append(np.asarray(f, dtype=np.float64))
        self._matrix = None
        return self

    def extend(self, vectors: Iterable[np.ndarray]) -> "Gallery":
        for v in vectors:
            self.push(v)
        return self

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._items)

    def matrix(self) -> np.ndarray:
        """Members stacked oldest to newest, shape ``(len, D)``."""
        if self._matrix is None:
            if not self._items:
                return np.empty((0, 0))
            self._matrix = np.vstack(self._items)
        return self._matrix

    def copy(self) -> "Gallery":
        return Gallery(self.capacity, self._items)


def gallery_push(gallery: Gallery, f: np.ndarray) -> Gallery:
    return gallery.push(f)


def gallery_distance(f: np.ndarray, gallery: Gallery) -> float:
    """Smallest cosine distance between ``f`` and any gallery member."""
    if len(gallery) == 0:
        raise ValueError("gallery is empty")
    return float(np.min(1.0 - gallery.matrix() @ f))


def gallery_distances(features: np.ndarray, gallery: Gallery) -> np.ndarray:
    """Vectorized :func:`gallery_distance` for a ``(n, D)`` block of features."""
    if len(gallery) == 0:
        raise ValueError("gallery is empty")
    return np.min(1.0 - features @ gallery.matrix().T, axis=1)


# --------------------------------------------------------------------------
# Hu moments
# --------------------------------------------------------------------------

def _raw_moments(mask: np.ndarray) -> dict:
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise ValueError("mask has no foreground pixels")
    if max(mask.shape) > 20000:
        raise ValueError("mask too large for exact moment sums")
    x = xs.astype(np.int64)
    y = ys.astype(np.int64)
    m = {}
    for p in range(4):
        xp = x ** p
        for q in range(4 - p):
            m[p, q] = int(np.sum(xp * y ** q))
    return m


def _central_moments(m: dict) -> dict:
    m00 = m[0, 0]
    cx = Fraction(m[1, 0], m00)
    cy = Fraction(m[0, 1], m00)
    mu = {}
    for p, q in ((2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)):
        total = Fraction(0)
        for i in range(p + 1):
            for j in range(q + 1):
                total += (math.comb(p, i) * math.comb(q, j)
                          * (-cx) ** (p - i) * (-cy) ** (q - j) * m[i, j])
        mu[p, q] = total
    return mu


def hu_moments(mask: np.ndarray) -> np.ndarray:
    """The seven Hu invariants of a binary mask's foreground pixel set.

    Moments are summed over pixel coordinates in exact rational arithmetic,
    so translated or lattice-rotated copies of a mask give bit-identical
    results.
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    m = _raw_moments(mask != 0)
    mu = _central_moments(m)
    n = m[0, 0]
    # second-order eta = mu / n^2; third-order eta = mu / n^(5/2), which only
    # ever appear in pairs, so every invariant below stays rational
    e20, e11, e02 = (mu[k] / n ** 2 for k in ((2, 0), (1, 1), (0, 2)))
    t30, t21, t12, t03 = (mu[k] for k in ((3, 0), (2, 1), (1, 2), (0, 3)))
    s5 = n ** 5
    a = t30 + t12
    b = t21 + t03
    c = t30 - 3 * t12
    d = 3 * t21 - t03
    h1 = e20 + e02
    h2 = (e20 - e02) ** 2 + 4 * e11 ** 2
    h3 = (c ** 2 + d ** 2) / s5
    h4 = (a ** 2 + b ** 2) / s5
    h5 = (c * a * (a ** 2 - 3 * b ** 2) + d * b * (3 * a ** 2 - b ** 2)) / s5 ** 2
    h6 = ((e20 - e02) * (a ** 2 - b ** 2) + 4 * e11 * a * b) / s5
    h7 = (d * a * (a ** 2 - 3 * b ** 2) - c * b * (3 * a ** 2 - b ** 2)) / s5 ** 2
    return np.array([float(h) for h in (h1, h2, h3, h4, h5, h6, h7)])


def hu_block(mask: np.ndarray) -> np.ndarray:
    """Log-compressed Hu invariants, each scaled into ``[-1, 1]``."""
    h = hu_moments(mask)
    mapped = -np.sign(h) * np.log10(np.abs(h) + 1e-30)
    return np.clip(mapped / 40.0, -1.0, 1.0)


# --------------------------------------------------------------------------
# feature extraction
# --------------------------------------------------------------------------

def validate_crop(crop: np.ndarray) -> np.ndarray:
    crop = np.asarray(crop)
    if crop.ndim != 3 or crop.shape[2] != 3 or crop.dtype != np.uint8:
        raise ValueError("crop must be an (H, W, 3) uint8 RGB array")
    if crop.shape[0] < MIN_CROP or crop.shape[1] < MIN_CROP:
        raise ValueError(f"crop must be at least {MIN_CROP}x{MIN_CROP}, got {crop.shape[1]}x{crop.shape[0]}")
    return np.ascontiguousarray(crop)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """sRGB uint8 to CIE L*a*b* (D65) as float32."""
    return cv2.cvtColor(rgb.astype(np.float32) / 255.0, cv2.COLOR_RGB2Lab)


def color_block(crop: np.ndarray) -> np.ndarray:
    small = cv2.resize(crop, (COLOR_SIZE, COLOR_SIZE), interpolation=cv2.INTER_AREA)
    lab = rgb_to_lab(small).reshape(-1, 3).astype(np.float64)
    stats, hists = [], []
    for ch, (lo, hi) in enumerate(_LAB_RANGES):
        values = lab[:, ch]
        span = hi - lo
        stats.append((values.mean() - lo) / span)
        stats.append(values.std() / span)
        hist, _ = np.histogram(np.clip(values, lo, hi), bins=HIST_BINS, range=(lo, hi))
        hists.append(hist / values.size)
    return np.concatenate([stats, *hists])


def _radial_bins(size: int) -> np.ndarray:
    freqs = np.fft.fftfreq(size) * size
    radius = np.hypot(freqs[:, None], freqs[None, :])
    bins = np.ceil(radius / radius.max() * (FREQ_BINS - 1)).astype(np.intp)
    return np.clip(bins, 0, FREQ_BINS - 1)


_RADIAL = _radial_bins(FREQ_SIZE)
_RADIAL_COUNTS = np.bincount(_RADIAL.ravel(), minlength=FREQ_BINS)


def frequency_block(gray: np.ndarray) -> np.ndarray:
    """Radially averaged log-amplitude spectrum.

    Bin 0 holds only the DC term (the mean intensity); bins 1-15 come from
    the mean-removed image, so a flat crop yields exact zeros there.
    """
    small = cv2.resize(gray, (FREQ_SIZE, FREQ_SIZE), interpolation=cv2.INTER_AREA).astype(np.float64)
    total = float(small.sum())
    centered = small - total / small.size
    spectrum = np.log1p(np.abs(np.fft.fft2(centered)) / small.size)
    sums = np.bincount(_RADIAL.ravel(), weights=spectrum.ravel(), minlength=FREQ_BINS)
    block = sums / _RADIAL_COUNTS
    block[0] = math.log1p(total / small.size / 255.0)
    return block


def binary_mask(gray: np.ndarray) -> Optional[np.ndarray]:
    """Otsu foreground mask; the minority class is foreground. None when degenerate."""
    threshold, bright = cv2.threshold(gray, 0, 1, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
    count = int(bright.sum())
    if count == 0 or count == bright.size:
        return None
    if count > bright.size - count:
        return (1 - bright).astype(np.uint8)
    return bright


def shape_blocks(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_NONE)
    if not contours:
        return np.zeros(3), np.zeros(2)
    contour = max(contours, key=cv2.contourArea)
    area = cv2.contourArea(contour)
    perimeter = cv2.arcLength(contour, True)
    if area <= 0 or perimeter <= 0:
        return np.zeros(3), np.zeros(2)
    extent = area / mask.size
    compactness = min(1.0, 4 * math.pi * area / perimeter ** 2)
    vertices = len(cv2.approxPolyDP(contour, 0.01 * perimeter, True))
    hull = cv2.convexHull(contour)
    hull_area = cv2.contourArea(hull)
    solidity = area / hull_area if hull_area > 0 else 0.0
    hull_ratio = cv2.arcLength(hull, True) / perimeter
    return (np.array([extent, compactness, min(1.0, vertices / 32.0)]),
            np.array([solidity, hull_ratio]))


def extract_features(crop: np.ndarray) -> np.ndarray:
    """58-dim unit appearance vector of an RGB crop. Deterministic."""
    crop = validate_crop(crop)
    gray = cv2.cvtColor(crop, cv2.COLOR_RGB2GRAY)
    out = np.zeros(FEATURE_DIM)
    out[LAB_SLICE] = color_block(crop)
    out[FREQ_SLICE] = frequency_block(gray)
    mask = binary_mask(gray)
    if mask is not None:
        out[CONTOUR_SLICE], out[HULL_SLICE] = shape_blocks(mask)
        if out[CONTOUR_SLICE].any():
            out[HU_SLICE] = hu_block(mask)
    norm = np.linalg.norm(out)
    return out / norm


def crop_box(image: np.ndarray, box) -> np.ndarray:
    """Cut ``box`` out of ``image``, clamped to the image; at least 8x8 pixels."""
    h, w = image.shape[:2]
    x0 = int(math.floor(box.left))
    y0 = int(math.floor(box.top))
    x1 = int(math.ceil(box.left + box.width))
    y1 = int(math.ceil(box.top + box.height))
    x0, x1 = _clamp_span(x0, x1, w)
    y0, y1 = _clamp_span(y0, y1, h)
    return image[y0:y1, x0:x1]


def _clamp_span(lo: int, hi: int, limit: int) -> Tuple[int, int]:
    lo = min(max(lo, 0), limit)
    hi = min(max(hi, 0), limit)
    if hi - lo < MIN_CROP:
        centre = (lo + hi) // 2
        lo = min(max(centre - MIN_CROP // 2, 0), max(limit - MIN_CROP, 0))
        hi = min(lo + MIN_CROP, limit)
    return lo, hi


def read_image(path) -> np.ndarray:
    """Decode an image file (PPM and anything OpenCV reads) to RGB uint8."""
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None:
        raise FileNotFoundError(f"cannot read image {path}")
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
