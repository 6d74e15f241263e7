"""Realtime diver tracking with hand-crafted appearance reidentification."""

__version__ = "0.1.0"

from .core_io import BoundingBox, Detection, TrackerConfig  # noqa: E402
from .tracker import Tracker, run_sequence  # noqa: E402

__all__ = ["BoundingBox", "Detection", "TrackerConfig", "Tracker", "run_sequence", "__version__"]
