"""Tracking-by-detection post-processing: Kalman tracking, track-based
confidence boosting, AP@0.5 evaluation and synthetic sprite datasets."""

from .boost import BoostedDetection, boost_sequence, boost_track, boost_track_causal
from .core import BoundingBox, Detection, DetectionSequence, FrameSize, area_category, iou
from .evaluation import EvalReport, average_precision, evaluate, match_frame
from .tracker import Track, TrackedDetection, Tracker, TrackerConfig, run_sequence

__version__ = "0.1.0"

__all__ = [
    "BoostedDetection",
    "BoundingBox",
    "Detection",
    "DetectionSequence",
    "EvalReport",
    "FrameSize",
    "Track",
    "TrackedDetection",
    "Tracker",
    "TrackerConfig",
    "area_category",
    "average_precision",
    "boost_sequence",
    "boost_track",
    "boost_track_causal",
    "evaluate",
    "iou",
    "match_frame",
    "run_sequence",
]
