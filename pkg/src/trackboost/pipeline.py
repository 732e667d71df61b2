"""Per-video track and boost passes with a deterministic merge by video id."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Sequence, Tuple

from .boost import OFFLINE, BoostedDetection, boost_sequence
from .core import DetectionSequence
from .tracker import Track, TrackedDetection, TrackerConfig, run_sequence

TrackResult = Tuple[List[TrackedDetection], List[Track]]


def track_videos(
    sequences: Mapping[str, DetectionSequence], config: TrackerConfig, workers: int = 1
) -> Dict[str, TrackResult]:
    videos = sorted(sequences)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda v: run_sequence(sequences[v], config), videos))
    else:
        results = [run_sequence(sequences[v], config) for v in videos]
    return dict(zip(videos, results))


def boost_videos(
    results: Mapping[str, Tuple[Sequence[TrackedDetection], Sequence]], mode: str = OFFLINE
) -> Dict[str, List[BoostedDetection]]:
    return {v: boost_sequence(results[v][0], results[v][1], mode) for v in sorted(results)}
