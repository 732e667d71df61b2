"""Track-based confidence boosting.

Every detection inside a track gets the mean of its own score and the
highest score seen in that track, so a detection that dips mid-track is
pulled back toward the track's best evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence

from .core import Detection, InvariantViolation
from .tracker import Track, TrackedDetection

OFFLINE = "offline"
CAUSAL = "causal"
MODES = (OFFLINE, CAUSAL)


class TrackConsistencyError(InvariantViolation):
    """A tracked detection refers to a track missing from the track table."""


@dataclass(frozen=True)
class BoostedDetection:
    detection: Detection
    track_id: int
    original_confidence: float
    boosted_confidence: float


def boost_track(scores: Sequence[float]) -> List[float]:
    if len(scores) == 0:
        raise ValueError("cannot boost an empty track")
    best = max(scores)
    return [(s + best) / 2 for s in scores]


def boost_track_causal(scores: Sequence[float]) -> List[float]:
    """Like ``boost_track`` but each score only sees the running max up to itself."""
    if len(scores) == 0:
        raise ValueError("cannot boost an empty track")
    out = []
    best = scores[0]
    for s in scores:
        best = max(best, s)
        out.append((s + best) / 2)
    return out


def boost_sequence(
    tracked: Iterable[TrackedDetection], tracks: Sequence[Track], mode: str = OFFLINE
) -> List[BoostedDetection]:
    """Rescore tracked detections using their tracks' score histories.

    The score vector of a track is the confidence of every detection matched
    to it, including those matched before the track was confirmed. ``tracks``
    may be any objects exposing ``track_id`` and ``scores``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown boost mode {mode!r}")
    boost = boost_track if mode == OFFLINE else boost_track_causal
    scores_by_track = {t.track_id: list(t.scores) for t in tracks}
    boosted_by_track: Dict[int, List[float]] = {k: boost(v) for k, v in scores_by_track.items()}

    out = []
    for td in tracked:
        try:
            boosted = boosted_by_track[td.track_id]
        except KeyError:
            raise TrackConsistencyError(f"track {td.track_id} not in the track table") from None
        if td.position_in_track >= len(boosted):
            raise TrackConsistencyError(
                f"position {td.position_in_track} beyond track {td.track_id} history"
            )
        if scores_by_track[td.track_id][td.position_in_track] != td.detection.confidence:
            raise TrackConsistencyError(
                f"track {td.track_id} history disagrees with detection at {td.position_in_track}"
            )
        out.append(
            BoostedDetection(
                detection=td.detection,
                track_id=td.track_id,
                original_confidence=td.detection.confidence,
                boosted_confidence=boosted[td.position_in_track],
            )
        )
    return out
