"""Constant-velocity Kalman tracker with greedy association and hit counters.

The filter state is the box center and its velocity ``(cx, cy, vcx, vcy)``;
box width/height ride along from the last matched detection. Only detector
boxes are ever emitted: frames where a track coasts on its prediction produce
no output.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core import Detection, DetectionSequence, FrameSize

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
DEAD = "dead"

# initial velocity variance is this multiple of Q
INITIAL_VELOCITY_VARIANCE_FACTOR = 10.0

_F = np.array(
    [
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)
_H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


class SequencingError(ValueError):
    """Frames were stepped out of order."""


class ConcurrentStepError(RuntimeError):
    """Two threads called ``step`` on the same tracker at once."""


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker parameters.

    ``measurement_uncertainty`` (R) and ``process_uncertainty`` (Q) scale the
    identity noise matrices. The association gate is a fraction of the frame
    diagonal so the same config works across resolutions.
    """

    measurement_uncertainty: float = 0.2
    process_uncertainty: float = 1.0
    distance_threshold_frac: float = 0.05
    hit_counter_max: int = 15
    initialization_delay: int = 7

    def __post_init__(self):
        if self.measurement_uncertainty <= 0 or self.process_uncertainty <= 0:
            raise ValueError("measurement and process uncertainty must be positive")
        if not 0 < self.distance_threshold_frac <= 1:
            raise ValueError("distance_threshold_frac must lie in (0, 1]")
        if self.hit_counter_max < 1:
            raise ValueError("hit_counter_max must be >= 1")
        if not 0 <= self.initialization_delay < self.hit_counter_max:
            raise ValueError("need 0 <= initialization_delay < hit_counter_max")


@dataclass(frozen=True, eq=False)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(4)
        cov = np.array(self.covariance, dtype=float).reshape(4, 4)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def position(self) -> Tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])


def initial_state(center: Tuple[float, float], config: TrackerConfig) -> KalmanState:
    r = config.measurement_uncertainty
    qv = config.process_uncertainty * INITIAL_VELOCITY_VARIANCE_FACTOR
    return KalmanState(np.array([center[0], center[1], 0.0, 0.0]), np.diag([r, r, qv, qv]))


def predict(state: KalmanState, config: TrackerConfig) -> KalmanState:
    mean = _F @ state.mean
    cov = _F @ state.covariance @ _F.T + config.process_uncertainty * np.eye(4)
    return KalmanState(mean, cov)


def update(
    state: KalmanState, measurement: Tuple[float, float], config: TrackerConfig
) -> KalmanState:
    """Fold a center measurement into the state.

    The innovation covariance ``H P H^T + R I`` is always invertible because
    R > 0, so no singular case is handled here.
    """
    P = state.covariance
    S = _H @ P @ _H.T + config.measurement_uncertainty * np.eye(2)
    K = P @ _H.T @ np.linalg.inv(S)
    innovation = np.asarray(measurement, dtype=float) - _H @ state.mean
    mean = state.mean + K @ innovation
    cov = (np.eye(4) - K @ _H) @ P
    return KalmanState(mean, cov)


class TrackHit(NamedTuple):
    frame_index: int
    detection: Detection
    confidence: float


@dataclass
class Track:
    track_id: int
    state: KalmanState
    last_box_extent: Tuple[float, float]
    hit_counter: int = 1
    age: int = 0
    status: str = TENTATIVE
    history: List[TrackHit] = field(default_factory=list)
    # matches after the spawning detection; drives confirmation
    hits_since_spawn: int = 0
    was_confirmed: bool = False

    @property
    def scores(self) -> List[float]:
        return [hit.confidence for hit in self.history]

    @property
    def is_alive(self) -> bool:
        return self.status != DEAD


@dataclass(frozen=True)
class TrackedDetection:
    detection: Detection
    track_id: int
    position_in_track: int


def associate(
    predicted_tracks: Sequence[Track],
    detections: Sequence[Detection],
    frame_size: FrameSize,
    config: TrackerConfig,
) -> Tuple[List[Tuple[int, int]], List[int], List[int]]:
    """Greedy nearest-first matching on center distance.

    Pairs within the gate are consumed in ascending distance; ties go to the
    earlier track, then the earlier detection.

    Returns:
        ``(matches, unmatched_track_ids, unmatched_detection_indices)`` where
        matches are ``(track_id, detection_index)`` pairs.
    """
    gate = config.distance_threshold_frac * frame_size.diagonal
    pairs = []
    if predicted_tracks and detections:
        track_xy = np.array([t.state.mean[:2] for t in predicted_tracks])
        det_xy = np.array([d.bbox.center for d in detections])
        dist = np.linalg.norm(track_xy[:, None, :] - det_xy[None, :, :], axis=2)
        ti, di = np.nonzero(dist <= gate)
        pairs = sorted(zip(dist[ti, di].tolist(), ti.tolist(), di.tolist()))

    used_tracks, used_dets = set(), set()
    matches = []
    for _, ti, di in pairs:
        if ti in used_tracks or di in used_dets:
            continue
        used_tracks.add(ti)
        used_dets.add(di)
        matches.append((predicted_tracks[ti].track_id, di))
    unmatched_tracks = [t.track_id for i, t in enumerate(predicted_tracks) if i not in used_tracks]
    unmatched_dets = [i for i in range(len(detections)) if i not in used_dets]
    return matches, unmatched_tracks, unmatched_dets


class Tracker:
    """Stateful tracker for a single video.

    ``step`` must be called once per frame with increasing frame indices.
    Calling it from two threads at once raises ``ConcurrentStepError``; run
    one tracker per video to parallelize.
    """

    def __init__(self, frame_size: FrameSize, config: Optional[TrackerConfig] = None):
        self.frame_size = frame_size
        self.config = config or TrackerConfig()
        self._tracks: List[Track] = []
        self._next_id = 1
        self._last_frame: Optional[int] = None
        self._lock = threading.Lock()

    @property
    def live_tracks(self) -> List[Track]:
        return [t for t in self._tracks if t.is_alive]

    @property
    def all_tracks(self) -> List[Track]:
        return list(self._tracks)

    def confirmed_tracks(self) -> List[Track]:
        """Tracks that reached confirmation at some point, in id order."""
        return [t for t in self._tracks if t.was_confirmed]

    def step(self, frame_index: int, frame_detections: Sequence[Detection]) -> List[TrackedDetection]:
        if not self._lock.acquire(blocking=False):
            raise ConcurrentStepError("step called concurrently on one tracker instance")
        try:
            return self._step(frame_index, frame_detections)
        finally:
            self._lock.release()

    def _step(self, frame_index, detections):
        if self._last_frame is not None and frame_index <= self._last_frame:
            raise SequencingError(
                f"frame {frame_index} stepped after frame {self._last_frame}"
            )
        for det in detections:
            if det.frame_index != frame_index:
                raise SequencingError(
                    f"detection for frame {det.frame_index} passed to step({frame_index})"
                )
        self._last_frame = frame_index
        cfg = self.config

        live = self.live_tracks
        for track in live:
            track.state = predict(track.state, cfg)
            track.age += 1

        matches, unmatched_tracks, unmatched_dets = associate(live, detections, self.frame_size, cfg)
        by_id = {t.track_id: t for t in live}

        emitted = []
        for track_id, di in matches:
            track = by_id[track_id]
            det = detections[di]
            track.state = update(track.state, det.bbox.center, cfg)
            track.hit_counter = min(track.hit_counter + 1, cfg.hit_counter_max)
            track.hits_since_spawn += 1
            track.last_box_extent = (det.bbox.width, det.bbox.height)
            track.history.append(TrackHit(frame_index, det, det.confidence))
            self._maybe_confirm(track)
            if track.status == CONFIRMED:
                emitted.append((di, TrackedDetection(det, track_id, len(track.history) - 1)))

        for track_id in unmatched_tracks:
            track = by_id[track_id]
            track.hit_counter -= 1
            if track.hit_counter <= 0:
                track.hit_counter = 0
                track.status = DEAD

        for di in unmatched_dets:
            det = detections[di]
            track = Track(
                track_id=self._next_id,
                state=initial_state(det.bbox.center, cfg),
                last_box_extent=(det.bbox.width, det.bbox.height),
                hit_counter=1,
                history=[TrackHit(frame_index, det, det.confidence)],
            )
            self._next_id += 1
            self._tracks.append(track)
            self._maybe_confirm(track)
            if track.status == CONFIRMED:
                emitted.append((di, TrackedDetection(det, track.track_id, 0)))

        emitted.sort(key=lambda pair: pair[0])
        return [td for _, td in emitted]

    def _maybe_confirm(self, track: Track) -> None:
        if track.status == TENTATIVE and track.hits_since_spawn >= self.config.initialization_delay:
            track.status = CONFIRMED
            track.was_confirmed = True


def run_sequence(
    sequence: DetectionSequence, config: Optional[TrackerConfig] = None
) -> Tuple[List[TrackedDetection], List[Track]]:
    """Track a whole video; returns emitted detections and the confirmed-track table."""
    tracker = Tracker(sequence.frame_size, config)
    tracked: List[TrackedDetection] = []
    for frame_index, dets in sequence:
        tracked.extend(tracker.step(frame_index, dets))
    return tracked, tracker.confirmed_tracks()
