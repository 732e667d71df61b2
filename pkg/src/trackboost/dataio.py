"""COCO / MOT readers and writers, tracked-output documents, frame sampling.

Video identity comes from the COCO image ``file_name`` convention
``{video_id}/{frame_index}.<ext>``. Explicit ``video_id``/``frame_index``
fields on an image entry take precedence, and a mapping passed by the caller
overrides both.

Parsers never drop anything quietly: every clamp or rejection is counted in
a ``Diagnostics`` object returned next to the data.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .boost import BoostedDetection
from .core import (
    BoundingBox,
    Detection,
    DetectionSequence,
    FrameSize,
    InvalidBoxError,
    InvariantViolation,
)
from .tracker import Track, TrackedDetection

logger = logging.getLogger(__name__)

FrameKey = Tuple[str, int]


class ParseError(ValueError):
    """Malformed input record; the message names the record or line."""


@dataclass
class Diagnostics:
    counts: Counter = field(default_factory=Counter)
    messages: List[str] = field(default_factory=list)

    def add(self, kind: str, message: str) -> None:
        self.counts[kind] += 1
        self.messages.append(message)
        logger.warning(message)

    def merge(self, other: "Diagnostics") -> None:
        self.counts.update(other.counts)
        self.messages.extend(other.messages)

    def summary(self) -> str:
        if not self.counts:
            return "no diagnostics"
        return ", ".join(f"{k}={v}" for k, v in sorted(self.counts.items()))


@dataclass
class CocoGroundTruth:
    boxes: Dict[FrameKey, List[BoundingBox]]
    frame_sizes: Dict[str, FrameSize]
    image_ids: Dict[FrameKey, int]
    categories: Dict[int, str]
    document: Dict[str, Any]

    @property
    def keys_by_image_id(self) -> Dict[int, FrameKey]:
        return {v: k for k, v in self.image_ids.items()}

    def frames_of(self, video_id: str) -> List[int]:
        return sorted(f for v, f in self.image_ids if v == video_id)

    @property
    def video_ids(self) -> List[str]:
        return sorted(self.frame_sizes)


def _load_json(source) -> Any:
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{source}: invalid JSON ({exc})") from exc
    return source


def frame_key_from_file_name(file_name: str) -> FrameKey:
    path = PurePosixPath(file_name.replace("\\", "/"))
    try:
        frame = int(path.stem)
    except ValueError:
        raise ParseError(f"file_name {file_name!r} does not follow '{{video_id}}/{{frame_index}}.ext'") from None
    return str(path.parent), frame


def _number_list(value, n, what):
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ParseError(f"{what}: expected a list of {n} numbers, got {value!r}")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ParseError(f"{what}: non-numeric value in {value!r}") from None
    if not all(math.isfinite(v) for v in out):
        raise ParseError(f"{what}: non-finite value in {value!r}")
    return out


def _checked_box(xyxy, frame_size: FrameSize, where: str, diag: Diagnostics) -> Optional[BoundingBox]:
    """Clamp to the frame; count clamps; reject (return None) degenerate boxes."""
    x0, y0, x1, y1 = xyxy
    if not (x0 < x1 and y0 < y1):
        diag.add("rejected_degenerate", f"{where}: degenerate box {list(xyxy)} rejected")
        return None
    box = BoundingBox(x0, y0, x1, y1)
    try:
        clamped = box.clamped(frame_size.width, frame_size.height)
    except InvalidBoxError:
        diag.add("rejected_outside", f"{where}: box {list(xyxy)} lies outside the frame, rejected")
        return None
    if clamped != box:
        diag.add("clamped_boxes", f"{where}: box {list(xyxy)} clamped to the frame")
    return clamped


def read_coco_groundtruth(
    source, image_map: Optional[Mapping[int, FrameKey]] = None
) -> Tuple[CocoGroundTruth, Diagnostics]:
    """Parse a COCO annotations document into per-frame ground-truth boxes."""
    doc = _load_json(source)
    diag = Diagnostics()
    if not isinstance(doc, dict) or "images" not in doc:
        raise ParseError("annotations document needs an 'images' list")

    image_ids: Dict[FrameKey, int] = {}
    sizes: Dict[int, FrameSize] = {}
    frame_sizes: Dict[str, FrameSize] = {}
    for i, img in enumerate(doc["images"]):
        try:
            image_id = int(img["id"])
            size = FrameSize(int(img["width"]), int(img["height"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"images[{i}]: malformed image entry ({exc})") from None
        if image_map is not None and image_id in image_map:
            video, frame = image_map[image_id]
            key = (str(video), int(frame))
        elif "video_id" in img and "frame_index" in img:
            key = (str(img["video_id"]), int(img["frame_index"]))
        else:
            key = frame_key_from_file_name(str(img.get("file_name", "")))
        if key in image_ids:
            raise ParseError(f"images[{i}]: frame {key} listed twice")
        if key[1] < 0:
            raise ParseError(f"images[{i}]: negative frame index")
        prev = frame_sizes.setdefault(key[0], size)
        if prev != size:
            raise ParseError(f"images[{i}]: video {key[0]!r} mixes frame sizes {prev} and {size}")
        image_ids[key] = image_id
        sizes[image_id] = size

    keys = {v: k for k, v in image_ids.items()}
    boxes: Dict[FrameKey, List[BoundingBox]] = {k: [] for k in sorted(image_ids)}
    for i, ann in enumerate(doc.get("annotations", [])):
        try:
            image_id = int(ann["image_id"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"annotations[{i}]: missing or invalid image_id") from None
        if image_id not in keys:
            raise ParseError(f"annotations[{i}]: unknown image_id {image_id}")
        x, y, w, h = _number_list(ann.get("bbox"), 4, f"annotations[{i}].bbox")
        key = keys[image_id]
        box = _checked_box((x, y, x + w, y + h), sizes[image_id], f"annotations[{i}] (frame {key})", diag)
        if box is not None:
            boxes[key].append(box)

    categories = {int(c["id"]): str(c.get("name", c["id"])) for c in doc.get("categories", [])}
    return CocoGroundTruth(boxes, frame_sizes, image_ids, categories, doc), diag


def read_coco_detections(
    source, gt: CocoGroundTruth
) -> Tuple[Dict[str, DetectionSequence], Diagnostics]:
    """Parse a COCO results list into one ``DetectionSequence`` per video.

    Every frame known to ``gt`` appears in its video's sequence, with an
    empty list when nothing was detected. Extra record fields are ignored.
    """
    records = _load_json(source)
    if not isinstance(records, list):
        raise ParseError("detections document must be a JSON list")
    diag = Diagnostics()
    keys = gt.keys_by_image_id
    per_video: Dict[str, List[Detection]] = {v: [] for v in gt.video_ids}
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise ParseError(f"record {i}: expected an object")
        try:
            image_id = int(rec["image_id"])
            score = float(rec["score"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"record {i}: missing or invalid image_id/score") from None
        if not math.isfinite(score):
            raise ParseError(f"record {i}: non-finite score")
        if image_id not in keys:
            raise ParseError(f"record {i}: unknown image_id {image_id}")
        x, y, w, h = _number_list(rec.get("bbox"), 4, f"record {i}.bbox")
        video, frame = keys[image_id]
        if not 0.0 <= score <= 1.0:
            diag.add("clamped_scores", f"record {i}: score {score} clamped to [0, 1]")
            score = min(max(score, 0.0), 1.0)
        box = _checked_box((x, y, x + w, y + h), gt.frame_sizes[video], f"record {i} (frame {(video, frame)})", diag)
        if box is None:
            continue
        label = gt.categories.get(int(rec.get("category_id", 1)), "drone")
        per_video[video].append(Detection(frame, box, score, label))

    sequences = {
        v: DetectionSequence.from_detections(gt.frame_sizes[v], dets, gt.frames_of(v))
        for v, dets in per_video.items()
    }
    return sequences, diag


def _category_id(gt: Optional[CocoGroundTruth], label: str) -> int:
    if gt is not None:
        for cid, name in gt.categories.items():
            if name == label:
                return cid
    return 1


def detection_records(sequences: Mapping[str, DetectionSequence], gt: CocoGroundTruth) -> List[dict]:
    out = []
    for video in sorted(sequences):
        for det in sequences[video].detections():
            out.append(
                {
                    "image_id": gt.image_ids[(video, det.frame_index)],
                    "category_id": _category_id(gt, det.class_label),
                    "bbox": det.bbox.to_xywh(),
                    "score": det.confidence,
                }
            )
    return out


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def write_coco_detections(path, sequences: Mapping[str, DetectionSequence], gt: CocoGroundTruth) -> None:
    _write_json(path, detection_records(sequences, gt))


# -- tracked documents -------------------------------------------------------


@dataclass(frozen=True)
class TrackRecord:
    """The part of a track that boosting needs, as stored on disk."""

    track_id: int
    frames: Tuple[int, ...]
    scores: Tuple[float, ...]


def tracked_document(
    results: Mapping[str, Tuple[Sequence[TrackedDetection], Sequence[Track]]],
    image_ids: Mapping[FrameKey, int],
) -> Dict[str, Any]:
    """Emitted detections plus the confirmed-track table, per video.

    Boxes are stored in corner form (``bbox_xyxy``) so the boost step
    rebuilds detections exactly; ``bbox`` keeps COCO tools working.
    """
    detections, tracks = [], []
    for video in sorted(results):
        tracked, track_table = results[video]
        for td in tracked:
            det = td.detection
            detections.append(
                {
                    "image_id": image_ids[(video, det.frame_index)],
                    "video_id": video,
                    "frame_index": det.frame_index,
                    "category_id": 1,
                    "class_label": det.class_label,
                    "bbox": det.bbox.to_xywh(),
                    "bbox_xyxy": list(det.bbox.as_tuple()),
                    "score": det.confidence,
                    "track_id": td.track_id,
                    "position_in_track": td.position_in_track,
                }
            )
        for t in track_table:
            tracks.append(
                {
                    "video_id": video,
                    "track_id": t.track_id,
                    "frames": [h.frame_index for h in t.history],
                    "scores": [h.confidence for h in t.history],
                }
            )
    return {"detections": detections, "tracks": tracks}


def write_tracked(path, results, image_ids) -> None:
    _write_json(path, tracked_document(results, image_ids))


def read_tracked(
    source,
) -> Tuple[Dict[str, Tuple[List[TrackedDetection], List[TrackRecord]]], Dict[FrameKey, int]]:
    """Inverse of ``write_tracked``; also returns the frame -> image_id map."""
    doc = _load_json(source)
    if not isinstance(doc, dict) or "detections" not in doc or "tracks" not in doc:
        raise ParseError("tracked document needs 'detections' and 'tracks'")
    results: Dict[str, Tuple[List[TrackedDetection], List[TrackRecord]]] = {}
    image_ids: Dict[FrameKey, int] = {}
    for i, rec in enumerate(doc["detections"]):
        try:
            video = str(rec["video_id"])
            frame = int(rec["frame_index"])
            box = BoundingBox(*_number_list(rec["bbox_xyxy"], 4, f"detections[{i}].bbox_xyxy"))
            det = Detection(frame, box, float(rec["score"]), str(rec.get("class_label", "drone")))
            td = TrackedDetection(det, int(rec["track_id"]), int(rec["position_in_track"]))
            image_ids[(video, frame)] = int(rec["image_id"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"detections[{i}]: {exc}") from None
        results.setdefault(video, ([], []))[0].append(td)
    for i, rec in enumerate(doc["tracks"]):
        try:
            video = str(rec["video_id"])
            record = TrackRecord(
                int(rec["track_id"]),
                tuple(int(f) for f in rec["frames"]),
                tuple(float(s) for s in rec["scores"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"tracks[{i}]: {exc}") from None
        results.setdefault(video, ([], []))[1].append(record)
    return results, image_ids


def boosted_records(
    results: Mapping[str, Sequence[BoostedDetection]], image_ids: Mapping[FrameKey, int]
) -> List[dict]:
    out = []
    for video in sorted(results):
        for b in results[video]:
            if not b.original_confidence <= b.boosted_confidence:
                raise InvariantViolation(
                    f"boosted score {b.boosted_confidence} below original {b.original_confidence}"
                )
            det = b.detection
            out.append(
                {
                    "image_id": image_ids[(video, det.frame_index)],
                    "category_id": 1,
                    "bbox": det.bbox.to_xywh(),
                    "score": b.boosted_confidence,
                    "original_score": b.original_confidence,
                    "track_id": b.track_id,
                }
            )
    return out


def write_boosted(
    path, results: Mapping[str, Sequence[BoostedDetection]], image_ids: Mapping[FrameKey, int]
) -> None:
    """COCO results with the boosted score plus ``original_score`` and ``track_id``."""
    _write_json(path, boosted_records(results, image_ids))


def read_boosted(source, gt: CocoGroundTruth) -> Dict[str, List[BoostedDetection]]:
    records = _load_json(source)
    if not isinstance(records, list):
        raise ParseError("boosted document must be a JSON list")
    keys = gt.keys_by_image_id
    out: Dict[str, List[BoostedDetection]] = {}
    for i, rec in enumerate(records):
        try:
            video, frame = keys[int(rec["image_id"])]
            x, y, w, h = _number_list(rec["bbox"], 4, f"record {i}.bbox")
            original = float(rec["original_score"])
            det = Detection(frame, BoundingBox(x, y, x + w, y + h), original)
            out.setdefault(video, []).append(
                BoostedDetection(det, int(rec["track_id"]), original, float(rec["score"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"record {i}: {exc}") from None
    return out


# -- MOT challenge CSV ----------------------------------------------------------


def read_mot_detections(
    path, frame_size: FrameSize, num_frames: Optional[int] = None
) -> Tuple[DetectionSequence, Diagnostics]:
    """Parse ``frame,id,x,y,w,h,conf,...`` lines (1-based frames).

    The id column is ignored. Frames without detections between 0 and the
    last frame (or ``num_frames - 1``) are included as empty frames.
    """
    diag = Diagnostics()
    dets: List[Detection] = []
    last = -1
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 7:
                raise ParseError(f"{path}:{lineno}: expected at least 7 fields")
            try:
                frame = int(float(row[0]))
                x, y, w, h, conf = (float(v) for v in row[2:7])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field") from None
            if frame < 1:
                raise ParseError(f"{path}:{lineno}: frame numbers start at 1")
            if not 0.0 <= conf <= 1.0:
                diag.add("clamped_scores", f"{path}:{lineno}: score {conf} clamped to [0, 1]")
                conf = min(max(conf, 0.0), 1.0)
            box = _checked_box((x, y, x + w, y + h), frame_size, f"{path}:{lineno} (frame {frame - 1})", diag)
            last = max(last, frame - 1)
            if box is not None:
                dets.append(Detection(frame - 1, box, conf))
    total = last + 1 if num_frames is None else num_frames
    if total <= last:
        raise ParseError(f"{path}: detections beyond num_frames={num_frames}")
    return DetectionSequence.from_detections(frame_size, dets, range(total)), diag


def write_mot(path, items: Iterable) -> None:
    """Write detections (id -1) or tracked detections (id = track id)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for item in items:
            if isinstance(item, TrackedDetection):
                det, tid = item.detection, item.track_id
            elif isinstance(item, BoostedDetection):
                det, tid = item.detection, item.track_id
            else:
                det, tid = item, -1
            x, y, w, h = det.bbox.to_xywh()
            conf = item.boosted_confidence if isinstance(item, BoostedDetection) else det.confidence
            writer.writerow([det.frame_index + 1, tid, repr(x), repr(y), repr(w), repr(h), repr(conf), -1, -1, -1])


# -- sampling --------------------------------------------------------------------


def uniform_sample(frame_keys: Sequence, k: int) -> list:
    """Evenly spaced deterministic subset: indices floor(i * n / k), i < k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(frame_keys)
    if k >= n:
        return list(frame_keys)
    return [frame_keys[(i * n) // k] for i in range(k)]


def sample_annotations(gt: CocoGroundTruth, k: int) -> Dict[str, Any]:
    """Subset of the annotations document keeping ``k`` evenly spaced frames.

    Frames are ordered by (video_id, frame_index).
    """
    chosen = set(gt.image_ids[key] for key in uniform_sample(sorted(gt.image_ids), k))
    doc = dict(gt.document)
    doc["images"] = [img for img in gt.document["images"] if int(img["id"]) in chosen]
    doc["annotations"] = [a for a in gt.document.get("annotations", []) if int(a["image_id"]) in chosen]
    return doc
