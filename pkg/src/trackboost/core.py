"""Box geometry, detection containers and per-video detection sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

SMALL_AREA_MAX = 32.0**2
MEDIUM_AREA_MAX = 96.0**2
SIZE_CATEGORIES = ("small", "medium", "large")


class InvalidBoxError(ValueError):
    """Raised when a box has non-positive width or height."""


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (a bug, not bad input)."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in corner form, pixel coordinates, origin top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidBoxError(
                f"degenerate box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "BoundingBox":
        return cls(x, y, x + w, y + h)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def area(self) -> float:
        return self.width * self.height

    def to_xywh(self) -> List[float]:
        return [self.x_min, self.y_min, self.width, self.height]

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def clamped(self, width: float, height: float) -> "BoundingBox":
        """Clip to ``[0, width] x [0, height]``.

        Raises:
            InvalidBoxError: if nothing of the box is left inside the frame.
        """
        return BoundingBox(
            min(max(self.x_min, 0.0), width),
            min(max(self.y_min, 0.0), height),
            min(max(self.x_max, 0.0), width),
            min(max(self.y_max, 0.0), height),
        )


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area() + b.area() - inter)


def area_category(box: BoundingBox) -> str:
    """COCO size bin of a box: small < 32^2 <= medium < 96^2 <= large."""
    area = box.area()
    if area < SMALL_AREA_MAX:
        return "small"
    if area < MEDIUM_AREA_MAX:
        return "medium"
    return "large"


@dataclass(frozen=True)
class FrameSize:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame size must be positive, got {self.width}x{self.height}")

    @property
    def diagonal(self) -> float:
        return (self.width**2 + self.height**2) ** 0.5


@dataclass(frozen=True)
class Detection:
    frame_index: int
    bbox: BoundingBox
    confidence: float
    class_label: str = "drone"

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"negative frame index {self.frame_index}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectionSequence:
    """One video's detector output, every frame listed (empty frames included).

    Empty frames matter: the tracker decrements hit counters on them.
    """

    frame_size: FrameSize
    frames: Tuple[Tuple[int, Tuple[Detection, ...]], ...] = field(default=())

    def __post_init__(self):
        frames = tuple((int(i), tuple(dets)) for i, dets in self.frames)
        object.__setattr__(self, "frames", frames)
        last = -1
        for index, dets in frames:
            if index <= last:
                raise ValueError(f"frame indices not strictly increasing at {index}")
            last = index
            for det in dets:
                if det.frame_index != index:
                    raise ValueError(
                        f"detection tagged frame {det.frame_index} listed under frame {index}"
                    )

    @classmethod
    def from_detections(
        cls,
        frame_size: FrameSize,
        detections: Sequence[Detection],
        frame_indices: Sequence[int] = (),
    ) -> "DetectionSequence":
        """Group detections by frame; ``frame_indices`` adds frames that may be empty."""
        by_frame = {int(i): [] for i in frame_indices}
        for det in detections:
            by_frame.setdefault(det.frame_index, []).append(det)
        return cls(frame_size, tuple((i, tuple(by_frame[i])) for i in sorted(by_frame)))

    def __iter__(self) -> Iterator[Tuple[int, Tuple[Detection, ...]]]:
        return iter(self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def detections(self) -> List[Detection]:
        return [det for _, dets in self.frames for det in dets]
