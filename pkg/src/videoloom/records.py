"""Domain records for per-frame detections and sampled clips."""

from __future__ import annotations

from dataclasses import dataclass, field

from .boxes import BoundingBox
from .errors import RecordError


@dataclass(frozen=True)
class Detection:
    """One detected subject in one frame: box plus textual attributes.

    ``caption`` and ``action`` may be empty when the source lacks them;
    downstream task generation skips attribute kinds that are absent.
    """

    box: BoundingBox
    score: float
    category: str
    caption: str = ""
    action: str = ""

    def validate(self, width: float | None = None, height: float | None = None) -> None:
        self.box.validate(width, height)
        if not (isinstance(self.score, (int, float)) and 0.0 <= self.score <= 1.0):
            raise RecordError("score", f"score must lie in [0,1], got {self.score!r}")
        if not self.category:
            raise RecordError("category", "category must be non-empty")


@dataclass(frozen=True)
class FrameRecord:
    """All detections of one video frame, with the frame's pixel dims."""

    video_id: str
    frame_index: int
    width: int
    height: int
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        if not self.video_id:
            raise RecordError("video_id", "video_id must be non-empty")
        if not (isinstance(self.frame_index, int) and self.frame_index >= 0):
            raise RecordError("frame_index", f"frame_index must be a non-negative integer, got {self.frame_index!r}")
        if not (isinstance(self.width, int) and self.width > 0):
            raise RecordError("width", f"width must be a positive integer, got {self.width!r}")
        if not (isinstance(self.height, int) and self.height > 0):
            raise RecordError("height", f"height must be a positive integer, got {self.height!r}")
        for det in self.detections:
            det.validate(self.width, self.height)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_index": self.frame_index,
            "width": self.width,
            "height": self.height,
            "detections": [
                {
                    "bbox": det.box.as_list(),
                    "score": det.score,
                    "category": det.category,
                    "caption": det.caption,
                    "action": det.action,
                }
                for det in self.detections
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FrameRecord":
        """Build and validate a record from the detections wire format.

        Unknown keys are ignored; missing caption/action default to "".
        """
        try:
            raw_dets = data["detections"]
        except KeyError as exc:
            raise RecordError("detections", "missing key 'detections'") from exc
        if not isinstance(raw_dets, list):
            raise RecordError("detections", "'detections' must be a list")
        dets = []
        for i, raw in enumerate(raw_dets):
            if not isinstance(raw, dict):
                raise RecordError("detections", f"detection {i} is not an object")
            try:
                bbox = raw["bbox"]
            except KeyError as exc:
                raise RecordError("bbox", f"detection {i} missing key 'bbox'") from exc
            if not isinstance(bbox, list):
                raise RecordError("bbox", f"detection {i}: 'bbox' must be a list")
            for key in ("score", "category"):
                if key not in raw:
                    raise RecordError(key, f"detection {i} missing key '{key}'")
            dets.append(
                Detection(
                    box=BoundingBox.from_list(bbox),
                    score=float(raw["score"]),
                    category=str(raw["category"]),
                    caption=str(raw.get("caption", "")),
                    action=str(raw.get("action", "")),
                )
            )
        for key in ("video_id", "frame_index", "width", "height"):
            if key not in data:
                raise RecordError(key, f"missing key '{key}'")
        record = cls(
            video_id=str(data["video_id"]),
            frame_index=data["frame_index"],
            width=data["width"],
            height=data["height"],
            detections=tuple(dets),
        )
        record.validate()
        return record


@dataclass(frozen=True)
class ClipSpec:
    """A sampled frame-index subset of one video.

    ``gap`` records the fixed spacing used, or the string "random" when each
    successive gap was drawn independently. ``frame_indices`` is always
    explicit, so a ClipSpec alone reproduces the clip.
    """

    video_id: str
    frame_indices: tuple[int, ...]
    count: int
    gap: int | str
    seed: int

    def validate(self) -> None:
        if len(self.frame_indices) != self.count:
            raise RecordError("count", f"count={self.count} but {len(self.frame_indices)} indices")
        if self.count < 1:
            raise RecordError("count", "count must be >= 1")
        prev = -1
        for idx in self.frame_indices:
            if not (isinstance(idx, int) and idx >= 0):
                raise RecordError("frame_indices", f"frame index must be a non-negative integer, got {idx!r}")
            if idx <= prev:
                raise RecordError("frame_indices", "frame indices must be strictly increasing")
            prev = idx

    def position_of(self, frame_index: int) -> int:
        """1-based clip position of a raw frame index."""
        try:
            return self.frame_indices.index(frame_index) + 1
        except ValueError:
            raise RecordError("frame_indices", f"frame {frame_index} is not part of this clip") from None

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_indices": list(self.frame_indices),
            "count": self.count,
            "gap": self.gap,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClipSpec":
        spec = cls(
            video_id=str(data["video_id"]),
            frame_indices=tuple(data["frame_indices"]),
            count=int(data["count"]),
            gap=data["gap"],
            seed=int(data["seed"]),
        )
        spec.validate()
        return spec
