"""Association of per-frame detections into subject trajectories.

Matching runs in two confidence stages per frame, in clip order:

1. trajectories (active or recently lost) vs. high-confidence detections,
   cost 1 - IoU(predicted box, detection box), pairs with IoU below the
   stage-1 threshold or with mismatched categories forbidden;
2. still-unmatched trajectories vs. mid-confidence detections under the
   stage-2 threshold.

Unmatched high-confidence detections open new trajectories; detections
below the low threshold are dropped. A trajectory unmatched for more than
``max_lost_frames`` consecutive clip frames is finished and leaves the
candidate pool. Subject ids are issued in creation order starting at 1, so
the whole association is a pure function of (frames, params).

Motion prediction replaces the stochastic filter of production trackers
with a deterministic constant-velocity extrapolator: the box is translated
by the per-raw-frame displacement of its center between the last two
entries. Prediction may extend past image bounds; it is only consumed by
IoU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator, Sequence

from .assignment import assign
from .boxes import BoundingBox, iou
from .errors import RecordError, VideoloomError
from .records import FrameRecord

# Cost sentinel for category-gated pairs: above any 1 - IoU threshold yet finite.
_GATED = 2.0


class TrackState(str, Enum):
    ACTIVE = "active"
    LOST = "lost"
    FINISHED = "finished"


@dataclass(frozen=True)
class TrackerParams:
    high_score_threshold: float = 0.6
    low_score_threshold: float = 0.1
    iou_match_threshold_stage1: float = 0.5
    iou_match_threshold_stage2: float = 0.5
    max_lost_frames: int = 2
    motion: str = "constant-velocity"  # or "static"

    def validate(self) -> None:
        for name in (
            "high_score_threshold",
            "low_score_threshold",
            "iou_match_threshold_stage1",
            "iou_match_threshold_stage2",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise RecordError(name, f"{name} must lie in [0,1], got {v}")
        if self.low_score_threshold > self.high_score_threshold:
            raise RecordError("low_score_threshold", "low threshold must not exceed high threshold")
        if self.max_lost_frames < 0:
            raise RecordError("max_lost_frames", "max_lost_frames must be >= 0")
        if self.motion not in ("static", "constant-velocity"):
            raise RecordError("motion", f"unknown motion model '{self.motion}'")


@dataclass(frozen=True)
class TrackEntry:
    frame_index: int
    box: BoundingBox
    score: float
    caption: str = ""
    action: str = ""


@dataclass
class SubjectTrajectory:
    """One subject's per-frame attribute track with a stable identity."""

    subject_id: int
    category: str
    entries: list[TrackEntry] = field(default_factory=list)
    state: TrackState = TrackState.ACTIVE
    video_id: str = ""
    clip_id: str = ""

    @property
    def length(self) -> int:
        return len(self.entries)

    @property
    def mean_score(self) -> float:
        return sum(e.score for e in self.entries) / len(self.entries)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "clip_id": self.clip_id,
            "subject_id": self.subject_id,
            "category": self.category,
            "entries": [
                {
                    "frame_index": e.frame_index,
                    "bbox": e.box.as_list(),
                    "score": e.score,
                    "caption": e.caption,
                    "action": e.action,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SubjectTrajectory":
        try:
            entries = [
                TrackEntry(
                    frame_index=int(e["frame_index"]),
                    box=BoundingBox.from_list(e["bbox"]),
                    score=float(e["score"]),
                    caption=str(e.get("caption", "")),
                    action=str(e.get("action", "")),
                )
                for e in data["entries"]
            ]
            track = cls(
                subject_id=int(data["subject_id"]),
                category=str(data["category"]),
                entries=entries,
                video_id=str(data.get("video_id", "")),
                clip_id=str(data.get("clip_id", "")),
            )
        except KeyError as exc:
            raise RecordError(str(exc.args[0]), f"missing key {exc.args[0]!r}") from exc
        track.validate()
        return track

    def validate(self) -> None:
        if self.subject_id < 1:
            raise RecordError("subject_id", f"subject_id must be >= 1, got {self.subject_id}")
        if not self.category:
            raise RecordError("category", "category must be non-empty")
        if not self.entries:
            raise RecordError("entries", "trajectory has no entries")
        prev = -1
        for e in self.entries:
            if e.frame_index <= prev:
                raise RecordError("entries", "entries must be strictly increasing in frame_index")
            prev = e.frame_index


class TrackFormatError(VideoloomError):
    """A tracks-file line failed to parse; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def predict(trajectory: SubjectTrajectory, to_frame: int, motion: str = "constant-velocity") -> BoundingBox:
    """Expected box at a future raw frame index.

    Static mode (or a single entry) returns the last observed box;
    constant-velocity mode translates it by the center displacement per raw
    frame estimated from the last two entries, scaled by the index gap.
    """
    if not trajectory.entries:
        raise RecordError("entries", "cannot predict from an empty trajectory")
    last = trajectory.entries[-1]
    if to_frame <= last.frame_index:
        raise RecordError("frame_index", f"to_frame {to_frame} is not past the last entry {last.frame_index}")
    if motion == "static" or len(trajectory.entries) < 2:
        return last.box
    prev = trajectory.entries[-2]
    dt = last.frame_index - prev.frame_index
    vx = ((last.box.x1 + last.box.x2) - (prev.box.x1 + prev.box.x2)) / 2.0 / dt
    vy = ((last.box.y1 + last.box.y2) - (prev.box.y1 + prev.box.y2)) / 2.0 / dt
    steps = to_frame - last.frame_index
    return last.box.translate(vx * steps, vy * steps)


def _match_stage(
    pool: Sequence[SubjectTrajectory],
    predictions: Sequence[BoundingBox],
    detections: Sequence,
    iou_threshold: float,
) -> list[tuple[int, int]]:
    """Assign pool trajectories to detections; category-gated IoU cost."""
    if not pool or not detections:
        return []
    cost = [
        [
            (1.0 - iou(predictions[i], det.box)) if track.category == det.category else _GATED
            for det in detections
        ]
        for i, track in enumerate(pool)
    ]
    return assign(cost, forbid_above=1.0 - iou_threshold)


def associate(
    frames: Sequence[FrameRecord],
    params: TrackerParams | None = None,
    clip_id: str = "",
) -> list[SubjectTrajectory]:
    """Associate clip frames into subject trajectories.

    Frames must be non-empty and ordered as the clip orders them
    (ascending frame_index). Returns all trajectories ever created, sorted
    by subject_id, each with its terminal state.
    """
    params = params or TrackerParams()
    params.validate()
    if not frames:
        raise RecordError("frames", "associate needs at least one frame")
    video_id = frames[0].video_id

    tracks: list[SubjectTrajectory] = []
    lost_for: dict[int, int] = {}
    next_id = 1

    for frame in frames:
        pool = [t for t in tracks if t.state is not TrackState.FINISHED]
        predictions = [predict(t, frame.frame_index, params.motion) for t in pool]

        high = [d for d in frame.detections if d.score >= params.high_score_threshold]
        low = [
            d
            for d in frame.detections
            if params.low_score_threshold <= d.score < params.high_score_threshold
        ]

        matched_tracks: set[int] = set()
        matched_high: set[int] = set()

        for ti, di in _match_stage(pool, predictions, high, params.iou_match_threshold_stage1):
            _append(pool[ti], frame.frame_index, high[di])
            lost_for[pool[ti].subject_id] = 0
            matched_tracks.add(ti)
            matched_high.add(di)

        rest = [i for i in range(len(pool)) if i not in matched_tracks]
        rest_pool = [pool[i] for i in rest]
        rest_pred = [predictions[i] for i in rest]
        for ti, di in _match_stage(rest_pool, rest_pred, low, params.iou_match_threshold_stage2):
            _append(rest_pool[ti], frame.frame_index, low[di])
            lost_for[rest_pool[ti].subject_id] = 0
            matched_tracks.add(rest[ti])

        for i, track in enumerate(pool):
            if i in matched_tracks:
                continue
            lost_for[track.subject_id] = lost_for.get(track.subject_id, 0) + 1
            track.state = (
                TrackState.FINISHED if lost_for[track.subject_id] > params.max_lost_frames else TrackState.LOST
            )

        for di, det in enumerate(high):
            if di in matched_high:
                continue
            track = SubjectTrajectory(
                subject_id=next_id,
                category=det.category,
                entries=[TrackEntry(frame.frame_index, det.box, det.score, det.caption, det.action)],
                state=TrackState.ACTIVE,
                video_id=video_id,
                clip_id=clip_id,
            )
            lost_for[next_id] = 0
            next_id += 1
            tracks.append(track)

    return tracks


def _append(track: SubjectTrajectory, frame_index: int, det) -> None:
    track.entries.append(TrackEntry(frame_index, det.box, det.score, det.caption, det.action))
    track.state = TrackState.ACTIVE


def serialize_tracks(tracks: Iterable[SubjectTrajectory]) -> Iterator[str]:
    for track in tracks:
        yield json.dumps(track.to_dict(), ensure_ascii=False)


def parse_tracks(stream: Iterable[str] | IO[str]) -> list[SubjectTrajectory]:
    """Parse a tracks file; lines stay in file order."""
    out = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TrackFormatError(line_no, f"invalid JSON: {exc.msg}") from exc
        try:
            out.append(SubjectTrajectory.from_dict(data))
        except RecordError as exc:
            raise TrackFormatError(line_no, str(exc)) from exc
    return out
