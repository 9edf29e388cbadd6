"""Detection-stream parsing and clip sampling.

The detections file is line-delimited JSON, one frame per line:

    {"video_id": str, "frame_index": int, "width": int, "height": int,
     "detections": [{"bbox": [x1,y1,x2,y2], "score": float, "category": str,
                     "caption": str, "action": str}]}

Unknown keys are ignored; missing caption/action default to the empty
string. Attribute extraction itself (detectors, grounding models) happens
upstream — this module only consumes their serialized outputs.
"""

from __future__ import annotations

import json
from typing import IO, Iterable, Iterator

from .errors import RecordError, VideoloomError
from .records import ClipSpec, FrameRecord
from .seeding import rng_for


class DetectionParseError(VideoloomError):
    """A detections line failed validation; carries line number and field."""

    def __init__(self, line_no: int, field: str, message: str):
        super().__init__(f"line {line_no}: field '{field}': {message}")
        self.line_no = line_no
        self.field = field


class ClipSamplingError(VideoloomError):
    """The requested clip cannot be sampled from the video."""


def parse_detections(stream: Iterable[str] | IO[str]) -> list[FrameRecord]:
    """Parse a detections stream into frame records.

    Returns records grouped by video_id (ascending) and sorted by
    frame_index within each video; detection order within a frame is
    preserved from the input.

    Raises:
        DetectionParseError: malformed JSON, invariant violations (with the
            offending field and line number), boxes outside the frame, or a
            duplicate (video_id, frame_index).
    """
    records: list[FrameRecord] = []
    seen: set[tuple[str, int]] = set()
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DetectionParseError(line_no, "json", f"invalid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise DetectionParseError(line_no, "json", "line is not a JSON object")
        try:
            record = FrameRecord.from_dict(data)
        except RecordError as exc:
            raise DetectionParseError(line_no, exc.field, str(exc)) from exc
        key = (record.video_id, record.frame_index)
        if key in seen:
            raise DetectionParseError(
                line_no, "frame_index", f"duplicate frame {record.frame_index} for video '{record.video_id}'"
            )
        seen.add(key)
        records.append(record)
    records.sort(key=lambda r: (r.video_id, r.frame_index))
    return records


def serialize_detections(records: Iterable[FrameRecord]) -> Iterator[str]:
    """Yield wire-format lines; parse_detections inverts this exactly."""
    for record in records:
        yield json.dumps(record.to_dict(), ensure_ascii=False)


def total_frames_by_video(records: Iterable[FrameRecord]) -> dict[str, int]:
    """Frame count per video, taken as max frame_index + 1."""
    totals: dict[str, int] = {}
    for record in records:
        totals[record.video_id] = max(totals.get(record.video_id, 0), record.frame_index + 1)
    return totals


def sample_clip(
    total_frames: int,
    count: int,
    gap: int | tuple[int, int],
    seed: int,
    video_id: str = "",
    ordinal: int = 0,
) -> ClipSpec:
    """Sample a clip of ``count`` frame indices from [0, total_frames).

    With a fixed integer ``gap`` g, the start position is drawn uniformly
    from the valid range and indices are the arithmetic progression
    start, start+g, ... With ``gap`` = (g_min, g_max), each successive gap
    is drawn uniformly from [g_min, g_max]; feasibility is required for the
    worst case g_max so it never depends on the draw.

    ``seed`` is the run seed; the draw is keyed by (seed, video_id,
    ordinal), so several clips of one video stay independent while the
    whole call remains a pure function of its arguments.

    Raises:
        ClipSamplingError: the video is too short; the message states the
            minimum frame count required.
    """
    if count < 1:
        raise ClipSamplingError(f"count must be >= 1, got {count}")
    if isinstance(gap, int):
        if gap < 1:
            raise ClipSamplingError(f"gap must be >= 1, got {gap}")
        g_min = g_max = gap
        gap_label: int | str = gap
    else:
        g_min, g_max = gap
        if not (1 <= g_min <= g_max):
            raise ClipSamplingError(f"need 1 <= g_min <= g_max, got ({g_min}, {g_max})")
        gap_label = "random"
    needed = 1 + (count - 1) * g_max
    if total_frames < needed:
        raise ClipSamplingError(
            f"sampling {count} frames at gap {gap} requires >= {needed} frames, video has {total_frames}"
        )
    rng = rng_for(seed, "sample_clip", video_id, ordinal)
    if g_min == g_max:
        span = (count - 1) * g_min
        start = int(rng.integers(0, total_frames - span))
        indices = tuple(start + i * g_min for i in range(count))
    else:
        gaps = [int(rng.integers(g_min, g_max + 1)) for _ in range(count - 1)]
        span = sum(gaps)
        start = int(rng.integers(0, total_frames - span))
        indices = [start]
        for g in gaps:
            indices.append(indices[-1] + g)
        indices = tuple(indices)
    spec = ClipSpec(video_id=video_id, frame_indices=indices, count=count, gap=gap_label, seed=seed)
    spec.validate()
    return spec


def restrict_to_clip(records: Iterable[FrameRecord], clip: ClipSpec) -> list[FrameRecord]:
    """Frame records at the clip's indices, in clip order.

    A sampled index with no detections record yields an empty frame (zero
    detections), so trackers still advance their lost counters over it.
    Frame dims for such gap frames are copied from the video's other frames.
    """
    by_index = {r.frame_index: r for r in records if r.video_id == clip.video_id}
    if not by_index:
        raise RecordError("video_id", f"no frames for video '{clip.video_id}'")
    template = next(iter(by_index.values()))
    out = []
    for idx in clip.frame_indices:
        record = by_index.get(idx)
        if record is None:
            record = FrameRecord(
                video_id=clip.video_id,
                frame_index=idx,
                width=template.width,
                height=template.height,
                detections=(),
            )
        out.append(record)
    return out
