import json

import pytest

from videoloom.boxes import BoundingBox
from videoloom.records import ClipSpec, Detection, FrameRecord


def frame_line(video_id, frame_index, dets, width=100, height=100):
    return json.dumps(
        {
            "video_id": video_id,
            "frame_index": frame_index,
            "width": width,
            "height": height,
            "detections": dets,
        }
    )


def det(bbox, score=0.9, category="person", caption="", action=""):
    return {"bbox": bbox, "score": score, "category": category, "caption": caption, "action": action}


@pytest.fixture
def tiny_frames():
    """Three frames of one video: one steady subject, one flickering one."""
    return [
        FrameRecord(
            video_id="v0",
            frame_index=i,
            width=100,
            height=100,
            detections=(
                Detection(BoundingBox(10 + i, 10, 30 + i, 30), 0.9, "person", "red", "walking"),
            ),
        )
        for i in range(3)
    ]


@pytest.fixture
def identity_clip():
    """Clip over raw frames 0..2 (positions 1..3)."""
    return ClipSpec(video_id="v0", frame_indices=(0, 1, 2), count=3, gap=1, seed=0)
