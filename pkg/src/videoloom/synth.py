"""Synthetic annotated scenes with known ground truth.

Scenes drive the tracker and pipeline tests: every emitted detection
belongs to exactly one ground-truth trajectory, so association output can
be checked for identity switches without any manual labeling. Objects move
under per-object constant velocity plus optional uniform jitter; the
configuration is rejected up front if any object could leave the image.
"""

from __future__ import annotations

from dataclasses import dataclass

from .boxes import BoundingBox
from .errors import VideoloomError
from .records import Detection, FrameRecord
from .seeding import rng_for
from .tracker import SubjectTrajectory, TrackEntry, TrackState

_CATEGORIES = ("person", "car", "dog", "bicycle", "bird", "cat")
_CAPTIONS = ("red", "blue", "green", "yellow", "striped", "spotted")
_ACTIONS = ("walking", "running", "turning", "waiting", "jumping", "rolling")


class SceneConfigError(VideoloomError):
    """The scene configuration would generate invalid frames."""


@dataclass(frozen=True)
class ObjectMotion:
    """Start box and per-frame velocity of one synthetic object."""

    category: str
    caption: str
    action: str
    box: BoundingBox
    vx: float = 0.0
    vy: float = 0.0


@dataclass(frozen=True)
class SyntheticSceneConfig:
    video_id: str
    num_frames: int
    width: int = 640
    height: int = 480
    objects: tuple[ObjectMotion, ...] = ()
    jitter: float = 0.0
    score_range: tuple[float, float] = (0.8, 1.0)
    seed: int = 0

    def validate(self) -> None:
        if self.num_frames < 1:
            raise SceneConfigError("num_frames must be >= 1")
        if self.width < 1 or self.height < 1:
            raise SceneConfigError("image dims must be positive")
        if self.jitter < 0:
            raise SceneConfigError("jitter must be >= 0")
        lo, hi = self.score_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise SceneConfigError(f"score_range must satisfy 0 <= lo <= hi <= 1, got {self.score_range}")
        if not self.objects:
            raise SceneConfigError("scene needs at least one object")
        last = self.num_frames - 1
        for i, obj in enumerate(self.objects):
            for t in (0, last):
                x1 = obj.box.x1 + obj.vx * t - self.jitter
                x2 = obj.box.x2 + obj.vx * t + self.jitter
                y1 = obj.box.y1 + obj.vy * t - self.jitter
                y2 = obj.box.y2 + obj.vy * t + self.jitter
                if x1 < 0 or y1 < 0 or x2 > self.width or y2 > self.height:
                    raise SceneConfigError(
                        f"object {i} leaves the {self.width}x{self.height} image at frame {t}"
                    )


def lane_config(
    video_id: str,
    num_objects: int,
    num_frames: int,
    width: int = 640,
    height: int = 480,
    jitter: float = 0.0,
    score_range: tuple[float, float] = (0.8, 1.0),
    seed: int = 0,
    box_size: float = 40.0,
) -> SyntheticSceneConfig:
    """Scene with objects in horizontal lanes, pairwise disjoint in every frame.

    Lanes are separated by more than twice the jitter amplitude and motion
    is horizontal only, so the disjointness guarantee is by construction.
    """
    if num_objects < 1:
        raise SceneConfigError("num_objects must be >= 1")
    lane_h = height / num_objects
    if box_size + 2 * jitter + 2.0 > lane_h:
        raise SceneConfigError(
            f"{num_objects} lanes of {lane_h:.1f}px cannot hold {box_size}px boxes with jitter {jitter}"
        )
    rng = rng_for(seed, "lane_config", video_id)
    objects = []
    for i in range(num_objects):
        y1 = i * lane_h + jitter + 1.0
        vx_room = (width - box_size - 2 * jitter - 2.0) / max(1, num_frames - 1)
        vx = float(rng.uniform(-min(6.0, vx_room), min(6.0, vx_room)))
        travel = vx * (num_frames - 1)
        x_lo = jitter + 1.0 + max(0.0, -travel)
        x_hi = width - box_size - jitter - 1.0 - max(0.0, travel)
        x1 = float(rng.uniform(x_lo, x_hi)) if x_hi > x_lo else x_lo
        objects.append(
            ObjectMotion(
                category=_CATEGORIES[i % len(_CATEGORIES)],
                caption=_CAPTIONS[int(rng.integers(len(_CAPTIONS)))],
                action=_ACTIONS[int(rng.integers(len(_ACTIONS)))],
                box=BoundingBox(x1, y1, x1 + box_size, y1 + box_size),
                vx=vx,
                vy=0.0,
            )
        )
    return SyntheticSceneConfig(
        video_id=video_id,
        num_frames=num_frames,
        width=width,
        height=height,
        objects=tuple(objects),
        jitter=jitter,
        score_range=score_range,
        seed=seed,
    )


def scene_configs_from_toml(data: dict, seed: int) -> list[SyntheticSceneConfig]:
    """Build lane-scene configs from a parsed scenes TOML.

    Layout: a [defaults] table plus one [[scene]] entry per video, each
    able to override num_objects, num_frames, dims, jitter, score range,
    and box_size. Per-scene draws are keyed by (seed, video_id).
    """
    defaults = data.get("defaults", {})
    scenes = data.get("scene", [])
    if not scenes:
        raise SceneConfigError("scenes file defines no [[scene]] entries")
    configs = []
    seen: set[str] = set()
    for entry in scenes:
        merged = {**defaults, **entry}
        try:
            video_id = str(merged.pop("video_id"))
        except KeyError as exc:
            raise SceneConfigError("every [[scene]] needs a video_id") from exc
        if video_id in seen:
            raise SceneConfigError(f"duplicate scene video_id '{video_id}'")
        seen.add(video_id)
        score_range = (float(merged.pop("score_min", 0.8)), float(merged.pop("score_max", 1.0)))
        known = {"num_objects", "num_frames", "width", "height", "jitter", "box_size"}
        unknown = set(merged) - known
        if unknown:
            raise SceneConfigError(f"scene '{video_id}' has unknown keys: {sorted(unknown)}")
        configs.append(
            lane_config(
                video_id=video_id,
                num_objects=int(merged["num_objects"]),
                num_frames=int(merged["num_frames"]),
                width=int(merged.get("width", 640)),
                height=int(merged.get("height", 480)),
                jitter=float(merged.get("jitter", 0.0)),
                score_range=score_range,
                seed=seed,
                box_size=float(merged.get("box_size", 40.0)),
            )
        )
    return configs


def synth_scene(config: SyntheticSceneConfig) -> tuple[list[FrameRecord], list[SubjectTrajectory]]:
    """Generate frame records plus the ground-truth trajectory per object.

    Pure given the config: re-running reproduces boxes bit-exactly. Ground
    truth partitions the detections — entry j of frame t belongs to ground
    truth j, and emitted detection order follows object order.
    """
    config.validate()
    rng = rng_for(config.seed, "synth_scene", config.video_id)
    lo, hi = config.score_range
    frames: list[FrameRecord] = []
    truth = [
        SubjectTrajectory(
            subject_id=i + 1,
            category=obj.category,
            entries=[],
            state=TrackState.FINISHED,
            video_id=config.video_id,
            clip_id="gt",
        )
        for i, obj in enumerate(config.objects)
    ]
    for t in range(config.num_frames):
        dets = []
        for i, obj in enumerate(config.objects):
            dx = obj.vx * t + (float(rng.uniform(-config.jitter, config.jitter)) if config.jitter else 0.0)
            dy = obj.vy * t + (float(rng.uniform(-config.jitter, config.jitter)) if config.jitter else 0.0)
            box = obj.box.translate(dx, dy)
            score = float(rng.uniform(lo, hi))
            dets.append(Detection(box=box, score=score, category=obj.category, caption=obj.caption, action=obj.action))
            truth[i].entries.append(TrackEntry(t, box, score, obj.caption, obj.action))
        record = FrameRecord(
            video_id=config.video_id,
            frame_index=t,
            width=config.width,
            height=config.height,
            detections=tuple(dets),
        )
        record.validate()
        frames.append(record)
    return frames, truth
