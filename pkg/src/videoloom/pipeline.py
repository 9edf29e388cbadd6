"""End-to-end orchestration with a reproducibility manifest.

Stages run in order ingest -> track -> filter -> gen-tasks (-> tpl when an
nll file is supplied). Each stage is also exposed as a standalone function
consuming and producing the wire formats, so the CLI subcommands and
run_pipeline share code paths and produce byte-identical files. All stage
outputs are written to temporary files and renamed only after every stage
succeeded, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import PipelineError, VideoloomError
from .filtering import FilterParams, apply_filters
from .ingest import parse_detections, restrict_to_clip, sample_clip, serialize_detections, total_frames_by_video
from .records import ClipSpec, FrameRecord
from .seeding import derive_seed
from .taskgen import (
    ConversationRecord,
    QuerySamplingError,
    TaskGenConfig,
    TemplatePool,
    build_conversation,
    sample_query,
    serialize_conversations,
)
from .tpl import bucketize, pair_and_score, parse_nll, serialize_tpl
from .tracker import SubjectTrajectory, TrackerParams, associate, serialize_tracks

OUTPUT_NAMES = {
    "frames": "frames.jsonl",
    "clips": "clips.jsonl",
    "tracks": "tracks.jsonl",
    "tracks_kept": "tracks_kept.jsonl",
    "filter_report": "filter_report.jsonl",
    "conversations": "conversations.jsonl",
    "taskgen_report": "taskgen_report.jsonl",
    "tpl": "tpl.jsonl",
    "tpl_report": "tpl_report.jsonl",
    "manifest": "manifest.json",
}


def _sha256_lines(lines: Sequence[str]) -> str:
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_lines(path: str | Path, lines: Iterable[str]) -> None:
    """Atomic line-file write (temp in the same directory, then rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def clip_id_for(video_id: str, ordinal: int) -> str:
    return f"{video_id}:c{ordinal}"


def stage_ingest(
    input_paths: Sequence[str | Path],
    config: dict,
    seed: int,
) -> tuple[list[FrameRecord], list[tuple[str, ClipSpec]]]:
    """Parse + validate detections, then sample clips per video.

    Returns (frames in canonical order, [(clip_id, ClipSpec), ...] ordered
    by video then clip ordinal).
    """
    lines: list[str] = []
    for path in input_paths:
        path = Path(path)
        if not path.exists():
            raise PipelineError("ingest", f"detections file not found: {path}")
        lines.extend(path.read_text(encoding="utf-8").splitlines())
    try:
        frames = parse_detections(lines)
    except VideoloomError as exc:
        raise PipelineError("ingest", str(exc)) from exc
    if not frames:
        raise PipelineError("ingest", "no frame records in input")

    sampler = config["sampler"]
    if sampler["policy"] == "fixed":
        gap: int | tuple[int, int] = int(sampler["gap"])
    elif sampler["policy"] == "random":
        gap = (int(sampler["gap_min"]), int(sampler["gap_max"]))
    else:
        raise PipelineError("ingest", f"unknown sampler policy '{sampler['policy']}'")
    clips: list[tuple[str, ClipSpec]] = []
    totals = total_frames_by_video(frames)
    for video_id in sorted(totals):
        for ordinal in range(int(config["run"]["clips_per_video"])):
            try:
                spec = sample_clip(totals[video_id], int(sampler["count"]), gap, seed, video_id, ordinal)
            except VideoloomError as exc:
                raise PipelineError("ingest", f"video '{video_id}': {exc}") from exc
            clips.append((clip_id_for(video_id, ordinal), spec))
    return frames, clips


def stage_track(
    frames: Sequence[FrameRecord],
    clips: Sequence[tuple[str, ClipSpec]],
    config: dict,
) -> list[SubjectTrajectory]:
    """Associate each clip; trajectories come out in clip order, id order."""
    params = TrackerParams(**config["tracker"])
    tracks: list[SubjectTrajectory] = []
    for clip_id, spec in clips:
        try:
            clip_frames = restrict_to_clip(frames, spec)
            tracks.extend(associate(clip_frames, params, clip_id=clip_id))
        except VideoloomError as exc:
            raise PipelineError("track", f"clip '{clip_id}': {exc}") from exc
    return tracks


def video_dims(frames: Sequence[FrameRecord]) -> dict[str, tuple[int, int]]:
    """(width, height) per video; mixed dims within a video are rejected."""
    dims: dict[str, tuple[int, int]] = {}
    for frame in frames:
        current = dims.get(frame.video_id)
        if current is None:
            dims[frame.video_id] = (frame.width, frame.height)
        elif current != (frame.width, frame.height):
            raise PipelineError("filter", f"video '{frame.video_id}' mixes frame dims {current} and "
                                          f"({frame.width}, {frame.height})")
    return dims


def stage_filter(
    tracks: Sequence[SubjectTrajectory],
    dims: dict[str, tuple[int, int]],
    config: dict,
) -> tuple[list[SubjectTrajectory], list[dict]]:
    """Quality gates per video (dims differ per video); order preserved."""
    params = FilterParams(**config["filter"])
    kept: list[SubjectTrajectory] = []
    report: list[dict] = []
    for track in tracks:
        if track.video_id not in dims:
            raise PipelineError("filter", f"track subject {track.subject_id}: no frames for video '{track.video_id}'")
        width, height = dims[track.video_id]
        survivors, entries = apply_filters([track], width, height, params)
        kept.extend(survivors)
        for entry in entries:
            report.append({"video_id": track.video_id, "clip_id": track.clip_id, **entry})
    return kept, report


def stage_taskgen(
    kept: Sequence[SubjectTrajectory],
    clips: Sequence[tuple[str, ClipSpec]],
    dims: dict[str, tuple[int, int]],
    config: dict,
    seed: int,
) -> tuple[list[ConversationRecord], list[dict]]:
    """Sample queries and render conversations per clip."""
    section = dict(config["taskgen"])
    template_path = section.pop("templates", "") or None
    records_per_clip = int(section.pop("records_per_clip"))
    gen_config = TaskGenConfig(**section)
    templates = TemplatePool.load(template_path)
    by_clip: dict[str, list[SubjectTrajectory]] = {}
    for track in kept:
        by_clip.setdefault(track.clip_id, []).append(track)
    records: list[ConversationRecord] = []
    report: list[dict] = []
    for clip_id, spec in clips:
        width, height = dims[spec.video_id]
        tracks = by_clip.get(clip_id, [])
        for k in range(records_per_clip):
            record_seed = derive_seed(seed, "taskgen", clip_id, k)
            if not tracks:
                report.append({"clip_id": clip_id, "record": k, "reason": "no_trajectories"})
                continue
            try:
                query = sample_query(tracks, spec, gen_config, record_seed)
                record = build_conversation(
                    tracks, query, spec, width, height, templates, record_id=f"{clip_id}#q{k}"
                )
            except QuerySamplingError as exc:
                report.append({"clip_id": clip_id, "record": k, "reason": str(exc)})
                continue
            except VideoloomError as exc:
                raise PipelineError("gen-tasks", f"clip '{clip_id}' record {k}: {exc}") from exc
            records.append(record)
    return records, report


def stage_tpl(nll_path: str | Path, config: dict) -> tuple[list, list[dict]]:
    """Pair NLL records, score, and bucket."""
    path = Path(nll_path)
    if not path.exists():
        raise PipelineError("tpl", f"nll file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            records = parse_nll(fh)
        scores, report = pair_and_score(records, keyframe_policy=config["tpl"]["keyframe_policy"])
        scores = bucketize(scores, groups=int(config["tpl"]["groups"]))
    except VideoloomError as exc:
        raise PipelineError("tpl", str(exc)) from exc
    return scores, report


def run_pipeline(
    config: dict,
    input_paths: Sequence[str | Path],
    out_dir: str | Path,
    seed: int,
    nll_path: str | Path | None = None,
) -> dict:
    """Execute all stages, write outputs + manifest, return the manifest.

    Outputs land in ``out_dir`` under fixed names (see OUTPUT_NAMES). The
    manifest pins the tool version, run seed, resolved per-stage parameters,
    input digests, and per-stage output counts and digests; re-running with
    the same manifest parameters reproduces every byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    frames, clips = stage_ingest(input_paths, config, seed)
    tracks = stage_track(frames, clips, config)
    dims = video_dims(frames)
    kept, filter_report = stage_filter(tracks, dims, config)
    conversations, taskgen_report = stage_taskgen(kept, clips, dims, config, seed)
    scores: list = []
    tpl_report: list[dict] = []
    if nll_path is not None:
        scores, tpl_report = stage_tpl(nll_path, config)

    files: dict[str, list[str]] = {
        "frames": list(serialize_detections(frames)),
        "clips": [json.dumps({"clip_id": cid, **spec.to_dict()}, ensure_ascii=False) for cid, spec in clips],
        "tracks": list(serialize_tracks(tracks)),
        "tracks_kept": list(serialize_tracks(kept)),
        "filter_report": [json.dumps(e, ensure_ascii=False) for e in filter_report],
        "conversations": list(serialize_conversations(conversations)),
        "taskgen_report": [json.dumps(e, ensure_ascii=False) for e in taskgen_report],
    }
    if nll_path is not None:
        files["tpl"] = list(serialize_tpl(scores))
        files["tpl_report"] = [json.dumps(e, ensure_ascii=False) for e in tpl_report]

    removed_by_reason = {"small": 0, "short": 0, "low_conf": 0}
    for entry in filter_report:
        removed_by_reason[entry["reason"]] += 1
    buckets: dict[str, int] = {}
    for score in scores:
        buckets[score.bucket] = buckets.get(score.bucket, 0) + 1

    manifest = {
        "tool": {"name": "videoloom", "version": __version__},
        "seed": seed,
        "parameters": config,
        "inputs": {str(p): _sha256_file(p) for p in input_paths},
        "counts": {
            "frames": len(frames),
            "clips": len(clips),
            "trajectories": len(tracks),
            "kept": len(kept),
            "removed": removed_by_reason,
            "conversations": len(conversations),
            "taskgen_skips": len(taskgen_report),
            "tpl_scored": len(scores),
            "tpl_reports": len(tpl_report),
            "tpl_buckets": buckets,
        },
        "outputs": {},
    }
    if nll_path is not None:
        manifest["inputs"][str(nll_path)] = _sha256_file(nll_path)

    for key, lines in files.items():
        manifest["outputs"][OUTPUT_NAMES[key]] = {"count": len(lines), "sha256": _sha256_lines(lines)}

    for key, lines in files.items():
        write_lines(out / OUTPUT_NAMES[key], lines)
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False)
    write_lines(out / OUTPUT_NAMES["manifest"], [manifest_text])
    return manifest
