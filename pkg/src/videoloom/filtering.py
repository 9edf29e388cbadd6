"""Trajectory quality gates applied before task generation.

Three independent predicates: minimum box area (as a fraction of the image,
default 1/32), minimum trajectory length, and minimum mean confidence.
Each filter keeps or removes whole trajectories and never mutates
survivors, so composite filtering equals the intersection of the three
survivor sets regardless of order.

Boundary rule everywhere: >= keeps, < removes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import RecordError
from .tracker import SubjectTrajectory


@dataclass(frozen=True)
class FilterParams:
    """Thresholds and mode switches for the three gates.

    ``small_mode`` reads the area fraction either as a box-area fraction of
    the image area ("area") or as a linear fraction of the image sides
    ("side": small iff max(w/W, h/H) < fraction). ``small_scope`` decides
    whether one under-cutoff entry disqualifies the trajectory ("any") or
    all entries must be under the cutoff ("all").
    """

    min_area_fraction: float = 1.0 / 32.0
    min_length: int = 2
    min_mean_score: float = 0.5
    small_mode: str = "area"
    small_scope: str = "any"

    def validate(self) -> None:
        if not 0.0 < self.min_area_fraction < 1.0:
            raise RecordError("min_area_fraction", f"must lie in (0,1), got {self.min_area_fraction}")
        if self.min_length < 1:
            raise RecordError("min_length", f"must be >= 1, got {self.min_length}")
        if not 0.0 <= self.min_mean_score <= 1.0:
            raise RecordError("min_mean_score", f"must lie in [0,1], got {self.min_mean_score}")
        if self.small_mode not in ("area", "side"):
            raise RecordError("small_mode", f"unknown mode '{self.small_mode}'")
        if self.small_scope not in ("any", "all"):
            raise RecordError("small_scope", f"unknown scope '{self.small_scope}'")


def _entry_is_small(entry, width: float, height: float, fraction: float, mode: str) -> bool:
    if mode == "area":
        return entry.box.area < fraction * width * height
    return max(entry.box.width / width, entry.box.height / height) < fraction


def smallest_measure(track: SubjectTrajectory, width: float, height: float, mode: str = "area") -> float:
    """The track's most damning size measurement (reported on removal)."""
    if mode == "area":
        return min(e.box.area for e in track.entries)
    return min(max(e.box.width / width, e.box.height / height) for e in track.entries)


def filter_small(
    tracks: Sequence[SubjectTrajectory],
    width: float,
    height: float,
    min_area_fraction: float = 1.0 / 32.0,
    mode: str = "area",
    scope: str = "any",
) -> list[SubjectTrajectory]:
    """Drop trajectories containing too-small boxes; survivors unmodified."""
    if width <= 0 or height <= 0:
        raise RecordError("width", "image dims must be positive")
    predicate = {"any": any, "all": all}[scope]
    return [
        t
        for t in tracks
        if not predicate(_entry_is_small(e, width, height, min_area_fraction, mode) for e in t.entries)
    ]


def filter_short(tracks: Sequence[SubjectTrajectory], min_length: int) -> list[SubjectTrajectory]:
    """Keep trajectories with at least ``min_length`` entries."""
    if min_length < 1:
        raise RecordError("min_length", f"must be >= 1, got {min_length}")
    return [t for t in tracks if t.length >= min_length]


def filter_low_conf(tracks: Sequence[SubjectTrajectory], min_mean_score: float) -> list[SubjectTrajectory]:
    """Keep trajectories whose arithmetic mean score is >= the threshold."""
    if not 0.0 <= min_mean_score <= 1.0:
        raise RecordError("min_mean_score", f"must lie in [0,1], got {min_mean_score}")
    return [t for t in tracks if t.mean_score >= min_mean_score]


def apply_filters(
    tracks: Sequence[SubjectTrajectory],
    width: float,
    height: float,
    params: FilterParams,
) -> tuple[list[SubjectTrajectory], list[dict]]:
    """All three gates at once.

    Returns (survivors in input order, report entries). Each removal is
    reported once with the first matching reason in the fixed order
    small -> short -> low_conf:

        {"subject_id": int, "reason": "small|short|low_conf", "value": float}
    """
    params.validate()
    kept: list[SubjectTrajectory] = []
    report: list[dict] = []
    for track in tracks:
        small = _is_removed_small(track, width, height, params)
        short = track.length < params.min_length
        low = track.mean_score < params.min_mean_score
        if small:
            report.append(
                {
                    "subject_id": track.subject_id,
                    "reason": "small",
                    "value": smallest_measure(track, width, height, params.small_mode),
                }
            )
        elif short:
            report.append({"subject_id": track.subject_id, "reason": "short", "value": float(track.length)})
        elif low:
            report.append({"subject_id": track.subject_id, "reason": "low_conf", "value": track.mean_score})
        else:
            kept.append(track)
    return kept, report


def _is_removed_small(track: SubjectTrajectory, width: float, height: float, params: FilterParams) -> bool:
    predicate = {"any": any, "all": all}[params.small_scope]
    return predicate(
        _entry_is_small(e, width, height, params.min_area_fraction, params.small_mode) for e in track.entries
    )


def serialize_report(report: Iterable[dict]) -> Iterator[str]:
    for entry in report:
        yield json.dumps(entry, ensure_ascii=False)
