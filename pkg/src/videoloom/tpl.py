"""Temporal perplexity: how much the full clip context helps a caption.

The score of one sample is the difference between its mean per-token
negative log-likelihood (natural log) under a single-keyframe context and
under the full-clip context:

    tpl = mean_nll(single) - mean_nll(full)

Positive values mean the full clip genuinely informs the text; values near
or below zero mark samples a model can satisfy from one frame. Scores are
relative to the scoring model, so records stamp a scorer_id and sets with
mixed scorer ids are rejected. NLL measurements arrive via the nll file —
this module never runs a model itself.

Wire formats (one JSON object per line):

    nll:  {"sample_id": str, "context": "full" | "single:<p>",
           "mean_nll": float, "token_count": int, "scorer_id": str}
    tpl:  {"sample_id": str, "tpl": float, "bucket": "high|medium|low",
           "scorer_id": str}
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from typing import IO, Iterable, Iterator, Mapping, Sequence

from .errors import VideoloomError
from .seeding import rng_for

_CONTEXT_RE = re.compile(r"^(full|single:(0|[1-9][0-9]*))$")
_BUCKETS = ("high", "medium", "low")


class NllFormatError(VideoloomError):
    """An nll-file line is malformed; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class PairingError(VideoloomError):
    """Duplicate or inconsistent NLL records for one sample."""


class BucketError(VideoloomError):
    """Bucketing was asked for more groups than there are scores."""


class StatsError(VideoloomError):
    """A scored sample has no subset tag."""


@dataclass(frozen=True)
class NllRecord:
    """One mean-NLL measurement of a sample under one context mode.

    ``single_frame`` is the 1-based keyframe position for single contexts
    and None for the full context.
    """

    sample_id: str
    context: str  # "full" or "single"
    mean_nll: float
    token_count: int
    scorer_id: str
    single_frame: int | None = None

    def validate(self) -> None:
        if not self.sample_id:
            raise VideoloomError("sample_id must be non-empty")
        if self.context not in ("full", "single"):
            raise VideoloomError(f"context must be 'full' or 'single', got {self.context!r}")
        if self.context == "single" and (self.single_frame is None or self.single_frame < 1):
            raise VideoloomError("single contexts need a 1-based frame position")
        if self.context == "full" and self.single_frame is not None:
            raise VideoloomError("full contexts carry no frame position")
        if not (isinstance(self.mean_nll, (int, float)) and math.isfinite(self.mean_nll) and self.mean_nll >= 0):
            raise VideoloomError(f"mean_nll must be a finite non-negative number, got {self.mean_nll!r}")
        if self.token_count < 1:
            raise VideoloomError(f"token_count must be >= 1, got {self.token_count}")
        if not self.scorer_id:
            raise VideoloomError("scorer_id must be non-empty")

    @property
    def context_label(self) -> str:
        return "full" if self.context == "full" else f"single:{self.single_frame}"

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "context": self.context_label,
            "mean_nll": self.mean_nll,
            "token_count": self.token_count,
            "scorer_id": self.scorer_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NllRecord":
        label = str(data["context"])
        if not _CONTEXT_RE.match(label):
            raise VideoloomError(f"context must be 'full' or 'single:<p>', got {label!r}")
        if label == "full":
            context, frame = "full", None
        else:
            context, frame = "single", int(label.split(":", 1)[1])
        record = cls(
            sample_id=str(data["sample_id"]),
            context=context,
            mean_nll=float(data["mean_nll"]),
            token_count=int(data["token_count"]),
            scorer_id=str(data["scorer_id"]),
            single_frame=frame,
        )
        record.validate()
        return record


@dataclass(frozen=True)
class TplScore:
    sample_id: str
    tpl: float
    scorer_id: str
    bucket: str | None = None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "tpl": self.tpl,
            "bucket": self.bucket,
            "scorer_id": self.scorer_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TplScore":
        return cls(
            sample_id=str(data["sample_id"]),
            tpl=float(data["tpl"]),
            scorer_id=str(data["scorer_id"]),
            bucket=data.get("bucket"),
        )


@dataclass(frozen=True)
class OracleScorerConfig:
    """Synthetic NLL source: more frame-tied information, lower full-context NLL.

    mean_nll = base_nll - alpha * coverage * density, with coverage 1 for
    the full context and 1/T for a single keyframe, so the resulting score
    alpha * (1 - 1/T) * density grows with the sample's information density
    and with clip length.
    """

    base_nll: float
    alpha: float
    density: float
    clip_len: int

    def validate(self) -> None:
        if self.base_nll <= 0:
            raise VideoloomError("base_nll must be positive")
        if self.alpha <= 0:
            raise VideoloomError("alpha must be positive")
        if self.density < 0:
            raise VideoloomError("density must be >= 0")
        if self.clip_len < 1:
            raise VideoloomError("clip_len must be >= 1")
        if self.base_nll - self.alpha * self.density < 0:
            raise VideoloomError("base_nll - alpha * density must stay non-negative")


def tpl_score(nll_full: float, nll_single: float) -> float:
    """Score from a paired measurement: single-context NLL minus full-context NLL."""
    return nll_single - nll_full


def oracle_nll(context: str, config: OracleScorerConfig) -> float:
    """Mean NLL of the synthetic oracle under 'full' or 'single' context."""
    config.validate()
    if context == "full":
        coverage = 1.0
    elif context == "single":
        coverage = 1.0 / config.clip_len
    else:
        raise VideoloomError(f"context must be 'full' or 'single', got {context!r}")
    return config.base_nll - config.alpha * coverage * config.density


def oracle_records(sample_id: str, config: OracleScorerConfig, scorer_id: str = "oracle") -> list[NllRecord]:
    """The full/single record pair the oracle produces for one sample."""
    return [
        NllRecord(sample_id, "full", oracle_nll("full", config), 1, scorer_id),
        NllRecord(sample_id, "single", oracle_nll("single", config), 1, scorer_id, config.clip_len),
    ]


def pair_and_score(
    records: Sequence[NllRecord],
    keyframe_policy: str = "last",
    seed: int = 0,
) -> tuple[list[TplScore], list[dict]]:
    """Pair full/single records per sample and score the complete pairs.

    With several single-context records for one sample, ``keyframe_policy``
    picks the one to use: "last" takes the largest frame position, "random"
    a seeded-uniform choice. Unused singles and samples missing a mode are
    reported, not scored.

    Returns (scores sorted by sample_id, report entries).

    Raises:
        PairingError: duplicate (sample_id, context) records, an unknown
            policy, or mixed scorer ids.
    """
    if keyframe_policy not in ("last", "random"):
        raise PairingError(f"unknown keyframe policy '{keyframe_policy}'")
    scorer_ids = {r.scorer_id for r in records}
    if len(scorer_ids) > 1:
        raise PairingError(f"records mix scorer ids: {sorted(scorer_ids)}")
    fulls: dict[str, NllRecord] = {}
    singles: dict[str, dict[int, NllRecord]] = {}
    for record in records:
        record.validate()
        if record.context == "full":
            if record.sample_id in fulls:
                raise PairingError(f"duplicate full record for sample '{record.sample_id}'")
            fulls[record.sample_id] = record
        else:
            per = singles.setdefault(record.sample_id, {})
            if record.single_frame in per:
                raise PairingError(
                    f"duplicate single:{record.single_frame} record for sample '{record.sample_id}'"
                )
            per[record.single_frame] = record

    scores: list[TplScore] = []
    report: list[dict] = []
    for sample_id in sorted(set(fulls) | set(singles)):
        full = fulls.get(sample_id)
        per = singles.get(sample_id, {})
        if full is None:
            report.append({"sample_id": sample_id, "reason": "missing_full"})
            continue
        if not per:
            report.append({"sample_id": sample_id, "reason": "missing_single"})
            continue
        positions = sorted(per)
        if keyframe_policy == "last":
            chosen = positions[-1]
        else:
            rng = rng_for(seed, "keyframe", sample_id)
            chosen = positions[int(rng.integers(len(positions)))]
        for p in positions:
            if p != chosen:
                report.append({"sample_id": sample_id, "reason": "unused_single", "context": f"single:{p}"})
        scores.append(
            TplScore(
                sample_id=sample_id,
                tpl=tpl_score(full.mean_nll, per[chosen].mean_nll),
                scorer_id=full.scorer_id,
            )
        )
    return scores, report


def bucketize(scores: Sequence[TplScore], groups: int = 3) -> list[TplScore]:
    """Sort by tpl descending and split into contiguous near-equal groups.

    Earlier groups take the remainder (10 scores -> 4/3/3); ties at a
    boundary are broken by ascending sample_id, so bucketing is stable
    across runs. Labels: high/medium/low for 3 groups, high/low for 2.

    Returns new score objects in the sorted order with buckets assigned.
    """
    if groups not in (2, 3):
        raise BucketError(f"groups must be 2 or 3, got {groups}")
    if len(scores) < groups:
        raise BucketError(f"cannot split {len(scores)} scores into {groups} groups")
    labels = _BUCKETS if groups == 3 else ("high", "low")
    ordered = sorted(scores, key=lambda s: (-s.tpl, s.sample_id))
    n = len(ordered)
    sizes = [n // groups + (1 if i < n % groups else 0) for i in range(groups)]
    out: list[TplScore] = []
    cursor = 0
    for label, size in zip(labels, sizes):
        for score in ordered[cursor : cursor + size]:
            out.append(replace(score, bucket=label))
        cursor += size
    return out


def subset_stats(scores: Sequence[TplScore], tags: Mapping[str, str]) -> list[dict]:
    """Per-subset count/mean/stdev/min/max, sorted by mean descending.

    stdev is the population standard deviation so one-member subsets are
    well-defined. Every scored sample must be tagged.
    """
    groups: dict[str, list[float]] = {}
    for score in scores:
        subset = tags.get(score.sample_id)
        if subset is None:
            raise StatsError(f"sample '{score.sample_id}' has no subset tag")
        groups.setdefault(subset, []).append(score.tpl)
    rows = []
    for subset, values in groups.items():
        mean = sum(values) / len(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        rows.append(
            {
                "subset": subset,
                "count": len(values),
                "mean": mean,
                "stdev": math.sqrt(var),
                "min": min(values),
                "max": max(values),
            }
        )
    rows.sort(key=lambda r: (-r["mean"], r["subset"]))
    return rows


def parse_nll(stream: Iterable[str] | IO[str]) -> list[NllRecord]:
    out = []
    seen: set[tuple[str, str]] = set()
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = NllRecord.from_dict(json.loads(line))
        except json.JSONDecodeError as exc:
            raise NllFormatError(line_no, f"invalid JSON: {exc.msg}") from exc
        except (KeyError, ValueError, VideoloomError) as exc:
            raise NllFormatError(line_no, str(exc)) from exc
        key = (record.sample_id, record.context_label)
        if key in seen:
            raise NllFormatError(line_no, f"duplicate record for {key}")
        seen.add(key)
        out.append(record)
    return out


def serialize_nll(records: Iterable[NllRecord]) -> Iterator[str]:
    for record in records:
        yield json.dumps(record.to_dict(), ensure_ascii=False)


def parse_tpl(stream: Iterable[str] | IO[str]) -> list[TplScore]:
    out = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(TplScore.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise NllFormatError(line_no, f"invalid tpl record: {exc}") from exc
    return out


def serialize_tpl(scores: Iterable[TplScore]) -> Iterator[str]:
    for score in scores:
        yield json.dumps(score.to_dict(), ensure_ascii=False)
