"""Query sampling, conversation rendering, and the answer grammar.

A conversation pairs a question built from sampled query attributes (one
or more subjects, one or more query frames, one attribute kind, and a
query direction) with an answer that always carries the queried subjects'
full trajectories in a strict, machine-checkable grammar:

    answer   := [preamble "\\n"] body
    body     := block (", " block)*
    block    := category "<id" N ">" frame (";" frame)* "</id" N ">"
    frame    := "Frame" P ":" "<box>[" X1 "," Y1 "," X2 "," Y2 "]</box>"

Categories match [A-Za-z0-9_ -]+. Subject ids ascend across blocks and
frame positions ascend within a block. P is the 1-based clip-relative
position; box coordinates are normalized to the integer range 0-1000
(round half up), x by frame width, y by frame height, which keeps the
payload resolution-independent and exactly invertible. The optional
preamble is one line of natural-language answer text and is skipped by the
parser. Every clip position at which a queried subject exists appears in
its block — frames are never elided.
"""

from __future__ import annotations

import json
import math
import re
import string
import sys
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Sequence

from .boxes import BoundingBox
from .errors import RecordError, VideoloomError
from .records import ClipSpec
from .seeding import rng_for
from .tracker import SubjectTrajectory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("location", "appearance", "action")
DIRECTIONS = ("spatial_to_temporal", "temporal_to_spatial")

_CATEGORY_CHARS = frozenset(string.ascii_letters + string.digits + "_ -")
_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


class AnswerParseError(VideoloomError):
    """The answer string violates the grammar; offset is 0-based characters."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class TemplateError(VideoloomError):
    """A question/preamble template referenced an unfillable placeholder."""


class QuerySamplingError(VideoloomError):
    """No query can be drawn from the given tracks."""


@dataclass(frozen=True)
class QuerySpec:
    """The sampled query: who is asked about, where, and with which cue.

    ``query_frames`` holds 1-based clip-relative positions (the same
    numbers the Frame labels use); raw frame indices live in the
    conversation record's ``clip_frames`` metadata.
    """

    clip_id: str
    subject_ids: tuple[int, ...]
    query_frames: tuple[int, ...]
    attribute_kinds: tuple[str, ...]
    direction: str
    seed: int

    def validate(self) -> None:
        if not self.subject_ids:
            raise RecordError("subject_ids", "query needs at least one subject")
        if list(self.subject_ids) != sorted(set(self.subject_ids)):
            raise RecordError("subject_ids", "subject_ids must be ascending and unique")
        if not self.query_frames:
            raise RecordError("query_frames", "query needs at least one frame")
        if list(self.query_frames) != sorted(set(self.query_frames)):
            raise RecordError("query_frames", "query_frames must be ascending and unique")
        if any(p < 1 for p in self.query_frames):
            raise RecordError("query_frames", "frame positions are 1-based")
        if not self.attribute_kinds:
            raise RecordError("attribute_kinds", "query needs at least one attribute kind")
        for kind in self.attribute_kinds:
            if kind not in KINDS:
                raise RecordError("attribute_kinds", f"unknown kind '{kind}'")
        if self.direction not in DIRECTIONS:
            raise RecordError("direction", f"unknown direction '{self.direction}'")

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "subject_ids": list(self.subject_ids),
            "query_frames": list(self.query_frames),
            "attribute_kinds": list(self.attribute_kinds),
            "direction": self.direction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuerySpec":
        spec = cls(
            clip_id=str(data["clip_id"]),
            subject_ids=tuple(data["subject_ids"]),
            query_frames=tuple(data["query_frames"]),
            attribute_kinds=tuple(data["attribute_kinds"]),
            direction=str(data["direction"]),
            seed=int(data["seed"]),
        )
        spec.validate()
        return spec


@dataclass(frozen=True)
class ConversationRecord:
    id: str
    video_id: str
    clip_frames: tuple[int, ...]
    system: str
    question: str
    answer: str
    query: QuerySpec
    seed: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "video_id": self.video_id,
            "clip_frames": list(self.clip_frames),
            "system": self.system,
            "question": self.question,
            "answer": self.answer,
            "query": self.query.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConversationRecord":
        return cls(
            id=str(data["id"]),
            video_id=str(data["video_id"]),
            clip_frames=tuple(data["clip_frames"]),
            system=str(data["system"]),
            question=str(data["question"]),
            answer=str(data["answer"]),
            query=QuerySpec.from_dict(data["query"]),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class TaskGenConfig:
    max_subjects: int = 2
    max_query_frames: int = 2
    kind_weights: Mapping[str, float] = field(
        default_factory=lambda: {"location": 2.0, "appearance": 1.0, "action": 1.0}
    )

    def validate(self) -> None:
        if self.max_subjects < 1:
            raise RecordError("max_subjects", "must be >= 1")
        if self.max_query_frames < 1:
            raise RecordError("max_query_frames", "must be >= 1")
        for kind, w in self.kind_weights.items():
            if kind not in KINDS:
                raise RecordError("kind_weights", f"unknown kind '{kind}'")
            if w < 0:
                raise RecordError("kind_weights", f"weight for '{kind}' must be >= 0")


@dataclass(frozen=True)
class TemplatePool:
    """Question/preamble sentence pools, editable as a TOML file.

    Placeholders: {category}, {frame}, {box}, {caption}, {action} in
    question templates; {category}, {caption}, {action} in preambles;
    {num_frames} in the system prompt.
    """

    system: str
    question: Mapping[str, Mapping[str, tuple[str, ...]]]
    preamble: Mapping[str, tuple[str, ...]]

    @classmethod
    def load(cls, path: str | None = None) -> "TemplatePool":
        if path is None:
            from importlib import resources

            raw = resources.files("videoloom.data").joinpath("templates.toml").read_bytes()
        else:
            with open(path, "rb") as fh:
                raw = fh.read()
        data = tomllib.loads(raw.decode("utf-8"))
        question = {
            direction: {kind: tuple(pool) for kind, pool in kinds.items()}
            for direction, kinds in data["question"].items()
        }
        preamble = {kind: tuple(pool) for kind, pool in data.get("preamble", {}).items()}
        pool = cls(system=data["system"]["prompt"], question=question, preamble=preamble)
        pool.validate()
        return pool

    def validate(self) -> None:
        for direction in DIRECTIONS:
            if direction not in self.question:
                raise RecordError("question", f"missing question templates for direction '{direction}'")
            for kind in KINDS:
                if not self.question[direction].get(kind):
                    raise RecordError("question", f"no templates for ({direction}, {kind})")
        for kind in ("appearance", "action"):
            if not self.preamble.get(kind):
                raise RecordError("preamble", f"no preamble templates for '{kind}'")


def serialize_box(box: BoundingBox, width: float, height: float) -> str:
    """Box payload "[x1,y1,x2,y2]" on the 0-1000 grid, round half up."""

    def norm(v: float, scale: float) -> int:
        return int(math.floor(v / scale * 1000.0 + 0.5))

    return f"[{norm(box.x1, width)},{norm(box.y1, height)},{norm(box.x2, width)},{norm(box.y2, height)}]"


def _positions(track: SubjectTrajectory, clip: ClipSpec) -> list[int]:
    return [clip.position_of(e.frame_index) for e in track.entries]


def _entry_at_position(track: SubjectTrajectory, clip: ClipSpec, position: int):
    frame_index = clip.frame_indices[position - 1]
    for entry in track.entries:
        if entry.frame_index == frame_index:
            return entry
    raise RecordError("query_frames", f"subject {track.subject_id} has no entry at clip position {position}")


def sample_query(
    tracks: Sequence[SubjectTrajectory],
    clip: ClipSpec,
    config: TaskGenConfig,
    seed: int,
) -> QuerySpec:
    """Draw a query against the surviving trajectories of one clip.

    Subjects are drawn without replacement; if no frame covers all of
    them, the subject count is reduced and the draw repeated (a single
    subject always succeeds). Query frames are drawn uniformly without
    replacement from the positions every chosen subject covers. The kind
    is weighted-drawn from kinds whose text is present at every chosen
    (subject, frame) pair; location is always available.
    """
    config.validate()
    if not tracks:
        raise QuerySamplingError("no trajectories to sample a query from")
    rng = rng_for(seed, "sample_query")
    ids = sorted(t.subject_id for t in tracks)
    by_id = {t.subject_id: t for t in tracks}

    n = int(rng.integers(1, min(config.max_subjects, len(ids)) + 1))
    while True:
        chosen = sorted(int(s) for s in rng.choice(ids, size=n, replace=False))
        common = set(_positions(by_id[chosen[0]], clip))
        for sid in chosen[1:]:
            common &= set(_positions(by_id[sid], clip))
        if common:
            break
        n -= 1

    common_sorted = sorted(common)
    m = int(rng.integers(1, min(config.max_query_frames, len(common_sorted)) + 1))
    frames = sorted(int(p) for p in rng.choice(common_sorted, size=m, replace=False))

    available = ["location"]
    for kind, attr in (("appearance", "caption"), ("action", "action")):
        if all(
            getattr(_entry_at_position(by_id[sid], clip, p), attr) for sid in chosen for p in frames
        ):
            available.append(kind)
    weights = [max(0.0, float(config.kind_weights.get(k, 0.0))) for k in available]
    if sum(weights) <= 0.0:
        weights = [1.0] * len(available)
    prob = [w / sum(weights) for w in weights]
    kind = str(rng.choice(available, p=prob))

    direction = str(rng.choice(DIRECTIONS))
    query = QuerySpec(
        clip_id=tracks[0].clip_id,
        subject_ids=tuple(chosen),
        query_frames=tuple(frames),
        attribute_kinds=(kind,),
        direction=direction,
        seed=seed,
    )
    query.validate()
    return query


def _check_category(category: str) -> None:
    if not category or any(ch not in _CATEGORY_CHARS for ch in category):
        raise RecordError("category", f"category {category!r} is not renderable (allowed: [A-Za-z0-9_ -])")


def validate_query(tracks: Sequence[SubjectTrajectory], query: QuerySpec, clip: ClipSpec) -> None:
    """Check that every queried subject exists and covers every query frame."""
    by_id = {t.subject_id: t for t in tracks}
    for sid in query.subject_ids:
        if sid not in by_id:
            raise RecordError("subject_ids", f"queried subject {sid} is missing from the tracks")
        positions = set(_positions(by_id[sid], clip))
        for p in query.query_frames:
            if p not in positions:
                raise RecordError("query_frames", f"subject {sid} has no entry at clip position {p}")


def render_answer(
    tracks: Sequence[SubjectTrajectory],
    query: QuerySpec,
    clip: ClipSpec,
    width: float,
    height: float,
    templates: TemplatePool | None = None,
) -> str:
    """Render the queried subjects' full trajectories in the answer grammar.

    Subjects appear in ascending subject_id; each block lists every clip
    position the subject covers, ascending. When the query kind includes
    appearance or action, a one-line natural-language preamble precedes the
    blocks, separated by a newline.
    """
    query.validate()
    validate_query(tracks, query, clip)
    by_id = {t.subject_id: t for t in tracks}
    blocks = []
    for sid in query.subject_ids:
        track = by_id[sid]
        _check_category(track.category)
        parts = [
            f"Frame{clip.position_of(e.frame_index)}:<box>{serialize_box(e.box, width, height)}</box>"
            for e in track.entries
        ]
        blocks.append(f"{track.category}<id{sid}>{';'.join(parts)}</id{sid}>")
    body = ", ".join(blocks)

    preamble_kinds = [k for k in ("appearance", "action") if k in query.attribute_kinds]
    if not preamble_kinds:
        return body
    templates = templates or TemplatePool.load()
    rng = rng_for(query.seed, "preamble")
    sentences = []
    for sid in query.subject_ids:
        track = by_id[sid]
        entry = _entry_at_position(track, clip, query.query_frames[0])
        for kind in preamble_kinds:
            pool = templates.preamble[kind]
            template = pool[int(rng.integers(len(pool)))]
            sentences.append(
                _fill(template, {"category": track.category, "caption": entry.caption, "action": entry.action})
            )
    return " ".join(sentences) + "\n" + body


def _fill(template: str, values: Mapping[str, object]) -> str:
    def sub(match: re.Match) -> str:
        name = match.group(1)
        value = values.get(name)
        if value is None or value == "":
            raise TemplateError(f"placeholder '{{{name}}}' cannot be filled")
        return str(value)

    return _PLACEHOLDER_RE.sub(sub, template)


def build_conversation(
    tracks: Sequence[SubjectTrajectory],
    query: QuerySpec,
    clip: ClipSpec,
    width: float,
    height: float,
    templates: TemplatePool | None = None,
    record_id: str | None = None,
) -> ConversationRecord:
    """Question + answer for a query: a pure function of its arguments.

    The question carries one clause per (subject, query frame, kind)
    triple, instantiated from the template pool with draws keyed by the
    query seed. Spatial-to-temporal clauses reveal the attribute value at
    the query frame; temporal-to-spatial clauses reveal only the frame
    position and category.
    """
    query.validate()
    validate_query(tracks, query, clip)
    templates = templates or TemplatePool.load()
    by_id = {t.subject_id: t for t in tracks}
    rng = rng_for(query.seed, "question")
    clauses = []
    for sid in query.subject_ids:
        track = by_id[sid]
        for p in query.query_frames:
            entry = _entry_at_position(track, clip, p)
            for kind in query.attribute_kinds:
                pool = templates.question[query.direction][kind]
                template = pool[int(rng.integers(len(pool)))]
                clauses.append(
                    _fill(
                        template,
                        {
                            "category": track.category,
                            "frame": p,
                            "box": serialize_box(entry.box, width, height),
                            "caption": entry.caption,
                            "action": entry.action,
                        },
                    )
                )
    question = " ".join(clauses)
    answer = render_answer(tracks, query, clip, width, height, templates)
    system = _fill(templates.system, {"num_frames": clip.count})
    video_id = tracks[0].video_id if tracks else ""
    rid = record_id if record_id is not None else f"{query.clip_id}#{query.seed:x}"
    return ConversationRecord(
        id=rid,
        video_id=video_id,
        clip_frames=tuple(clip.frame_indices),
        system=system,
        question=question,
        answer=answer,
        query=query,
        seed=query.seed,
    )


@dataclass(frozen=True)
class ParsedSubject:
    category: str
    frames: Mapping[int, tuple[int, int, int, int]]


class _Scanner:
    __slots__ = ("text", "pos")

    def __init__(self, text: str, pos: int = 0):
        self.text = text
        self.pos = pos

    def fail(self, message: str) -> None:
        raise AnswerParseError(self.pos, message)

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self, literal: str) -> bool:
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str) -> None:
        if not self.peek(literal):
            self.fail(f"expected {literal!r}")
        self.pos += len(literal)

    def uint(self, what: str) -> int:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        token = self.text[start : self.pos]
        if not token:
            self.fail(f"expected {what}")
        if len(token) > 1 and token[0] == "0":
            self.pos = start
            self.fail(f"{what} has a leading zero")
        return int(token)


def parse_answer(answer: str) -> dict[int, ParsedSubject]:
    """Strict inverse of render_answer on its image.

    Returns {subject_id: ParsedSubject(category, {position: (x1,y1,x2,y2)})}
    with box coordinates exactly as serialized (0-1000 integers). The
    optional preamble line (text before the first newline) is skipped; the
    remainder must match the grammar exactly — no recovery. Errors carry
    the 0-based character offset of the violation.
    """
    body_start = answer.find("\n") + 1
    s = _Scanner(answer, body_start)
    if s.eof():
        s.fail("expected at least one subject block")
    subjects: dict[int, ParsedSubject] = {}
    last_id = 0
    while True:
        cat_start = s.pos
        while s.pos < len(s.text) and s.text[s.pos] in _CATEGORY_CHARS:
            s.pos += 1
        category = s.text[cat_start : s.pos]
        if not category:
            s.fail("expected a category")
        s.expect("<id")
        sid = s.uint("subject id")
        if sid <= last_id:
            s.fail(f"subject id {sid} is not greater than the previous id {last_id}")
        s.expect(">")
        if s.peek("</id"):
            s.fail(f"subject {sid} has an empty trajectory")
        frames: dict[int, tuple[int, int, int, int]] = {}
        last_p = 0
        while True:
            s.expect("Frame")
            p = s.uint("frame position")
            if p <= last_p:
                s.fail(f"frame position {p} is not greater than the previous position {last_p}")
            s.expect(":")
            s.expect("<box>[")
            coords = []
            for i in range(4):
                if i:
                    s.expect(",")
                v = s.uint("box coordinate")
                if v > 1000:
                    s.fail(f"box coordinate {v} exceeds 1000")
                coords.append(v)
            s.expect("]</box>")
            if coords[0] > coords[2]:
                s.fail(f"box x1 {coords[0]} exceeds x2 {coords[2]}")
            if coords[1] > coords[3]:
                s.fail(f"box y1 {coords[1]} exceeds y2 {coords[3]}")
            frames[p] = tuple(coords)  # type: ignore[assignment]
            last_p = p
            if s.peek(";"):
                s.pos += 1
                continue
            break
        s.expect("</id")
        closing = s.uint("closing subject id")
        if closing != sid:
            s.fail(f"closing id {closing} does not match opening id {sid}")
        s.expect(">")
        subjects[sid] = ParsedSubject(category=category, frames=frames)
        last_id = sid
        if s.eof():
            break
        s.expect(", ")
    return subjects


def serialize_conversations(records: Iterable[ConversationRecord]) -> Iterator[str]:
    for record in records:
        yield json.dumps(record.to_dict(), ensure_ascii=False)


def parse_conversations(stream: Iterable[str] | IO[str]) -> list[ConversationRecord]:
    out = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(ConversationRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, RecordError) as exc:
            raise VideoloomError(f"conversations line {line_no}: {exc}") from exc
    return out
