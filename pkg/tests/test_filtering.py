import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videoloom.boxes import BoundingBox
from videoloom.filtering import (
    FilterParams,
    apply_filters,
    filter_low_conf,
    filter_short,
    filter_small,
    serialize_report,
)
from videoloom.tracker import SubjectTrajectory, TrackEntry


def make_track(subject_id, boxes, scores=None, category="person"):
    scores = scores or [0.9] * len(boxes)
    return SubjectTrajectory(
        subject_id=subject_id,
        category=category,
        entries=[TrackEntry(i, box, score) for i, (box, score) in enumerate(zip(boxes, scores))],
        video_id="v",
        clip_id="c",
    )


def square(area_like):
    """Axis-aligned box with the given width x height product."""
    w, h = area_like
    return BoundingBox(0, 0, w, h)


class TestFilterSmall:
    def test_area_30_on_32x32_at_one_thirtysecond_is_removed(self):
        track = make_track(1, [square((5, 6))])  # area 30 < 32
        assert filter_small([track], 32, 32, 1 / 32) == []

    def test_area_33_is_kept(self):
        track = make_track(1, [square((3, 11))])  # area 33 >= 32
        assert filter_small([track], 32, 32, 1 / 32) == [track]

    def test_boundary_area_exactly_at_cutoff_is_kept(self):
        track = make_track(1, [square((4, 8))])  # area 32 == cutoff: >= keeps
        assert filter_small([track], 32, 32, 1 / 32) == [track]

    def test_any_entry_below_cutoff_removes_the_whole_trajectory(self):
        track = make_track(1, [square((10, 10)), square((4, 5))])  # areas 100, 20
        assert filter_small([track], 32, 32, 1 / 32) == []

    def test_all_scope_requires_every_entry_small(self):
        track = make_track(1, [square((10, 10)), square((4, 5))])
        assert filter_small([track], 32, 32, 1 / 32, scope="all") == [track]
        tiny = make_track(2, [square((4, 5)), square((3, 6))])
        assert filter_small([tiny], 32, 32, 1 / 32, scope="all") == []

    def test_side_mode_uses_linear_fractions(self):
        # 8x8 box on 64x64: max side fraction 1/8 = 2/16, not small at 1/16
        track = make_track(1, [square((8, 8))])
        assert filter_small([track], 64, 64, 1 / 16, mode="side") == [track]
        small = make_track(2, [square((3, 3))])  # 3/64 < 4/64
        assert filter_small([small], 64, 64, 1 / 16, mode="side") == []


class TestFilterShortAndLowConf:
    def test_length_below_minimum_removed(self):
        assert filter_short([make_track(1, [square((5, 5))])], 2) == []

    def test_length_at_minimum_kept(self):
        track = make_track(1, [square((5, 5)), square((5, 5))])
        assert filter_short([track], 2) == [track]

    def test_empty_input_is_vacuous(self):
        assert filter_short([], 3) == []
        assert filter_low_conf([], 0.5) == []
        assert filter_small([], 10, 10, 0.5) == []

    def test_mean_score_boundary_is_kept(self):
        track = make_track(1, [square((5, 5)), square((5, 5))], scores=[1.0, 0.0])
        assert filter_low_conf([track], 0.5) == [track]

    def test_high_scores_kept_low_scores_removed(self):
        good = make_track(1, [square((5, 5))] * 2, scores=[0.9, 0.9])
        bad = make_track(2, [square((5, 5))] * 2, scores=[0.2, 0.2])
        assert filter_low_conf([good, bad], 0.8) == [good]


def random_tracks(seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    tracks = []
    for sid in range(1, 1 + int(rng.integers(1, 8))):
        n = int(rng.integers(1, 6))
        boxes = []
        scores = []
        for _ in range(n):
            w = float(rng.integers(1, 40))
            h = float(rng.integers(1, 40))
            boxes.append(BoundingBox(0, 0, w, h))
            scores.append(float(rng.integers(0, 101)) / 100.0)
        tracks.append(make_track(sid, boxes, scores))
    return tracks


@pytest.mark.parametrize("seed", range(12))
def test_filters_are_idempotent_and_composite_is_an_intersection(seed):
    tracks = random_tracks(seed)
    params = FilterParams(min_area_fraction=1 / 32, min_length=2, min_mean_score=0.5)
    once_small = filter_small(tracks, 64, 64, params.min_area_fraction)
    assert filter_small(once_small, 64, 64, params.min_area_fraction) == once_small
    once_short = filter_short(tracks, params.min_length)
    assert filter_short(once_short, params.min_length) == once_short
    once_low = filter_low_conf(tracks, params.min_mean_score)
    assert filter_low_conf(once_low, params.min_mean_score) == once_low

    kept, report = apply_filters(tracks, 64, 64, params)
    intersection = [t for t in tracks if t in once_small and t in once_short and t in once_low]
    assert kept == intersection
    assert len(kept) + len(report) == len(tracks)

    # order-insensitivity across the three predicates
    a = filter_low_conf(filter_short(once_small, params.min_length), params.min_mean_score)
    b = filter_small(filter_low_conf(filter_short(tracks, params.min_length), params.min_mean_score),
                     64, 64, params.min_area_fraction)
    assert a == b == kept


@given(st.integers(0, 1000), st.integers(0, 1000))
@settings(max_examples=40)
def test_raising_thresholds_never_grows_survivors(seed, permille):
    tracks = random_tracks(seed)
    low = permille / 2000.0  # <= 0.5
    high = min(0.999, low + 0.3)
    assert set(t.subject_id for t in filter_low_conf(tracks, high)) <= set(
        t.subject_id for t in filter_low_conf(tracks, low)
    )
    frac_low = max(1e-6, low)
    assert set(t.subject_id for t in filter_small(tracks, 64, 64, min(0.999, frac_low + 0.2))) <= set(
        t.subject_id for t in filter_small(tracks, 64, 64, frac_low)
    )
    assert set(t.subject_id for t in filter_short(tracks, 3)) <= set(t.subject_id for t in filter_short(tracks, 2))


def test_survivors_are_byte_identical(tiny_frames=None):
    from videoloom.tracker import serialize_tracks

    tracks = random_tracks(3)
    before = {t.subject_id: line for t, line in zip(tracks, serialize_tracks(tracks))}
    kept, _ = apply_filters(tracks, 64, 64, FilterParams())
    for track, line in zip(kept, serialize_tracks(kept)):
        assert line == before[track.subject_id]


def test_report_lines_carry_reason_and_value():
    big = make_track(1, [square((30, 30))] * 2)
    small = make_track(2, [square((2, 2))] * 2)
    short = make_track(3, [square((30, 30))])
    low = make_track(4, [square((30, 30))] * 2, scores=[0.1, 0.1])
    kept, report = apply_filters([big, small, short, low], 64, 64, FilterParams())
    assert kept == [big]
    by_id = {e["subject_id"]: e for e in report}
    assert by_id[2]["reason"] == "small" and by_id[2]["value"] == 4.0
    assert by_id[3]["reason"] == "short" and by_id[3]["value"] == 1.0
    assert by_id[4]["reason"] == "low_conf" and by_id[4]["value"] == pytest.approx(0.1)
    for line in serialize_report(report):
        parsed = json.loads(line)
        assert set(parsed) >= {"subject_id", "reason", "value"}
        assert parsed["reason"] in {"small", "short", "low_conf"}
