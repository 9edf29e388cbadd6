import math

import pytest

from videoloom.rewardgap import (
    BUILTIN_SCHEDULES,
    FULL_PREFIX,
    HALF_PREFIX,
    SINGLE_FRAME,
    KSchedule,
    RewardGapSpec,
    RewardModel,
    RewardSpecError,
    objective_proxy,
    objective_true,
    render_table,
    reward_gap,
    sweep,
)


def spec(horizon, gamma, schedule, reward=None):
    return RewardGapSpec(horizon=horizon, gamma=gamma, schedule=schedule, reward=reward or RewardModel())


class TestObjectives:
    def test_true_objective_enumerates_prefix_rewards(self):
        # coverage reward: R(1, t) = t, so gamma=1, T=3 gives 1 + 2 + 3
        assert objective_true(spec(3, 1.0, FULL_PREFIX)) == 6.0

    def test_single_step_horizon(self):
        assert objective_true(spec(1, 0.7, FULL_PREFIX)) == pytest.approx(0.7)

    def test_zero_discount_annihilates(self):
        assert objective_true(spec(5, 0.0, FULL_PREFIX)) == 0.0
        assert objective_proxy(spec(5, 0.0, SINGLE_FRAME)) == 0.0

    def test_full_prefix_schedule_makes_proxy_equal_true(self):
        for horizon in (1, 3, 7):
            for gamma in (0.5, 0.9, 1.0):
                assert objective_proxy(spec(horizon, gamma, FULL_PREFIX)) == objective_true(
                    spec(horizon, gamma, FULL_PREFIX)
                )

    def test_single_frame_proxy_counts_one_per_step(self):
        assert objective_proxy(spec(3, 1.0, SINGLE_FRAME)) == 3.0


class TestRewardGap:
    def test_termwise_enumeration_single_frame(self):
        assert reward_gap(spec(3, 1.0, SINGLE_FRAME)) == 3.0  # (1-1) + (2-1) + (3-1)

    def test_termwise_enumeration_discounted(self):
        # 0.5*0 + 0.25*1 + 0.125*2 = 0.5, exact in binary floats
        assert reward_gap(spec(3, 0.5, SINGLE_FRAME)) == 0.5

    def test_full_prefix_gap_is_exactly_zero(self):
        assert reward_gap(spec(9, 0.9, FULL_PREFIX)) == 0.0

    def test_closed_form_at_undiscounted_single_frame(self):
        for horizon in range(1, 20):
            assert reward_gap(spec(horizon, 1.0, SINGLE_FRAME)) == horizon * (horizon - 1) / 2

    def test_half_schedule_lies_between(self):
        for horizon in (2, 5, 9):
            full = reward_gap(spec(horizon, 0.9, FULL_PREFIX))
            half = reward_gap(spec(horizon, 0.9, HALF_PREFIX))
            single = reward_gap(spec(horizon, 0.9, SINGLE_FRAME))
            assert full <= half <= single

    def test_gap_nonnegative_for_monotone_custom_table(self):
        table = {}
        for t in range(1, 5):
            for a in range(1, t + 1):
                table[(a, t)] = math.log1p(t - a + 1) * 2.0
        reward = RewardModel(kind="table", table=table)
        assert reward.is_prefix_monotone(4)
        for schedule in (FULL_PREFIX, HALF_PREFIX, SINGLE_FRAME):
            assert reward_gap(spec(4, 0.9, schedule, reward)) >= 0.0

    def test_non_monotone_table_is_detected_and_can_go_negative(self):
        table = {(1, 1): 0.0, (1, 2): 0.0, (2, 2): 5.0}
        reward = RewardModel(kind="table", table=table)
        assert not reward.is_prefix_monotone(2)
        assert reward_gap(spec(2, 1.0, SINGLE_FRAME, reward)) < 0.0

    def test_missing_table_entry_is_an_error(self):
        reward = RewardModel(kind="table", table={(1, 1): 1.0})
        with pytest.raises(RewardSpecError, match="misses"):
            reward_gap(spec(2, 1.0, SINGLE_FRAME, reward))

    def test_invalid_schedule_is_rejected(self):
        bad = KSchedule("bad", lambda t: t + 1)
        with pytest.raises(RewardSpecError, match="outside"):
            reward_gap(spec(3, 1.0, bad))

    def test_gamma_out_of_range(self):
        with pytest.raises(RewardSpecError, match="gamma"):
            reward_gap(spec(3, 1.5, FULL_PREFIX))


class TestSweep:
    def test_undiscounted_single_frame_column(self):
        rows = sweep([1, 2, 3], [1.0], [SINGLE_FRAME])
        assert [r["delta_r"] for r in rows] == [0.0, 1.0, 3.0]

    def test_policy_dominance_is_pointwise(self):
        rows = sweep(list(range(1, 8)), [0.9], [HALF_PREFIX, SINGLE_FRAME])
        by_key = {(r["T"], r["policy_name"]): r["delta_r"] for r in rows}
        for horizon in range(1, 8):
            assert by_key[(horizon, "half")] <= by_key[(horizon, "single")]

    def test_zero_discount_row_is_all_zeros(self):
        rows = sweep([1, 4, 9], [0.0], [SINGLE_FRAME, HALF_PREFIX])
        assert all(r["delta_r"] == 0.0 for r in rows)

    def test_canonical_row_order(self):
        rows = sweep([2, 1], [1.0, 0.5], [SINGLE_FRAME, FULL_PREFIX])
        keys = [(r["T"], r["gamma"], r["policy_name"]) for r in rows]
        assert keys == sorted(keys)

    def test_table_rendering_has_header_and_rows(self):
        rows = sweep([2], [1.0], [SINGLE_FRAME])
        text = render_table(rows)
        assert text.splitlines()[0] == "T\tgamma\tpolicy_name\tdelta_r"
        assert "single" in text

    def test_builtin_schedule_registry(self):
        assert set(BUILTIN_SCHEDULES) == {"full", "half", "single"}
        assert BUILTIN_SCHEDULES["half"].at(5) == 3
