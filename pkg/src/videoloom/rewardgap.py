"""Discounted objectives over frame-prefix rewards and their gap.

A generation policy is represented only by its k-schedule: at step t the
model effectively conditions on frames k_t..t of a horizon-T clip, with
k_t = 1 the full prefix and k_t = t a single frame. A reward model maps a
conditioned window (a, t) to a scalar; the built-in "coverage" model
counts conditioned frames, R(a, t) = t - a + 1, a minimal stand-in that is
monotone in prefix length.

The true objective discounts full-prefix rewards, the proxy objective the
scheduled windows, and the gap is their difference:

    true  = sum_{t=1..T} gamma^t * R(1, t)
    proxy = sum_{t=1..T} gamma^t * R(k_t, t)
    gap   = true - proxy = sum_{t=1..T} gamma^t * (R(1, t) - R(k_t, t))

For any reward monotone non-decreasing in prefix length the gap is
non-negative, grows with T, and grows pointwise as k_t moves toward t.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import VideoloomError

# The termwise and difference-of-objectives computations must agree this tightly.
GAP_TOLERANCE = 1e-12


class RewardSpecError(VideoloomError):
    """Invalid horizon, discount, schedule, or reward table."""


@dataclass(frozen=True)
class RewardModel:
    """Either the built-in coverage reward or an explicit (a, t) table."""

    kind: str = "coverage"
    table: Mapping[tuple[int, int], float] | None = None

    def validate(self, horizon: int) -> None:
        if self.kind == "coverage":
            return
        if self.kind != "table":
            raise RewardSpecError(f"unknown reward kind '{self.kind}'")
        if self.table is None:
            raise RewardSpecError("table reward needs a table")
        for t in range(1, horizon + 1):
            for a in range(1, t + 1):
                value = self.table.get((a, t))
                if value is None or not math.isfinite(value):
                    raise RewardSpecError(f"reward table misses a finite value at (a={a}, t={t})")

    def reward(self, a: int, t: int) -> float:
        if not 1 <= a <= t:
            raise RewardSpecError(f"window (a={a}, t={t}) violates 1 <= a <= t")
        if self.kind == "coverage":
            return float(t - a + 1)
        return float(self.table[(a, t)])

    def is_prefix_monotone(self, horizon: int) -> bool:
        """True iff extending the window backward never lowers the reward."""
        self.validate(horizon)
        return all(
            self.reward(a - 1, t) >= self.reward(a, t)
            for t in range(1, horizon + 1)
            for a in range(2, t + 1)
        )


@dataclass(frozen=True)
class KSchedule:
    """Named map t -> k_t with 1 <= k_t <= t."""

    name: str
    fn: Callable[[int], int]

    def at(self, t: int) -> int:
        k = self.fn(t)
        if not 1 <= k <= t:
            raise RewardSpecError(f"schedule '{self.name}' gives k={k} at t={t}, outside [1, {t}]")
        return k


FULL_PREFIX = KSchedule("full", lambda t: 1)
HALF_PREFIX = KSchedule("half", lambda t: (t + 1) // 2)
SINGLE_FRAME = KSchedule("single", lambda t: t)
BUILTIN_SCHEDULES: dict[str, KSchedule] = {
    s.name: s for s in (FULL_PREFIX, HALF_PREFIX, SINGLE_FRAME)
}


@dataclass(frozen=True)
class RewardGapSpec:
    horizon: int
    gamma: float
    schedule: KSchedule
    reward: RewardModel = RewardModel()

    def validate(self) -> None:
        if self.horizon < 1:
            raise RewardSpecError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 <= self.gamma <= 1.0:
            raise RewardSpecError(f"gamma must lie in [0,1], got {self.gamma}")
        self.reward.validate(self.horizon)
        for t in range(1, self.horizon + 1):
            self.schedule.at(t)


def objective_true(spec: RewardGapSpec) -> float:
    """sum_{t=1..T} gamma^t * R(1, t)."""
    spec.validate()
    return sum(spec.gamma**t * spec.reward.reward(1, t) for t in range(1, spec.horizon + 1))


def objective_proxy(spec: RewardGapSpec) -> float:
    """sum_{t=1..T} gamma^t * R(k_t, t)."""
    spec.validate()
    return sum(
        spec.gamma**t * spec.reward.reward(spec.schedule.at(t), t) for t in range(1, spec.horizon + 1)
    )


def reward_gap(spec: RewardGapSpec) -> float:
    """Termwise gap, cross-checked against objective_true - objective_proxy."""
    spec.validate()
    termwise = sum(
        spec.gamma**t * (spec.reward.reward(1, t) - spec.reward.reward(spec.schedule.at(t), t))
        for t in range(1, spec.horizon + 1)
    )
    difference = objective_true(spec) - objective_proxy(spec)
    if abs(termwise - difference) > GAP_TOLERANCE:
        raise RewardSpecError(
            f"termwise gap {termwise!r} and objective difference {difference!r} disagree beyond {GAP_TOLERANCE}"
        )
    return termwise


def sweep(
    horizons: Sequence[int],
    gammas: Sequence[float],
    schedules: Sequence[KSchedule],
    reward: RewardModel | None = None,
) -> list[dict]:
    """Gap table over the grid, one row per (T, gamma, schedule).

    Rows come out in canonical order: horizon ascending, gamma ascending,
    schedule name ascending.
    """
    if not horizons or not gammas or not schedules:
        raise RewardSpecError("sweep needs non-empty horizons, gammas, and schedules")
    reward = reward or RewardModel()
    rows = []
    for horizon in sorted(set(horizons)):
        for gamma in sorted(set(gammas)):
            for schedule in sorted(schedules, key=lambda s: s.name):
                spec = RewardGapSpec(horizon=horizon, gamma=gamma, schedule=schedule, reward=reward)
                rows.append(
                    {
                        "T": horizon,
                        "gamma": gamma,
                        "policy_name": schedule.name,
                        "delta_r": reward_gap(spec),
                    }
                )
    return rows


def render_table(rows: Iterable[dict]) -> str:
    """Tab-delimited table with a header, for terminals and spreadsheets."""
    lines = ["T\tgamma\tpolicy_name\tdelta_r"]
    for row in rows:
        lines.append(f"{row['T']}\t{row['gamma']}\t{row['policy_name']}\t{row['delta_r']}")
    return "\n".join(lines)


def serialize_rows(rows: Iterable[dict]) -> Iterator[str]:
    for row in rows:
        yield json.dumps(row, ensure_ascii=False)
