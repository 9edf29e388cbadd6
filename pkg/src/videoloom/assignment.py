"""Minimum-cost assignment with forbidden pairs and a total tie-break.

Semantics: among matchings that use only allowed pairs (cost <= the
``forbid_above`` threshold when one is given), take maximum cardinality;
among those, minimum total cost; among those, the canonical matching picked
by scanning rows in ascending order and giving each row the lowest column
index consistent with optimality. The result is therefore a pure,
platform-independent function of the inputs.

scipy's linear_sum_assignment does the optimization; the canonical-matching
layer re-solves reduced subproblems, which is cheap at the matrix sizes
produced by per-frame association. Costs must be finite and non-negative.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import VideoloomError

# Relative slack when comparing float cost totals computed in different
# summation orders; must stay far below any genuine cost difference.
_REL_TOL = 1e-9


class AssignmentError(VideoloomError):
    """The cost matrix is not a finite, non-negative 2-D array."""


def _check_matrix(cost: np.ndarray) -> np.ndarray:
    arr = np.asarray(cost, dtype=float)
    if arr.ndim != 2:
        raise AssignmentError(f"cost must be 2-D, got shape {arr.shape}")
    if arr.size:
        if not np.isfinite(arr).all():
            raise AssignmentError("cost entries must be finite")
        if (arr < 0).any():
            raise AssignmentError("cost entries must be non-negative")
    return arr


def _solve(cost: np.ndarray, allowed: np.ndarray) -> tuple[int, float]:
    """(cardinality, total cost) of a max-cardinality min-cost matching."""
    n, m = cost.shape
    if n == 0 or m == 0 or not allowed.any():
        return 0, 0.0
    # Forbidden entries get a cost larger than any allowed total, so the
    # solver minimizes forbidden-pair count first, allowed cost second.
    big = float(cost[allowed].sum()) + 1.0
    padded = np.where(allowed, cost, big)
    rows, cols = linear_sum_assignment(padded)
    keep = allowed[rows, cols]
    return int(keep.sum()), float(cost[rows[keep], cols[keep]].sum())


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL_TOL * (1.0 + max(abs(a), abs(b)))


def assign(cost, forbid_above: float | None = None) -> list[tuple[int, int]]:
    """Optimal row/column pairing for a non-negative cost matrix.

    Args:
        cost: n x m array-like of finite, non-negative costs.
        forbid_above: entries strictly greater than this are never paired.

    Returns:
        Pairs (row, col), sorted by row, forming the canonical
        max-cardinality minimum-cost matching over allowed pairs.
    """
    arr = _check_matrix(cost)
    n, m = arr.shape
    if n == 0 or m == 0:
        return []
    allowed = np.ones((n, m), dtype=bool) if forbid_above is None else arr <= forbid_above

    best_card, best_cost = _solve(arr, allowed)
    if best_card == 0:
        return []

    pairs: list[tuple[int, int]] = []
    fixed_cost = 0.0
    free_cols = list(range(m))
    rows_left = list(range(n))
    for r in range(n):
        rows_left.remove(r)
        sub_rows = np.array(rows_left, dtype=int)
        chosen = None
        for ci, c in enumerate(free_cols):
            if not allowed[r, c]:
                continue
            rest_cols = np.array(free_cols[:ci] + free_cols[ci + 1 :], dtype=int)
            card, total = _solve(arr[np.ix_(sub_rows, rest_cols)], allowed[np.ix_(sub_rows, rest_cols)])
            if len(pairs) + 1 + card == best_card and _close(fixed_cost + arr[r, c] + total, best_cost):
                chosen = c
                break
        if chosen is None:
            sub_cols = np.array(free_cols, dtype=int)
            card, total = _solve(arr[np.ix_(sub_rows, sub_cols)], allowed[np.ix_(sub_rows, sub_cols)])
            if len(pairs) + card != best_card or not _close(fixed_cost + total, best_cost):
                raise AssignmentError("internal inconsistency while canonicalizing the matching")
            continue
        pairs.append((r, chosen))
        fixed_cost += float(arr[r, chosen])
        free_cols.remove(chosen)
        if len(pairs) == best_card:
            break
    return pairs
