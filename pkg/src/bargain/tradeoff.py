"""Exact solver for the offer-construction tradeoff program.

At each round the offering agent must hand its opponent an exact cumulative
utility (the opponent's continuation value) while keeping as much of its own
utility as possible:

    maximise    own . a
    subject to  opp . (pie - a) = target,      0 <= a_c <= pie_c

This is a one-constraint box LP, so an optimum exists with at most one
fractional coordinate.  It is solved exactly by a greedy concession sweep in
exchange-ratio order (``own_c / opp_c``), which also works for signed
weights.  Issues sharing an exchange ratio make the optimum non-unique; this
module detects those tie groups, enumerates the alternative optimal
packages, and picks among them by expected cumulative utility.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ._kernels import TOL, sweep

#: guard against factorial blow-up when enumerating tied packages (7!)
ENUMERATION_CAP = 5040


class InfeasibleTargetError(ValueError):
    """The required opponent utility lies outside the achievable interval."""


class EnumerationCapError(RuntimeError):
    """Tie structure implies more alternative packages than the cap allows."""


@dataclass(frozen=True)
class TradeoffProblem:
    """One offer-construction problem: weights, pie sizes, required opponent utility."""

    own: np.ndarray
    opp: np.ndarray
    pie: np.ndarray
    target: float


@dataclass(frozen=True)
class TieGroupAnalysis:
    """Issues with pairwise-equal exchange ratios, grouped.

    ``pi`` is the number of give-away orders the groups generate (product of
    group-size factorials); 1 when there are no groups.
    """

    groups: tuple[tuple[int, ...], ...]
    D: int
    pi: int


def achievable_interval(opp: np.ndarray, pie: np.ndarray) -> tuple[float, float]:
    """Range of opponent utilities reachable by some box allocation."""
    terms = opp * pie
    return float(np.minimum(terms, 0.0).sum()), float(np.maximum(terms, 0.0).sum())


def _sweep_order(own: np.ndarray, opp: np.ndarray) -> np.ndarray:
    """Issues with nonzero opponent weight, cheapest exchange ratio first."""
    idx = [c for c in range(len(own)) if opp[c] != 0.0]
    idx.sort(key=lambda c: (own[c] / opp[c], c))
    return np.asarray(idx, dtype=np.int64)


def solve_tradeoff(p: TradeoffProblem, order: np.ndarray | None = None) -> np.ndarray:
    """Optimal keep-allocation for the offering agent.

    Raises :class:`InfeasibleTargetError` when the target cannot be met; the
    engine never produces such targets (pies only shrink), so hitting this
    signals a caller bug.
    """
    own = np.asarray(p.own, dtype=float)
    opp = np.asarray(p.opp, dtype=float)
    pie = np.asarray(p.pie, dtype=float)
    lo, hi = achievable_interval(opp, pie)
    target = p.target
    if target < lo - TOL or target > hi + TOL:
        raise InfeasibleTargetError(
            f"target {target:g} outside achievable interval [{lo:g}, {hi:g}]"
        )
    target = min(max(target, lo), hi)
    if order is None:
        order = _sweep_order(own, opp)
    return sweep(own, opp, pie, target, order)


def tie_groups(own: np.ndarray, opp: np.ndarray) -> TieGroupAnalysis:
    """Group issues whose exchange ratios compare equal.

    Ratio equality is decided by exact cross-multiplication on the stored
    binary64 values (no tolerance), so grouping is deterministic.  Issues
    with zero opponent weight never join a group; they cannot contribute to
    the constraint and are preassigned by the solver.
    """
    m = len(own)
    buckets: list[list[int]] = []
    for c in range(m):
        if opp[c] == 0.0:
            continue
        ratio_c = Fraction(float(own[c])) / Fraction(float(opp[c]))
        for bucket in buckets:
            d = bucket[0]
            if ratio_c == Fraction(float(own[d])) / Fraction(float(opp[d])):
                bucket.append(c)
                break
        else:
            buckets.append([c])
    groups = tuple(tuple(b) for b in buckets if len(b) >= 2)
    pi = 1
    for g in groups:
        pi *= math.factorial(len(g))
    return TieGroupAnalysis(groups=groups, D=len(groups), pi=pi)


def enumerate_optimal_packages(
    p: TradeoffProblem, ties: TieGroupAnalysis
) -> list[np.ndarray]:
    """All distinct optimal keep-allocations reachable by reordering tied issues.

    Every returned allocation attains the same objective and meets the target
    exactly; duplicates (orders that land on the same allocation) are removed.
    The result is deterministically ordered.
    """
    if ties.pi > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"{ties.pi} tied packages exceed the cap of {ENUMERATION_CAP}"
        )
    own = np.asarray(p.own, dtype=float)
    opp = np.asarray(p.opp, dtype=float)
    base = _sweep_order(own, opp)
    if not ties.groups:
        return [solve_tradeoff(p, order=base)]

    base_list = base.tolist()
    slots = []  # per group: positions inside base_list
    for g in ties.groups:
        slots.append([base_list.index(c) for c in g])

    seen: dict[tuple, np.ndarray] = {}
    for perms in itertools.product(*(itertools.permutations(g) for g in ties.groups)):
        order = list(base_list)
        for positions, perm in zip(slots, perms):
            for pos, c in zip(positions, perm):
                order[pos] = c
        alloc = solve_tradeoff(p, order=np.asarray(order, dtype=np.int64))
        key = tuple(np.round(alloc, 12))
        if key not in seen:
            seen[key] = alloc
    return [seen[k] for k in sorted(seen)]


def select_by_expected_utility(
    candidates: Sequence[np.ndarray],
    evaluator: Callable[[np.ndarray], float],
    tie_key: Callable[[np.ndarray], tuple] | None = None,
) -> tuple[np.ndarray, float, int]:
    """Pick the candidate with the highest expected utility.

    Evaluator ties (within the global tolerance) are broken by the
    lexicographically smallest a-share vector, which ``tie_key`` must produce
    when the candidates are not already a-share allocations.  Returns the
    winner, its value, and how many candidates tied for the top value.
    """
    if not candidates:
        raise ValueError("empty candidate set")
    if tie_key is None:
        tie_key = lambda alloc: tuple(alloc)  # noqa: E731
    values = [float(evaluator(c)) for c in candidates]
    best = max(values)
    top = [i for i, v in enumerate(values) if v >= best - TOL]
    winner = min(top, key=lambda i: tie_key(candidates[i]))
    return candidates[winner], values[winner], len(top)
