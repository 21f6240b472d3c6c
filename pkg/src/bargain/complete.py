"""Complete-information equilibria: closed form for one issue, backward
induction for a bundle, uniqueness predicates, and a Pareto check.

Under complete information the offerer at every round concedes exactly the
opponent's continuation value, the responder accepts at indifference, and
agreement lands in the opening round of the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import TOL
from .model import Package, ratios_equal
from .tradeoff import TradeoffProblem, solve_tradeoff


def offerer_at(t: int, first_mover: str) -> str:
    """Who proposes at round ``t`` (the first mover takes the odd rounds)."""
    other = "b" if first_mover == "a" else "a"
    return first_mover if t % 2 == 1 else other


def single_issue_equilibrium(n: int, delta: float) -> float:
    """First mover's round-1 share of a single pie: sum of (-delta)^j, j < n."""
    if n < 1:
        raise ValueError(f"deadline must be >= 1, got {n}")
    if not 0 < delta <= 1:
        raise ValueError(f"discount factor must lie in (0, 1], got {delta}")
    return float(sum((-delta) ** j for j in range(n)))


@dataclass(frozen=True)
class CIEquilibrium:
    """Backward-induction solution over a time window.

    ``ua[t]`` / ``ub[t]`` are the continuation values: each agent's utility
    of the round ``t + 1`` equilibrium package (0 at the deadline).  Agreement
    always occurs at the start of the window.
    """

    start: int
    n: int
    packages: dict[int, Package]
    ua: dict[int, float]
    ub: dict[int, float]
    agreement_time: int | None
    utility_a: float
    utility_b: float


def backward_induction_ci(
    weights_a: np.ndarray,
    weights_b: np.ndarray,
    delta: np.ndarray,
    n: int,
    start: int = 1,
    first_mover: str = "a",
) -> CIEquilibrium:
    """Equilibrium packages for rounds ``start..n`` over one issue bundle.

    At the deadline the offerer takes every (shrunken) pie; at earlier rounds
    it solves the tradeoff program against the opponent's continuation.  A
    window starting past the deadline yields the conflict outcome (zeros).
    """
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if start > n:
        return CIEquilibrium(
            start=start, n=n, packages={}, ua={}, ub={},
            agreement_time=None, utility_a=0.0, utility_b=0.0,
        )
    packages: dict[int, Package] = {}
    ua: dict[int, float] = {}
    ub: dict[int, float] = {}
    for t in range(n, start - 1, -1):
        pie = delta ** (t - 1)
        who = offerer_at(t, first_mover)
        own, opp = (wa, wb) if who == "a" else (wb, wa)
        if t == n:
            keep = pie.copy()
        else:
            nxt = packages[t + 1]
            target = float(opp @ (nxt.x if who == "b" else nxt.y))
            keep = solve_tradeoff(TradeoffProblem(own, opp, pie, target))
        x = keep if who == "a" else pie - keep
        packages[t] = Package(t=t, x=x, y=pie - x)
        if t == n:
            ua[t] = 0.0
            ub[t] = 0.0
        else:
            nxt = packages[t + 1]
            ua[t] = float(wa @ nxt.x)
            ub[t] = float(wb @ nxt.y)
    first = packages[start]
    return CIEquilibrium(
        start=start,
        n=n,
        packages=packages,
        ua=ua,
        ub=ub,
        agreement_time=start,
        utility_a=float(wa @ first.x),
        utility_b=float(wb @ first.y),
    )


def condition_c1(weights_a: np.ndarray, weights_b: np.ndarray) -> bool:
    """True iff two issues share the agents' exchange ratio (non-unique offers)."""
    m = len(weights_a)
    for i in range(m):
        for j in range(i + 1, m):
            if ratios_equal(weights_a[i], weights_b[i], weights_a[j], weights_b[j]):
                return True
    return False


def condition_c2(
    weights_a: np.ndarray, weights_b: np.ndarray, partition
) -> bool:
    """True iff no partition member triggers the ratio-tie condition."""
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    for part in partition:
        cols = list(part)
        if condition_c1(wa[cols], wb[cols]):
            return False
    return True


def pareto_optimal_shares(
    keep_a: np.ndarray, weights_a: np.ndarray, weights_b: np.ndarray, pie: np.ndarray
) -> bool:
    """Exact Pareto check over reallocations of the given pies.

    With linear utilities the check is a pair of tradeoff solves: neither
    agent may be able to do better while holding the other at its current
    utility.
    """
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    pie = np.asarray(pie, dtype=float)
    keep_a = np.asarray(keep_a, dtype=float)
    ua0 = float(wa @ keep_a)
    ub0 = float(wb @ (pie - keep_a))
    best_a = solve_tradeoff(TradeoffProblem(wa, wb, pie, ub0))
    if float(wa @ best_a) > ua0 + TOL:
        return False
    best_b = solve_tradeoff(TradeoffProblem(wb, wa, pie, ua0))
    if float(wb @ best_b) > ub0 + TOL:
        return False
    return True


def is_pareto_optimal(
    pkg: Package, weights_a: np.ndarray, weights_b: np.ndarray
) -> bool:
    """Pareto check for a package (pies inferred from the package itself)."""
    pie = pkg.x + pkg.y
    return pareto_optimal_shares(pkg.x, weights_a, weights_b, pie)
