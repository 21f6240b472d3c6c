"""Brute-force verifiers for the exact engine, on small instances only.

Every oracle works by exhaustive enumeration over a share grid and shares no
solver code with the main engine (only the domain types), so an agreement
between the two routes certifies both.  Grid answers carry discretisation
error; the stated tolerances are:

* constraint band for the tradeoff search: ``max|opp| * m * step``
  (worst case one grid step per issue against the equality constraint);
* objective slack: ``sum|w| * step`` per agent (one grid step of utility);
* backward-induction values: the per-round slack summed over the window.

Instances where a comparison lands inside these bands are flagged fragile
rather than judged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import (
    TOL,
    grid_ci_offer,
    grid_dominates,
    grid_tradeoff,
    grid_tradeoff_topset,
)
from .complete import offerer_at
from .model import BeliefState, Scenario, from_prior, point_mass
from .tradeoff import TradeoffProblem

#: enumeration budgets (grid points explode combinatorially past these)
MAX_TRADEOFF_ISSUES = 4
MAX_CI_ISSUES = 3
MAX_CI_DEADLINE = 4
MAX_OPT_TYPES = 3
MAX_OPT_DEADLINE = 4

#: retained near-optimal grid allocations per tradeoff search
TOPSET_CAP = 4096


class BudgetExceededError(RuntimeError):
    """Instance too large for exhaustive enumeration."""


class GridSearchError(RuntimeError):
    """No grid point satisfied the constraint at this resolution."""


@dataclass(frozen=True)
class GridSpec:
    """Share-grid resolution; per-issue point counts follow from pie sizes."""

    step: float = 0.05

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"grid step must be positive, got {self.step}")

    def points(self, pie: np.ndarray) -> np.ndarray:
        return (pie / self.step + 1e-12).astype(np.int64) + 1

    def band(self, opp: np.ndarray) -> float:
        return float(np.max(np.abs(opp))) * len(opp) * self.step

    def utility_slack(self, weights: np.ndarray) -> float:
        return float(np.sum(np.abs(weights))) * self.step


def brute_force_tradeoff(
    p: TradeoffProblem, grid: GridSpec
) -> tuple[np.ndarray, float]:
    """Best grid allocation meeting the opponent-utility equality in-band."""
    own = np.asarray(p.own, dtype=float)
    opp = np.asarray(p.opp, dtype=float)
    pie = np.asarray(p.pie, dtype=float)
    if len(own) > MAX_TRADEOFF_ISSUES:
        raise BudgetExceededError(f"{len(own)} issues exceed the grid budget")
    found, best, alloc = grid_tradeoff(
        own, opp, pie, float(p.target), grid.step, grid.band(opp)
    )
    if not found:
        raise GridSearchError(
            f"no grid allocation reaches target {p.target:g} at step {grid.step:g}"
        )
    return alloc, float(best)


def brute_force_equilibrium_ci(
    weights_a: np.ndarray,
    weights_b: np.ndarray,
    delta: np.ndarray,
    n: int,
    grid: GridSpec,
    start: int = 1,
    first_mover: str = "a",
) -> tuple[float, float]:
    """Discretised exhaustive backward induction over grid offers.

    At each round the offerer scans every grid package; the receiver accepts
    exactly when its utility clears its (grid) continuation; rejected rounds
    fall through to the next-round values.  Returns the round-``start``
    utilities for (a, b).
    """
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if len(wa) > MAX_CI_ISSUES or n > MAX_CI_DEADLINE:
        raise BudgetExceededError(f"m={len(wa)}, n={n} exceed the grid budget")
    va, vb = 0.0, 0.0  # conflict values past the deadline
    for t in range(n, start - 1, -1):
        pie = delta ** (t - 1)
        who = offerer_at(t, first_mover)
        if who == "a":
            va, vb = grid_ci_offer(wa, wb, pie, vb, va, vb, grid.step)
        else:
            vb, va = grid_ci_offer(wb, wa, pie, va, vb, va, grid.step)
    return float(va), float(vb)


def ci_value_tolerance(
    weights_a: np.ndarray, weights_b: np.ndarray, n: int, grid: GridSpec, start: int = 1
) -> float:
    """Stated comparison tolerance: one grid step of both agents' utility per round."""
    per_round = grid.utility_slack(weights_a) + grid.utility_slack(weights_b)
    return (n - start + 1) * per_round


def brute_force_pareto(
    keep_a: np.ndarray,
    weights_a: np.ndarray,
    weights_b: np.ndarray,
    pie: np.ndarray,
    grid: GridSpec,
) -> bool:
    """True iff no grid reallocation of the pies weakly dominates the given
    split with a strict improvement beyond one grid step of utility."""
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    pie = np.asarray(pie, dtype=float)
    if len(wa) > MAX_TRADEOFF_ISSUES:
        raise BudgetExceededError(f"{len(wa)} issues exceed the grid budget")
    return not grid_dominates(
        np.asarray(keep_a, dtype=float), wa, wb, pie, grid.step,
        grid.utility_slack(wa), grid.utility_slack(wb),
    )


@dataclass
class OptChoiceOracle:
    """Grid-route optimal-choice tables plus a fragility verdict.

    ``fragile`` is set when some acceptance test or argmax ran within the
    discretisation tolerance, in which case the grid route cannot certify
    the exact route on this instance.
    """

    opta: np.ndarray
    optb: np.ndarray
    eua_o: np.ndarray
    eub_o: np.ndarray
    fragile: bool
    value_tolerance: float


def brute_force_opt_choice(
    scn: Scenario,
    grid: GridSpec,
    start: int = 1,
    beliefs_a: BeliefState | None = None,
    beliefs_b: BeliefState | None = None,
) -> OptChoiceOracle:
    """Optimal-choice tables recomputed by grid search and direct expectation.

    Independent route: tailored offers come from an exhaustive grid scan
    (best own utility under the in-band equality, then the direct expectation
    over opponent types picks among near-optimal allocations), continuations
    from the same recursion one round later.
    """
    n, r, m, K = scn.n, scn.r, scn.m, scn.types.K
    if r > MAX_OPT_TYPES or n > MAX_OPT_DEADLINE or m > MAX_CI_ISSUES:
        raise BudgetExceededError(f"r={r}, n={n}, m={m} exceed the grid budget")
    if beliefs_a is None:
        beliefs_a = from_prior(scn.types.pa)
    if beliefs_b is None:
        if scn.setting in ("AU_I", "AU_D"):
            beliefs_b = point_mass(r, scn.true_b)
        elif scn.setting == "CI":
            beliefs_b = point_mass(r, scn.true_b)
        else:
            beliefs_b = from_prior(scn.types.pb)
    if scn.setting == "CI":
        beliefs_a = point_mass(r, scn.true_a)

    heaviest = float(np.max(np.abs(K).sum(axis=1)))
    frag_tol = 2.0 * heaviest * grid.step
    fragile = False

    eua_r = np.full((r, n + 2), np.nan)
    eub_r = np.full((r, n + 2), np.nan)
    eua_o = np.full((r, r, n + 2), np.nan)
    eub_o = np.full((r, r, n + 2), np.nan)
    opta = np.full((r, n + 2), -1, dtype=np.int64)
    optb = np.full((r, n + 2), -1, dtype=np.int64)

    supp_a = beliefs_a.support
    supp_b = beliefs_b.support
    post_a = beliefs_a.posterior
    post_b = beliefs_b.posterior

    for t in range(n, start - 1, -1):
        side = offerer_at(t, scn.first_mover)
        pie = scn.pie(t)
        if side == "a":
            off_rows, rec_rows = supp_a, supp_b
            off_o, off_opt, rec_o, rec_opt = eua_o, opta, eub_o, optb
            rec_r, off_r = eub_r, eua_r
            rec_post = post_b
        else:
            off_rows, rec_rows = supp_b, supp_a
            off_o, off_opt, rec_o, rec_opt = eub_o, optb, eua_o, opta
            rec_r, off_r = eua_r, eub_r
            rec_post = post_a

        for e in rec_rows:
            rec_r[e, t] = 0.0 if t == n else rec_o[e, rec_opt[e, t + 1], t + 1]

        for i in off_rows:
            own = K[i]
            if t == n:
                # offerer takes every pie on the grid
                keep = (np.asarray(grid.points(pie)) - 1) * grid.step
                for j in rec_rows:
                    off_o[i, j, t] = float(own @ keep)
            else:
                reject_value = float(off_r[i, t + 1])
                for j in rec_rows:
                    target = float(rec_r[j, t])
                    opp = K[j]
                    count, _best, allocs = grid_tradeoff_topset(
                        own, opp, pie, target, grid.step, grid.band(opp),
                        grid.utility_slack(own) + 1e-12, TOPSET_CAP,
                    )
                    if count == 0:
                        raise GridSearchError(
                            f"no grid allocation reaches target {target:g} "
                            f"at t={t} (step {grid.step:g})"
                        )
                    best_val = -np.inf
                    for k in range(count):
                        keep = allocs[k]
                        give = pie - keep
                        own_util = float(own @ keep)
                        ev = 0.0
                        for e in rec_rows:
                            u = float(K[e] @ give)
                            if abs(u - rec_r[e, t]) < frag_tol:
                                fragile = True
                            if u >= rec_r[e, t] - TOL:
                                ev += rec_post[e] * own_util
                            else:
                                ev += rec_post[e] * reject_value
                        if ev > best_val + 1e-15:
                            best_val = ev
                    off_o[i, j, t] = best_val
            # argmax; a near-tie at the top means the grid cannot certify it
            vals = sorted((float(off_o[i, j, t]) for j in rec_rows), reverse=True)
            if t < n and len(vals) > 1 and vals[0] - vals[1] < frag_tol * (n - t + 1):
                fragile = True
            best_j = -1
            best_v = -np.inf
            for j in rec_rows:
                if off_o[i, j, t] > best_v:
                    best_v = float(off_o[i, j, t])
                    best_j = int(j)
            off_opt[i, t] = best_j

    return OptChoiceOracle(
        opta=opta,
        optb=optb,
        eua_o=eua_o,
        eub_o=eub_o,
        fragile=fragile,
        value_tolerance=frag_tol * n,
    )
