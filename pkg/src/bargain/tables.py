"""Expected-utility tables for negotiation under type uncertainty.

The engine fills, by backward recursion over a time window, four families of
values for every believed-possible type:

* receiver continuations ``EUA(i, t)`` / ``EUB(i, t)``: what an agent of
  type ``i`` expects if it rejects now and makes its own offer next round;
* offering values ``EUA(i, j, t)`` / ``EUB(i, j, t)``: the expected value of
  the round-``t`` offer tailored to an opponent of assumed type ``j``;
* optimal choices ``OPTA(i, t)`` / ``OPTB(i, t)``: the assumed type whose
  tailored offer maximises the offerer's expected value;
* the tailored equilibrium packages themselves.

Expectations run over the supplied (possibly updated) posteriors, so the
same recursion serves complete information (point-mass beliefs), symmetric
uncertainty, and the asymmetric setting, where the informed agent's belief
about its opponent is a point mass on the true type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import TOL, expected_value
from .complete import offerer_at
from .model import BeliefState, EmptySupportError, Package, Scenario, TypeSpace, ratios_equal
from .tradeoff import (
    TieGroupAnalysis,
    TradeoffProblem,
    _sweep_order,
    enumerate_optimal_packages,
    select_by_expected_utility,
    solve_tradeoff,
    tie_groups,
)


class OffEquilibriumError(EmptySupportError):
    """An observation is inconsistent with every believed-possible type."""


@dataclass
class EUTables:
    """Backward-recursion tables over the window ``start..n``.

    Offering values and packages exist only at the rounds where that agent
    proposes (turn parity); receiver continuations exist at the rounds where
    it responds, plus the deadline, where they are zero.
    """

    start: int
    n: int
    first_mover: str
    pie_at: dict[int, np.ndarray]
    eua_r: np.ndarray  # (r, n + 2) receiver continuations for a
    eub_r: np.ndarray
    eua_o: np.ndarray  # (r, r, n + 2) offering values for a
    eub_o: np.ndarray
    opta: np.ndarray  # (r, n + 2) argmax choices, -1 where undefined
    optb: np.ndarray
    pkg_a: dict[tuple[int, int, int], np.ndarray]  # (i, j, t) -> a's keep shares
    pkg_b: dict[tuple[int, int, int], np.ndarray]  # (i, j, t) -> b's keep shares
    mult_a: dict[tuple[int, int, int], int]
    mult_b: dict[tuple[int, int, int], int]

    def offerer_at(self, t: int) -> str:
        return offerer_at(t, self.first_mover)

    def receiver_value(self, agent: str, e: int, t: int) -> float:
        table = self.eua_r if agent == "a" else self.eub_r
        return float(table[e, t])

    def equilibrium_offer(self, i: int, t: int) -> tuple[Package, int]:
        """The package type ``i`` proposes at ``t`` and the type it targets."""
        side = self.offerer_at(t)
        pie = self.pie_at[t]
        if side == "a":
            j = int(self.opta[i, t])
            keep = self.pkg_a[(i, j, t)]
            x = keep
        else:
            j = int(self.optb[i, t])
            keep = self.pkg_b[(i, j, t)]
            x = pie - keep
        return Package(t=t, x=x, y=pie - x), j


def terminal_eu(types: TypeSpace, n: int, delta: np.ndarray) -> dict[str, np.ndarray]:
    """Deadline-round slice: receivers get nothing, offerers take every pie."""
    pie = np.asarray(delta, dtype=float) ** (n - 1)
    take_all = types.K @ pie
    r = types.r
    return {
        "eua_r": np.zeros(r),
        "eub_r": np.zeros(r),
        "eua_o": np.repeat(take_all[:, None], r, axis=1),
        "eub_o": np.repeat(take_all[:, None], r, axis=1),
    }


def _pair_analysis(K: np.ndarray, i: int, j: int, cache: dict | None):
    if cache is not None and (i, j) in cache:
        return cache[(i, j)]
    ties = tie_groups(K[i], K[j])
    order = _sweep_order(K[i], K[j])
    if cache is not None:
        cache[(i, j)] = (ties, order)
    return ties, order


def compute_eu_tables(
    scn: Scenario,
    start: int,
    beliefs_a: BeliefState,
    beliefs_b: BeliefState,
    pair_cache: dict | None = None,
) -> EUTables:
    """Fill the tables for the window ``start..n`` under the given beliefs.

    ``beliefs_a`` is the (public) posterior over a's type, ``beliefs_b`` over
    b's.  Rows are computed for every type in a belief's support plus the
    scenario's true types, so the simulator can always read off the true
    offerer's row even off the equilibrium path.
    """
    n, K = scn.n, scn.types.K
    r = scn.r
    if start > n:
        raise ValueError(f"window start {start} is past the deadline {n}")

    rows_a = sorted(set(beliefs_a.support.tolist()) | {scn.true_a})
    rows_b = sorted(set(beliefs_b.support.tolist()) | {scn.true_b})
    supp_a = beliefs_a.support
    supp_b = beliefs_b.support
    post_a = beliefs_a.posterior[supp_a]
    post_b = beliefs_b.posterior[supp_b]

    tables = EUTables(
        start=start,
        n=n,
        first_mover=scn.first_mover,
        pie_at={t: scn.pie(t) for t in range(start, n + 1)},
        eua_r=np.full((r, n + 2), np.nan),
        eub_r=np.full((r, n + 2), np.nan),
        eua_o=np.full((r, r, n + 2), np.nan),
        eub_o=np.full((r, r, n + 2), np.nan),
        opta=np.full((r, n + 2), -1, dtype=np.int64),
        optb=np.full((r, n + 2), -1, dtype=np.int64),
        pkg_a={},
        pkg_b={},
        mult_a={},
        mult_b={},
    )

    for t in range(n, start - 1, -1):
        side = offerer_at(t, scn.first_mover)
        pie = tables.pie_at[t]
        if side == "a":
            off_rows, rec_rows = rows_a, rows_b
            off_o, off_opt, off_pkg, off_mult = (
                tables.eua_o, tables.opta, tables.pkg_a, tables.mult_a,
            )
            rec_r, off_r = tables.eub_r, tables.eua_r
            rec_o, rec_opt = tables.eub_o, tables.optb
            rec_supp, rec_post = supp_b, post_b
        else:
            off_rows, rec_rows = rows_b, rows_a
            off_o, off_opt, off_pkg, off_mult = (
                tables.eub_o, tables.optb, tables.pkg_b, tables.mult_b,
            )
            rec_r, off_r = tables.eua_r, tables.eub_r
            rec_o, rec_opt = tables.eua_o, tables.opta
            rec_supp, rec_post = supp_a, post_a

        # receiver continuations at t: the value of countering next round
        for e in rec_rows:
            if t == n:
                rec_r[e, t] = 0.0
            else:
                rec_r[e, t] = rec_o[e, rec_opt[e, t + 1], t + 1]

        if t == n:
            for i in off_rows:
                take_all = float(K[i] @ pie)
                for j in rec_rows:
                    off_o[i, j, t] = take_all
                    off_pkg[(i, j, t)] = pie.copy()
                    off_mult[(i, j, t)] = 1
                off_opt[i, t] = _argmax_choice(off_o[i, :, t], rec_supp)
            continue

        thresholds = np.array([rec_r[e, t] for e in rec_supp])
        recv_weight_rows = K[rec_supp]
        for i in off_rows:
            reject_value = float(off_r[i, t + 1])
            own = K[i]
            for j in rec_rows:
                target = float(rec_r[j, t])
                problem = TradeoffProblem(own, K[j], pie, target)
                ties, order = _pair_analysis(K, i, j, pair_cache)
                if ties.D == 0:
                    cands = [solve_tradeoff(problem, order=order)]
                else:
                    cands = enumerate_optimal_packages(problem, ties)

                def evaluator(keep, _own=own, _rv=reject_value):
                    return expected_value(
                        keep, pie - keep, _own, recv_weight_rows,
                        thresholds, rec_post, _rv,
                    )

                if side == "a":
                    tie_key = None
                else:
                    tie_key = lambda keep: tuple(pie - keep)  # noqa: E731
                best, value, nties = select_by_expected_utility(
                    cands, evaluator, tie_key=tie_key
                )
                off_o[i, j, t] = value
                off_pkg[(i, j, t)] = best
                off_mult[(i, j, t)] = nties
            off_opt[i, t] = _argmax_choice(off_o[i, :, t], rec_supp)

    return tables


def _argmax_choice(values: np.ndarray, support: np.ndarray) -> int:
    """Best assumed type among the believed-possible ones, lowest index on ties."""
    best = -1
    best_v = -np.inf
    for j in support:
        v = values[j]
        if v > best_v:
            best_v = v
            best = int(j)
    return best


def acceptance_decision(
    receiver: str, e: int, offer: Package, tables: EUTables, t: int, types: TypeSpace
) -> bool:
    """Accept iff the receiver's true-type utility clears its continuation.

    Indifference accepts; at the deadline the continuation is zero.
    """
    shares = offer.x if receiver == "a" else offer.y
    u = float(types.K[e] @ shares)
    return u >= tables.receiver_value(receiver, e, t) - TOL


def update_beliefs_offerer(
    beliefs: BeliefState, rejected_choice: int, lenient: bool = False
) -> BeliefState:
    """A rejection rules out the targeted type; renormalise by Bayes' rule."""
    post = beliefs.posterior.copy()
    if post[rejected_choice] <= 0.0:
        raise ValueError(f"rejected choice {rejected_choice} not in support")
    post[rejected_choice] = 0.0
    total = post.sum()
    if total <= 0.0:
        if lenient:
            return _uniform_over(beliefs.support, len(post))
        raise OffEquilibriumError(
            "belief support would become empty after rejection"
        )
    return BeliefState(post / total)


def update_beliefs_receiver(
    beliefs: BeliefState,
    observed: Package,
    tables: EUTables,
    t: int,
    lenient: bool = False,
) -> BeliefState:
    """Keep only offerer types whose equilibrium offer matches the observation."""
    side = tables.offerer_at(t)
    post = beliefs.posterior.copy()
    for i in beliefs.support:
        pkg, _ = tables.equilibrium_offer(int(i), t)
        if not pkg.shares_close(observed):
            post[i] = 0.0
    total = post.sum()
    if total <= 0.0:
        if lenient:
            return _uniform_over(beliefs.support, len(post))
        raise OffEquilibriumError(
            f"offer at t={t} matches no believed-possible {side} type"
        )
    return BeliefState(post / total)


def _uniform_over(support: np.ndarray, r: int) -> BeliefState:
    post = np.zeros(r)
    post[support] = 1.0 / len(support)
    return BeliefState(post)


def condition_c3(types: TypeSpace) -> bool:
    """True iff some type pair shares an exchange ratio across two issues."""
    K = types.K
    r, m = K.shape
    for i in range(r):
        for j in range(i + 1, r):
            for c in range(m):
                for d in range(c + 1, m):
                    if K[j, c] == 0.0 or K[j, d] == 0.0:
                        continue
                    if ratios_equal(K[i, c], K[j, c], K[i, d], K[j, d]):
                        return True
    return False


def condition_c4(tables: EUTables) -> bool:
    """True iff every tailored offer was unique after expected-utility selection.

    Quantifies over the type pairs present in the tables (the prior support)
    with distinct types, at every round of the window.
    """
    for (i, j, _t), count in tables.mult_a.items():
        if i != j and count != 1:
            return False
    for (i, j, _t), count in tables.mult_b.items():
        if i != j and count != 1:
            return False
    return True


def condition_c5(scn: Scenario, pair_cache: dict | None = None) -> bool:
    """True iff every partition satisfies (not C3) or C4 under the priors."""
    from .model import from_prior  # local import to avoid cycle noise

    for part in scn.partition:
        sub = scn.restrict(part)
        c3 = condition_c3(sub.types)
        if not c3:
            continue
        tabs = compute_eu_tables(
            sub, 1, from_prior(sub.types.pa), from_prior(sub.types.pb)
        )
        if not condition_c4(tabs):
            return False
    return True
