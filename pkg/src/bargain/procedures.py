"""The three negotiation procedures and their comparison.

Package deal: every issue in one bundle, one accept/reject per round.
Simultaneous: the agenda partitions run in parallel, all starting at round 1,
each settled as an independent package deal with its own belief state.
Sequential: partitions run in agenda order; each starts one round after the
previous one settles and faces the already-shrunken pies.

A negotiation is simulated round by round: the offerer (fixed by turn
parity) rebuilds the expected-utility tables under the current public
beliefs, proposes the package tailored to its optimal opponent-type choice,
and the receiver accepts exactly when its true-type utility clears its
continuation.  Rejections trigger the Bayesian belief updates and the next
round starts from freshly recomputed tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import TOL
from .complete import offerer_at, pareto_optimal_shares
from .model import (
    ASYMMETRIC_SETTINGS,
    BeliefState,
    Package,
    Scenario,
    from_prior,
    point_mass,
)
from .tables import (
    acceptance_decision,
    compute_eu_tables,
    condition_c3,
    condition_c4,
    condition_c5,
    update_beliefs_offerer,
    update_beliefs_receiver,
)
from .complete import condition_c1, condition_c2

PROCEDURES = ("package", "simultaneous", "sequential")


@dataclass(frozen=True)
class OfferEvent:
    """One transcript line: who offered what to whom, and the response."""

    t: int
    offerer: str
    package: Package
    assumed_type: int
    accepted: bool
    receiver_continuation: float


@dataclass
class PartitionOutcome:
    issues: tuple[int, ...]
    start: int
    agreement_time: int | None
    earliest: int | None
    latest: int | None
    package: Package | None
    utility_a: float
    utility_b: float
    transcript: list[OfferEvent] = field(default_factory=list)


@dataclass
class NegotiationOutcome:
    """Result of one simulated procedure run under the scenario's true types."""

    procedure: str
    partitions: list[PartitionOutcome]
    utility_a: float
    utility_b: float

    @property
    def agreement_times(self) -> list[int | None]:
        return [p.agreement_time for p in self.partitions]


def agreement_time_bounds(r: int, n: int, start: int) -> tuple[int, int]:
    """Earliest and latest possible agreement rounds for a window.

    With ``r`` possible opponent types the offerer needs at most ``r - 1``
    rejected offers (one every other round) before its beliefs pin the
    opponent, so the latest round is ``start + 2r - 2`` clamped by the
    deadline; complete information settles immediately.
    """
    if r <= 1:
        return start, start
    return start, min(start + 2 * r - 2, n)


def _initial_beliefs(scn: Scenario, ta: int, tb: int) -> tuple[BeliefState, BeliefState]:
    r = scn.r
    if scn.setting == "CI":
        return point_mass(r, ta), point_mass(r, tb)
    if scn.setting in ASYMMETRIC_SETTINGS:
        return from_prior(scn.types.pa), point_mass(r, tb)
    return from_prior(scn.types.pa), from_prior(scn.types.pb)


def _table_key(t, beliefs_a, beliefs_b, ta, tb):
    rows_a = tuple(sorted(set(beliefs_a.support.tolist()) | {ta}))
    rows_b = tuple(sorted(set(beliefs_b.support.tolist()) | {tb}))
    return (t, beliefs_a.key(), beliefs_b.key(), rows_a, rows_b)


def _negotiate(
    scn: Scenario,
    start: int,
    issues: tuple[int, ...],
    strict: bool = True,
    caches: dict | None = None,
) -> PartitionOutcome:
    """Simulate equilibrium play over rounds ``start..n`` for one bundle."""
    n = scn.n
    r_eff = 1 if scn.setting == "CI" else scn.r
    if start > n:
        return PartitionOutcome(
            issues=issues, start=start, agreement_time=None,
            earliest=None, latest=None, package=None,
            utility_a=0.0, utility_b=0.0,
        )
    earliest, latest = agreement_time_bounds(r_eff, n, start)
    ta, tb = scn.true_a, scn.true_b
    beliefs_a, beliefs_b = _initial_beliefs(scn, ta, tb)
    informed_a = scn.setting in ASYMMETRIC_SETTINGS
    if caches is None:
        caches = {"pairs": {}, "tables": {}}
    transcript: list[OfferEvent] = []

    for t in range(start, n + 1):
        key = _table_key(t, beliefs_a, beliefs_b, ta, tb)
        tables = caches["tables"].get(key)
        if tables is None:
            tables = compute_eu_tables(
                scn, t, beliefs_a, beliefs_b, pair_cache=caches["pairs"]
            )
            caches["tables"][key] = tables
        side = offerer_at(t, scn.first_mover)
        receiver = "b" if side == "a" else "a"
        i = ta if side == "a" else tb
        e = tb if receiver == "b" else ta
        pkg, assumed = tables.equilibrium_offer(i, t)
        cont = tables.receiver_value(receiver, e, t)
        accepted = acceptance_decision(receiver, e, pkg, tables, t, scn.types)
        transcript.append(
            OfferEvent(t, side, pkg, assumed, accepted, cont)
        )
        if accepted:
            ua = float(scn.types.K[ta] @ pkg.x)
            ub = float(scn.types.K[tb] @ pkg.y)
            return PartitionOutcome(
                issues=issues, start=start, agreement_time=t,
                earliest=earliest, latest=latest, package=pkg,
                utility_a=ua, utility_b=ub, transcript=transcript,
            )
        # Bayesian updates: the rejected offerer rules out the type it
        # targeted, the receiver keeps only offerer types whose equilibrium
        # offer matches what it saw.  In the asymmetric settings agent a
        # holds knowledge about b rather than a belief, so beliefs about b
        # never move there.
        if side == "a":
            if not informed_a:
                beliefs_b = update_beliefs_offerer(
                    beliefs_b, assumed, lenient=not strict
                )
            beliefs_a = update_beliefs_receiver(
                beliefs_a, pkg, tables, t, lenient=not strict
            )
        else:
            beliefs_a = update_beliefs_offerer(
                beliefs_a, assumed, lenient=not strict
            )
            if not informed_a:
                beliefs_b = update_beliefs_receiver(
                    beliefs_b, pkg, tables, t, lenient=not strict
                )

    return PartitionOutcome(
        issues=issues, start=start, agreement_time=None,
        earliest=earliest, latest=latest, package=None,
        utility_a=0.0, utility_b=0.0, transcript=transcript,
    )


def _cache_for(caches: dict | None, issues: tuple[int, ...]) -> dict | None:
    if caches is None:
        return None
    return caches.setdefault(issues, {"pairs": {}, "tables": {}})


def run_package_deal(
    scn: Scenario, strict: bool = True, caches: dict | None = None
) -> NegotiationOutcome:
    """Negotiate all issues as one bundle."""
    issues = tuple(range(scn.m))
    part = _negotiate(scn, 1, issues, strict=strict, caches=_cache_for(caches, issues))
    return NegotiationOutcome(
        procedure="package",
        partitions=[part],
        utility_a=part.utility_a,
        utility_b=part.utility_b,
    )


def run_simultaneous(
    scn: Scenario, strict: bool = True, caches: dict | None = None
) -> NegotiationOutcome:
    """Negotiate every agenda partition in parallel, each from round 1.

    Partitions are independent package deals with independent belief states.
    """
    parts = []
    for issues in scn.partition:
        sub = scn.restrict(issues)
        parts.append(
            _negotiate(sub, 1, issues, strict=strict, caches=_cache_for(caches, issues))
        )
    return NegotiationOutcome(
        procedure="simultaneous",
        partitions=parts,
        utility_a=sum(p.utility_a for p in parts),
        utility_b=sum(p.utility_b for p in parts),
    )


def run_sequential(
    scn: Scenario,
    strict: bool = True,
    caches: dict | None = None,
    restart_parity: bool = False,
) -> NegotiationOutcome:
    """Negotiate the agenda partitions one after another.

    Partition ``c + 1`` starts one round after partition ``c`` settles and
    faces pies already shrunken to that round.  Beliefs reset per partition.
    By default the turn order keeps the global round parity; with
    ``restart_parity`` the scenario's first mover opens every partition.
    """
    parts = []
    start = 1
    other = "b" if scn.first_mover == "a" else "a"
    for issues in scn.partition:
        sub = scn.restrict(issues)
        if restart_parity and start % 2 == 0:
            sub = replace(sub, first_mover=other)
        key = issues if not restart_parity else issues + (start % 2,)
        part = _negotiate(sub, start, issues, strict=strict,
                          caches=_cache_for(caches, key))
        parts.append(part)
        if part.agreement_time is not None:
            start = part.agreement_time + 1
        else:
            start = scn.n + 1
    return NegotiationOutcome(
        procedure="sequential",
        partitions=parts,
        utility_a=sum(p.utility_a for p in parts),
        utility_b=sum(p.utility_b for p in parts),
    )


_RUNNERS = {
    "package": run_package_deal,
    "simultaneous": run_simultaneous,
    "sequential": run_sequential,
}


def expected_utilities(
    scn: Scenario,
    procedure: str,
    strict: bool = True,
    caches: dict | None = None,
    **runner_kwargs,
) -> tuple[float, float, dict]:
    """Ex-ante expected utilities: enumerate true-type pairs under the priors.

    A single simulated run realises only one type pair, so the expectation
    is taken by simulating every pair with positive prior probability and
    weighting the realised utilities.  Returns the per-agent expectations
    and the outcome of every pair (keyed by ``(type_a, type_b)``).
    """
    runner = _RUNNERS[procedure]
    pa, pb = scn.types.pa, scn.types.pb
    total_a = 0.0
    total_b = 0.0
    outcomes: dict[tuple[int, int], NegotiationOutcome] = {}
    for i in np.flatnonzero(pa > 0.0):
        for e in np.flatnonzero(pb > 0.0):
            pair_scn = replace(scn, true_a=int(i), true_b=int(e))
            out = runner(pair_scn, strict=strict, caches=caches, **runner_kwargs)
            outcomes[(int(i), int(e))] = out
            w = float(pa[i] * pb[e])
            total_a += w * out.utility_a
            total_b += w * out.utility_b
    return total_a, total_b, outcomes


def combined_allocation(
    outcome: NegotiationOutcome, m: int
) -> tuple[np.ndarray, np.ndarray]:
    """Merge per-partition packages into full-length keep shares and pies.

    Issues whose partition never settled contribute zero pie (nothing was
    divided), so they cannot affect the Pareto check.
    """
    x = np.zeros(m)
    pie = np.zeros(m)
    for part in outcome.partitions:
        if part.package is None:
            continue
        for k, c in enumerate(part.issues):
            x[c] = part.package.x[k]
            pie[c] = part.package.x[k] + part.package.y[k]
    return x, pie


def replay_consistent(outcome: NegotiationOutcome, scn: Scenario) -> bool:
    """Re-evaluate every transcript offer against the acceptance rule."""
    K = scn.types.K
    for part in outcome.partitions:
        for ev in part.transcript:
            receiver = "b" if ev.offerer == "a" else "a"
            e = scn.true_b if receiver == "b" else scn.true_a
            cols = list(part.issues)
            shares = ev.package.y if receiver == "b" else ev.package.x
            u = float(K[e, cols] @ shares)
            if ev.accepted != (u >= ev.receiver_continuation - TOL):
                return False
    return True


@dataclass
class ComparisonReport:
    """Side-by-side verdicts for the three procedures, same first mover.

    ``expected`` carries the ex-ante utilities used for the dominance
    verdicts (these equal the realised utilities under complete
    information); ``pareto`` judges each realised outcome against exact
    reallocation of the pies it actually divided.  Condition verdicts use
    ``None`` for settings where a condition does not apply.
    """

    setting: str
    first_mover: str
    partition: tuple[tuple[int, ...], ...]
    turn_parity: str
    outcomes: dict[str, NegotiationOutcome]
    realized: dict[tuple[str, str], float]
    expected: dict[tuple[str, str], float]
    dominance: dict[str, bool]
    pareto: dict[str, bool]
    conditions: dict[str, bool | None]

    def dominance_holds(self) -> bool:
        return all(self.dominance.values())


def compare_procedures(
    scn: Scenario, strict: bool = True, restart_parity: bool = False
) -> ComparisonReport:
    """Run all three procedures and assemble the comparison verdicts."""
    caches: dict = {}
    realized: dict[tuple[str, str], float] = {}
    expected: dict[tuple[str, str], float] = {}
    outcomes: dict[str, NegotiationOutcome] = {}
    for proc in PROCEDURES:
        kw = {"restart_parity": restart_parity} if proc == "sequential" else {}
        ea, eb, pair_outcomes = expected_utilities(
            scn, proc, strict=strict, caches=caches, **kw
        )
        out = pair_outcomes[(scn.true_a, scn.true_b)]
        outcomes[proc] = out
        realized[(proc, "a")] = out.utility_a
        realized[(proc, "b")] = out.utility_b
        expected[(proc, "a")] = ea
        expected[(proc, "b")] = eb

    dominance = {}
    for agent in ("a", "b"):
        dominance[f"package_ge_simultaneous_{agent}"] = (
            expected[("package", agent)] >= expected[("simultaneous", agent)] - TOL
        )
        dominance[f"simultaneous_ge_sequential_{agent}"] = (
            expected[("simultaneous", agent)] >= expected[("sequential", agent)] - TOL
        )

    wa, wb = scn.weights("a"), scn.weights("b")
    pareto = {}
    for proc, out in outcomes.items():
        x, pie = combined_allocation(out, scn.m)
        pareto[proc] = pareto_optimal_shares(x, wa, wb, pie)

    conditions: dict[str, bool | None] = {
        "c1": None, "c2": None, "c3": None, "c4": None, "c5": None,
    }
    if scn.setting == "CI":
        conditions["c1"] = condition_c1(wa, wb)
        conditions["c2"] = condition_c2(wa, wb, scn.partition)
    else:
        conditions["c3"] = condition_c3(scn.types)
        tabs = compute_eu_tables(
            scn, 1, from_prior(scn.types.pa), from_prior(scn.types.pb)
        )
        conditions["c4"] = condition_c4(tabs)
        conditions["c5"] = condition_c5(scn)

    return ComparisonReport(
        setting=scn.setting,
        first_mover=scn.first_mover,
        partition=scn.partition,
        turn_parity="restart" if restart_parity else "global",
        outcomes=outcomes,
        realized=realized,
        expected=expected,
        dominance=dominance,
        pareto=pareto,
        conditions=conditions,
    )
