"""Command-line interface: scenario files, reports, sweeps, verification.

Scenario files are sectioned key-value text (1-indexed types and issues)::

    [scenario]
    issues = 3
    deadline = 2
    discount = 0.5, 0.5, 0.5
    setting = CI            # CI, SU_I, AU_I, SU_D or AU_D
    first_mover = a

    [types]
    r = 2
    K = 1, 2, 3; 1, 0.5, 0.25
    Pa = 1, 0
    Pb = 0, 1
    true_a = 1
    true_b = 2

    [agenda]
    partitions = 1, 2 | 3

    [interdependence]     # optional, per-type issue x issue matrices
    chi_type1 = 0, 1, 0; -2, 0, 0; 0, 0, 0

Commands: ``solve``, ``simulate``, ``compare``, ``verify``, ``sweep``.
Exit codes: 0 success, 1 parse/validation error, 2 verification mismatch,
3 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from ._kernels import TOL
from .complete import backward_induction_ci
from .model import (
    SETTINGS,
    Scenario,
    TypeSpace,
    ValidationError,
    from_prior,
    point_mass,
    validate_scenario,
)
from .oracle import (
    BudgetExceededError,
    GridSpec,
    brute_force_equilibrium_ci,
    brute_force_opt_choice,
    brute_force_pareto,
    brute_force_tradeoff,
    ci_value_tolerance,
)
from .procedures import (
    PROCEDURES,
    combined_allocation,
    compare_procedures,
    run_package_deal,
    run_sequential,
    run_simultaneous,
)
from .complete import pareto_optimal_shares
from .tables import compute_eu_tables
from .tradeoff import TradeoffProblem, solve_tradeoff

CSV_HEADER = (
    "scenario_id,procedure,agent,utility,expected_utility,agreement_times,"
    "pareto,c1,c2,c3,c4,c5,first_mover,seed"
)


class ScenarioParseError(ValueError):
    """Malformed scenario file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scenario file parsing
# ---------------------------------------------------------------------------

_SCENARIO_KEYS = {"issues", "deadline", "discount", "setting", "first_mover"}
_TYPES_KEYS = {"r", "K", "Pa", "Pb", "true_a", "true_b"}


def _parse_float(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ScenarioParseError(f"malformed number {text!r}", line) from None


def _parse_int(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioParseError(f"malformed integer {text!r}", line) from None


def _parse_vector(text: str, line: int) -> list[float]:
    return [_parse_float(p.strip(), line) for p in text.split(",") if p.strip() != ""]


def _parse_matrix(text: str, line: int) -> list[list[float]]:
    return [_parse_vector(row, line) for row in text.split(";")]


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario file; raises with the offending line."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ScenarioParseError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if current is None:
            raise ScenarioParseError("key outside any section", lineno)
        if "=" not in line:
            raise ScenarioParseError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in sections[current]:
            raise ScenarioParseError(f"duplicate key {key!r}", lineno)
        sections[current][key] = (value, lineno)

    for name in ("scenario", "types"):
        if name not in sections:
            raise ScenarioParseError(f"missing [{name}] section")
    known = {"scenario", "types", "agenda", "interdependence"}
    for name in sections:
        if name not in known:
            raise ScenarioParseError(f"unknown section [{name}]")

    def take(section: str, key: str, required: bool = True):
        entry = sections.get(section, {}).pop(key, None)
        if entry is None:
            if required:
                raise ScenarioParseError(f"missing key {key!r} in [{section}]")
            return None, None
        return entry

    value, line = take("scenario", "issues")
    m = _parse_int(value, line)
    value, line = take("scenario", "deadline")
    n = _parse_int(value, line)
    value, line = take("scenario", "discount")
    delta = _parse_vector(value, line)
    value, line = take("scenario", "setting")
    setting = value
    if setting not in SETTINGS:
        raise ScenarioParseError(
            f"setting must be one of {', '.join(SETTINGS)}, got {setting!r}", line
        )
    value, line = take("scenario", "first_mover")
    first_mover = value

    value, line = take("types", "r")
    r = _parse_int(value, line)
    value, line = take("types", "K")
    K = _parse_matrix(value, line)
    if len(K) != r or any(len(row) != len(K[0]) for row in K):
        raise ScenarioParseError(f"K must have r={r} equal-length rows", line)
    value, line = take("types", "Pa")
    pa = _parse_vector(value, line)
    value, line = take("types", "Pb")
    pb = _parse_vector(value, line)
    value, line = take("types", "true_a")
    true_a = _parse_int(value, line) - 1
    value, line = take("types", "true_b")
    true_b = _parse_int(value, line) - 1

    if "agenda" in sections:
        value, line = take("agenda", "partitions")
        partition = tuple(
            tuple(_parse_int(p.strip(), line) - 1 for p in part.split(","))
            for part in value.split("|")
        )
    else:
        partition = (tuple(range(m)),)

    chi = None
    if "interdependence" in sections:
        mats = np.zeros((r, m, m))
        for k in range(r):
            value, line = take("interdependence", f"chi_type{k + 1}")
            mat = _parse_matrix(value, line)
            if len(mat) != m or any(len(row) != m for row in mat):
                raise ScenarioParseError(f"chi_type{k + 1} must be {m}x{m}", line)
            mats[k] = mat
        chi = mats

    for name in ("scenario", "types", "agenda", "interdependence"):
        leftovers = sections.get(name, {})
        if leftovers:
            key = next(iter(leftovers))
            raise ScenarioParseError(
                f"unknown key {key!r} in [{name}]", leftovers[key][1]
            )

    scn = Scenario(
        m=m,
        n=n,
        delta=np.asarray(delta, dtype=float),
        setting=setting,
        first_mover=first_mover,
        types=TypeSpace(
            K=np.asarray(K, dtype=float),
            pa=np.asarray(pa, dtype=float),
            pb=np.asarray(pb, dtype=float),
        ),
        true_a=true_a,
        true_b=true_b,
        partition=partition,
        chi=chi,
    )
    return validate_scenario(scn)


def _fmt(x: float) -> str:
    return repr(float(x))


def format_scenario(scn: Scenario) -> str:
    """Serialise a validated scenario (reparsing yields an equal scenario).

    Interdependence is already folded into the weights, so the output always
    carries the effective weight matrix and no [interdependence] section.
    """
    lines = [
        "[scenario]",
        f"issues = {scn.m}",
        f"deadline = {scn.n}",
        "discount = " + ", ".join(_fmt(d) for d in scn.delta),
        f"setting = {scn.setting}",
        f"first_mover = {scn.first_mover}",
        "",
        "[types]",
        f"r = {scn.r}",
        "K = " + "; ".join(
            ", ".join(_fmt(v) for v in row) for row in scn.types.K
        ),
        "Pa = " + ", ".join(_fmt(v) for v in scn.types.pa),
        "Pb = " + ", ".join(_fmt(v) for v in scn.types.pb),
        f"true_a = {scn.true_a + 1}",
        f"true_b = {scn.true_b + 1}",
        "",
        "[agenda]",
        "partitions = " + " | ".join(
            ", ".join(str(c + 1) for c in part) for part in scn.partition
        ),
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# deterministic random scenarios
# ---------------------------------------------------------------------------


def random_scenario(rng: np.random.Generator, setting: str | None = None) -> Scenario:
    """Draw one validated scenario.

    Ranges: m in 1..5, n in 1..6, r in 1..3, discounts in [0.3, 1], weights
    in [0.1, 10] (positive settings) or [-5, 10] (interdependent settings),
    priors from normalised uniform draws.  Complete information uses two
    point-mass types so the agents' weight vectors can differ.
    """
    if setting is None:
        setting = str(rng.choice(SETTINGS))
    m = int(rng.integers(1, 6))
    n = int(rng.integers(1, 7))
    delta = rng.uniform(0.3, 1.0, m)
    if setting == "CI":
        r = 2
        K = rng.uniform(0.1, 10.0, (r, m))
        pa = np.array([1.0, 0.0])
        pb = np.array([0.0, 1.0])
        true_a, true_b = 0, 1
    else:
        r = int(rng.integers(1, 4))
        if setting in ("SU_D", "AU_D"):
            K = rng.uniform(-5.0, 10.0, (r, m))
        else:
            K = rng.uniform(0.1, 10.0, (r, m))
        pa = rng.uniform(0.1, 1.0, r)
        pa = pa / pa.sum()
        pb = rng.uniform(0.1, 1.0, r)
        pb = pb / pb.sum()
        true_a = int(rng.integers(0, r))
        true_b = int(rng.integers(0, r))
    first_mover = str(rng.choice(["a", "b"]))
    if m == 1:
        partition = ((0,),)
    else:
        mu = int(rng.integers(2, m + 1))
        issues = list(rng.permutation(m))
        cuts = sorted(rng.choice(np.arange(1, m), size=mu - 1, replace=False).tolist())
        bounds = [0] + cuts + [m]
        partition = tuple(
            tuple(int(c) for c in issues[lo:hi])
            for lo, hi in zip(bounds[:-1], bounds[1:])
        )
    scn = Scenario(
        m=m,
        n=n,
        delta=delta,
        setting=setting,
        first_mover=first_mover,
        types=TypeSpace(K=K, pa=pa, pb=pb),
        true_a=true_a,
        true_b=true_b,
        partition=partition,
    )
    return validate_scenario(scn)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _fmt_times(outcome) -> str:
    return ";".join(
        "none" if t is None else str(t) for t in outcome.agreement_times
    )


def _verdict(v: bool | None) -> str:
    if v is None:
        return "n/a"
    return "true" if v else "false"


def comparison_rows(scenario_id: int, report, seed: int) -> list[str]:
    """CSV rows (fixed order) for one compared scenario."""
    rows = []
    cond = report.conditions
    for proc in PROCEDURES:
        out = report.outcomes[proc]
        for agent in ("a", "b"):
            rows.append(",".join([
                str(scenario_id),
                proc,
                agent,
                _fmt(report.realized[(proc, agent)]),
                _fmt(report.expected[(proc, agent)]),
                _fmt_times(out),
                _verdict(report.pareto[proc]),
                _verdict(cond["c1"]),
                _verdict(cond["c2"]),
                _verdict(cond["c3"]),
                _verdict(cond["c4"]),
                _verdict(cond["c5"]),
                report.first_mover,
                str(seed),
            ]))
    return rows


def _pkg_str(pkg, issues=None) -> str:
    pairs = []
    for k in range(len(pkg.x)):
        label = f"issue {issues[k] + 1}" if issues is not None else f"issue {k + 1}"
        pairs.append(f"{label}: [{pkg.x[k]:.6g}, {pkg.y[k]:.6g}]")
    return "; ".join(pairs)


def print_solve(scn: Scenario, out) -> None:
    if scn.setting == "CI":
        eq = backward_induction_ci(
            scn.weights("a"), scn.weights("b"), scn.delta, scn.n,
            first_mover=scn.first_mover,
        )
        out.write(f"complete-information equilibrium, first mover {scn.first_mover}\n")
        for t in sorted(eq.packages):
            pkg = eq.packages[t]
            out.write(
                f"t={t} offer {_pkg_str(pkg)}  UA={eq.ua[t]:.6g} UB={eq.ub[t]:.6g}\n"
            )
        out.write(
            f"agreement at t={eq.agreement_time}: utilities "
            f"a={eq.utility_a:.6g}, b={eq.utility_b:.6g}\n"
        )
        return
    tabs = compute_eu_tables(
        scn, 1, from_prior(scn.types.pa), from_prior(scn.types.pb)
    )
    out.write(f"expected-utility tables, first mover {scn.first_mover}\n")
    for t in range(1, scn.n + 1):
        side = tabs.offerer_at(t)
        out.write(f"t={t} ({side} offers)\n")
        off_o = tabs.eua_o if side == "a" else tabs.eub_o
        opt = tabs.opta if side == "a" else tabs.optb
        pkgs = tabs.pkg_a if side == "a" else tabs.pkg_b
        for i in range(scn.r):
            if opt[i, t] < 0:
                continue
            vals = ", ".join(
                f"EU({i + 1},{j + 1})={off_o[i, j, t]:.6g}"
                for j in range(scn.r)
                if not np.isnan(off_o[i, j, t])
            )
            out.write(f"  type {i + 1}: {vals}  OPT={opt[i, t] + 1}\n")
            j = int(opt[i, t])
            keep = pkgs[(i, j, t)]
            pie = tabs.pie_at[t]
            x = keep if side == "a" else pie - keep
            out.write(
                "    offer "
                + "; ".join(
                    f"issue {c + 1}: [{x[c]:.6g}, {pie[c] - x[c]:.6g}]"
                    for c in range(scn.m)
                )
                + "\n"
            )


def print_simulate(scn: Scenario, procedure: str, strict: bool, out) -> None:
    runner = {
        "package": run_package_deal,
        "simultaneous": run_simultaneous,
        "sequential": run_sequential,
    }[procedure]
    outcome = runner(scn, strict=strict)
    out.write(
        f"{procedure} procedure, first mover {scn.first_mover}, "
        f"true types a={scn.true_a + 1}, b={scn.true_b + 1}\n"
    )
    for part in outcome.partitions:
        issues = ", ".join(str(c + 1) for c in part.issues)
        out.write(f"partition [{issues}] starting t={part.start}\n")
        for ev in part.transcript:
            verdict = "accepted" if ev.accepted else "rejected"
            out.write(
                f"  t={ev.t} {ev.offerer} offers {_pkg_str(ev.package, part.issues)}"
                f" (assuming type {ev.assumed_type + 1}) -> {verdict}\n"
            )
        if part.agreement_time is None:
            out.write("  no agreement (conflict outcome)\n")
        else:
            out.write(
                f"  agreement at t={part.agreement_time} "
                f"(bounds [{part.earliest}, {part.latest}])\n"
            )
    out.write(
        f"utilities: a={outcome.utility_a:.9g}, b={outcome.utility_b:.9g}\n"
    )


def print_compare(report, out) -> None:
    out.write(
        f"setting {report.setting}, first mover {report.first_mover}, "
        f"turn parity {report.turn_parity}\n"
    )
    out.write(
        f"{'procedure':<14}{'util a':>12}{'util b':>12}"
        f"{'exp a':>12}{'exp b':>12}  {'times':<10}{'pareto':<8}\n"
    )
    for proc in PROCEDURES:
        outm = report.outcomes[proc]
        out.write(
            f"{proc:<14}"
            f"{report.realized[(proc, 'a')]:>12.6g}"
            f"{report.realized[(proc, 'b')]:>12.6g}"
            f"{report.expected[(proc, 'a')]:>12.6g}"
            f"{report.expected[(proc, 'b')]:>12.6g}  "
            f"{_fmt_times(outm):<10}"
            f"{_verdict(report.pareto[proc]):<8}\n"
        )
    for key, value in report.dominance.items():
        out.write(f"dominance {key}: {_verdict(value)}\n")
    for key in ("c1", "c2", "c3", "c4", "c5"):
        out.write(f"condition {key}: {_verdict(report.conditions[key])}\n")


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def run_verify(scn: Scenario, step: float, out) -> int:
    """Cross-check the exact engine against the grid oracles; 0 iff all pass."""
    grid = GridSpec(step=step)
    failures = 0

    def report(name: str, ok: bool | None, detail: str = ""):
        nonlocal failures
        if ok is None:
            out.write(f"SKIP {name} ({detail})\n")
        elif ok:
            out.write(f"PASS {name}\n")
        else:
            failures += 1
            out.write(f"FAIL {name} ({detail})\n")

    # round-1 tradeoff problems against the grid search
    if scn.m <= 4 and scn.n > 1:
        tabs = compute_eu_tables(
            scn, 1, from_prior(scn.types.pa), from_prior(scn.types.pb)
        )
        side = tabs.offerer_at(1)
        ok = True
        detail = ""
        for i in range(scn.r):
            for j in range(scn.r):
                own = scn.types.K[i]
                opp = scn.types.K[j]
                target = tabs.receiver_value("b" if side == "a" else "a", j, 1)
                problem = TradeoffProblem(own, opp, scn.pie(1), target)
                exact = float(own @ solve_tradeoff(problem))
                try:
                    _, best = brute_force_tradeoff(problem, grid)
                except Exception as exc:  # no feasible grid point
                    report("tradeoff-vs-grid", None, str(exc))
                    ok = None
                    break
                slack = grid.utility_slack(own) + grid.band(opp) * _ratio_bound(own, opp)
                if exact < best - slack:
                    ok = False
                    detail = f"exact {exact:g} < grid {best:g} - {slack:g}"
                    break
            if ok is not True:
                break
        if ok is not None:
            report("tradeoff-vs-grid", ok, detail)
    else:
        report("tradeoff-vs-grid", None, "needs m <= 4 and n > 1")

    # complete-information equilibrium against discretised induction
    if scn.setting == "CI" and scn.m <= 3 and scn.n <= 4:
        eq = backward_induction_ci(
            scn.weights("a"), scn.weights("b"), scn.delta, scn.n,
            first_mover=scn.first_mover,
        )
        va, vb = brute_force_equilibrium_ci(
            scn.weights("a"), scn.weights("b"), scn.delta, scn.n, grid,
            first_mover=scn.first_mover,
        )
        tol = ci_value_tolerance(scn.weights("a"), scn.weights("b"), scn.n, grid)
        ok = abs(eq.utility_a - va) <= tol and abs(eq.utility_b - vb) <= tol
        report(
            "ci-equilibrium-vs-grid", ok,
            f"exact ({eq.utility_a:g}, {eq.utility_b:g}) vs "
            f"grid ({va:g}, {vb:g}), tol {tol:g}",
        )
    else:
        report("ci-equilibrium-vs-grid", None, "needs CI, m <= 3, n <= 4")

    # Pareto check of the realised package-deal outcome
    if scn.m <= 4:
        outcome = run_package_deal(scn)
        x, pie = combined_allocation(outcome, scn.m)
        exact = pareto_optimal_shares(x, scn.weights("a"), scn.weights("b"), pie)
        gridv = brute_force_pareto(
            x, scn.weights("a"), scn.weights("b"), pie, grid
        )
        report(
            "pareto-vs-grid", exact == gridv,
            f"exact {exact} vs grid {gridv}",
        )
    else:
        report("pareto-vs-grid", None, "needs m <= 4")

    # optimal-choice tables against direct-expectation grid recursion
    if scn.setting != "CI" and scn.r <= 3 and scn.n <= 4 and scn.m <= 3:
        try:
            oracle = brute_force_opt_choice(scn, grid)
        except BudgetExceededError as exc:
            oracle = None
            report("opt-choice-vs-grid", None, str(exc))
        if oracle is not None:
            if oracle.fragile:
                report("opt-choice-vs-grid", None, "grid-fragile instance")
            else:
                beliefs_b = (
                    point_mass(scn.r, scn.true_b)
                    if scn.setting in ("AU_I", "AU_D")
                    else from_prior(scn.types.pb)
                )
                tabs = compute_eu_tables(
                    scn, 1, from_prior(scn.types.pa), beliefs_b
                )
                ok = bool(
                    np.array_equal(tabs.opta[:, 1:scn.n + 1], oracle.opta[:, 1:scn.n + 1])
                    and np.array_equal(
                        tabs.optb[:, 1:scn.n + 1], oracle.optb[:, 1:scn.n + 1]
                    )
                )
                report("opt-choice-vs-grid", ok, "OPT tables differ")
    else:
        report("opt-choice-vs-grid", None, "needs uncertainty, r <= 3, n <= 4, m <= 3")

    return 0 if failures == 0 else 2


def _ratio_bound(own: np.ndarray, opp: np.ndarray) -> float:
    nz = np.abs(opp) > 0
    if not nz.any():
        return 0.0
    return float(np.max(np.abs(own[nz]) / np.abs(opp[nz])))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def run_sweep(count: int, seed: int, out) -> None:
    """Emit the comparison CSV for `count` seeded random scenarios.

    Deterministic: the same (count, seed) produce byte-identical output.
    """
    rng = np.random.default_rng(seed)
    out.write(CSV_HEADER + "\n")
    for scenario_id in range(1, count + 1):
        scn = random_scenario(rng)
        report = compare_procedures(scn)
        for row in comparison_rows(scenario_id, report, seed):
            out.write(row + "\n")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bargain", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command")

    p_solve = sub.add_parser("solve", help="print equilibrium tables")
    p_solve.add_argument("file")

    p_sim = sub.add_parser("simulate", help="print the transcript and outcome")
    p_sim.add_argument("file")
    p_sim.add_argument(
        "--procedure", choices=PROCEDURES, default="package"
    )
    p_sim.add_argument("--lenient", action="store_true",
                       help="reset beliefs instead of aborting off equilibrium")

    p_cmp = sub.add_parser("compare", help="compare the three procedures")
    p_cmp.add_argument("file")
    p_cmp.add_argument("--lenient", action="store_true")

    p_ver = sub.add_parser("verify", help="cross-check against grid oracles")
    p_ver.add_argument("file")
    p_ver.add_argument("--grid", type=float, default=0.05, metavar="STEP")

    p_swp = sub.add_parser("sweep", help="random-scenario comparison CSV")
    p_swp.add_argument("--random", type=int, required=True, metavar="N")
    p_swp.add_argument("--seed", type=int, required=True, metavar="S")
    p_swp.add_argument("--out", default=None, metavar="PATH")

    return parser


def _load(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(str(exc)) from None
    return parse_scenario(text)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3

    try:
        if args.command == "solve":
            print_solve(_load(args.file), sys.stdout)
            return 0
        if args.command == "simulate":
            print_simulate(
                _load(args.file), args.procedure, not args.lenient, sys.stdout
            )
            return 0
        if args.command == "compare":
            report = compare_procedures(_load(args.file), strict=not args.lenient)
            print_compare(report, sys.stdout)
            return 0
        if args.command == "verify":
            return run_verify(_load(args.file), args.grid, sys.stdout)
        if args.command == "sweep":
            if args.out is None:
                run_sweep(args.random, args.seed, sys.stdout)
            else:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    run_sweep(args.random, args.seed, fh)
            return 0
    except (ScenarioParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"usage error: unknown command {args.command!r}", file=sys.stderr)
    return 3


if __name__ == "__main__":
    sys.exit(main())
