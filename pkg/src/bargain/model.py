"""Domain types for bilateral multi-issue bargaining scenarios.

A scenario fixes everything the engine needs: the issues and their discount
factors, the deadline, the information setting, the shared type space with
priors, the agents' true types, and the agenda partition used by the
simultaneous and sequential procedures.  Issues are split-the-pie divisions:
at round ``t`` issue ``c`` has size ``delta_c ** (t - 1)`` and an offer gives
agent a the shares ``x`` and agent b the remainder ``y``.

Types and issues are 0-indexed throughout the engine; round numbers ``t``
start at 1.  The scenario file format (see :mod:`bargain.cli`) is 1-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from ._kernels import TOL

#: the five information settings
SETTINGS = ("CI", "SU_I", "AU_I", "SU_D", "AU_D")

#: settings in which issue weights must be strictly positive
POSITIVE_SETTINGS = ("CI", "SU_I", "AU_I")

#: settings where agent a knows b's true type
ASYMMETRIC_SETTINGS = ("AU_I", "AU_D")


class ValidationError(ValueError):
    """A scenario field violates an invariant."""

    def __init__(self, fieldname: str, message: str):
        self.fieldname = fieldname
        super().__init__(f"{fieldname}: {message}")


@dataclass(frozen=True)
class TypeSpace:
    """Shared candidate weight vectors plus per-agent priors over them.

    ``K[i, c]`` is the weight type ``i`` places on issue ``c``.  Entries must
    be strictly positive in the independent-issue settings; interdependent
    settings store the signed effective weights here.
    """

    K: np.ndarray
    pa: np.ndarray
    pb: np.ndarray

    @property
    def r(self) -> int:
        return self.K.shape[0]

    @property
    def m(self) -> int:
        return self.K.shape[1]


@dataclass(frozen=True)
class Package:
    """A per-issue division offered at round ``t``: a gets ``x``, b gets ``y``."""

    t: int
    x: np.ndarray
    y: np.ndarray

    def shares_close(self, other: "Package", tol: float = TOL) -> bool:
        return bool(np.all(np.abs(self.x - other.x) <= tol))


@dataclass(frozen=True)
class BeliefState:
    """Posterior over the opponent's type; zeros mark excluded types."""

    posterior: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.posterior > 0.0)

    def key(self) -> bytes:
        return np.round(self.posterior, 12).tobytes()


class EmptySupportError(ValueError):
    """A belief update removed every remaining type."""


def point_mass(r: int, index: int) -> BeliefState:
    p = np.zeros(r)
    p[index] = 1.0
    return BeliefState(p)


def from_prior(prior: np.ndarray) -> BeliefState:
    return BeliefState(prior.copy())


@dataclass(frozen=True)
class Scenario:
    """A full bargaining problem instance (validated via :func:`validate_scenario`)."""

    m: int
    n: int
    delta: np.ndarray
    setting: str
    first_mover: str
    types: TypeSpace
    true_a: int
    true_b: int
    partition: tuple[tuple[int, ...], ...]
    chi: np.ndarray | None = None
    raw_K: np.ndarray | None = field(default=None, repr=False)

    @property
    def r(self) -> int:
        return self.types.r

    def pie(self, t: int) -> np.ndarray:
        return self.delta ** (t - 1)

    def weights(self, agent: str) -> np.ndarray:
        """The true weight vector of an agent."""
        idx = self.true_a if agent == "a" else self.true_b
        return self.types.K[idx]

    def restrict(self, issues: tuple[int, ...]) -> "Scenario":
        """Project the scenario onto a subset of issues (for one partition).

        Priors, types, the deadline and the turn order are unchanged; only
        the weight columns and discount factors are sliced.
        """
        cols = np.asarray(issues, dtype=int)
        sub = TypeSpace(
            K=self.types.K[:, cols].copy(),
            pa=self.types.pa,
            pb=self.types.pb,
        )
        return replace(
            self,
            m=len(issues),
            delta=self.delta[cols].copy(),
            types=sub,
            partition=(tuple(range(len(issues))),),
            chi=None,
            raw_K=None,
        )


def pie_size(c: int, t: int, delta: np.ndarray) -> float:
    """Size of issue ``c``'s pie at round ``t`` (1 at t=1, shrinking after)."""
    if t < 1:
        raise ValueError(f"round must be >= 1, got {t}")
    return float(delta[c] ** (t - 1))


def cumulative_utility(
    agent: str,
    type_index: int,
    pkg: Package,
    types: TypeSpace,
    t: int,
    n: int,
) -> float:
    """Weighted sum of an agent's shares, or 0 once the deadline has passed."""
    if t > n:
        return 0.0
    shares = pkg.x if agent == "a" else pkg.y
    return float(types.K[type_index] @ shares)


def effective_weights(K: np.ndarray, chi: np.ndarray) -> np.ndarray:
    """Fold issue interdependence into signed per-issue weights.

    With interdependence, type ``i``'s utility from issue ``c`` is
    ``K[i, c] * s_c + sum_j chi[i, c, j] * (s_c - s_j)`` over its shares
    ``s``.  Summing over issues this collapses to a plain weighted sum with
    weights ``K[i, c] + rowsum_c(chi[i]) - colsum_c(chi[i])``, which is what
    the solver machinery consumes.
    """
    K = np.asarray(K, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if chi.ndim == 2:
        chi = np.broadcast_to(chi, (K.shape[0],) + chi.shape)
    if chi.shape != (K.shape[0], K.shape[1], K.shape[1]):
        raise ValidationError(
            "interdependence",
            f"expected per-type {K.shape[1]}x{K.shape[1]} matrices, got {chi.shape}",
        )
    row = chi.sum(axis=2)
    col = chi.sum(axis=1)
    return K + row - col


def interdependent_utility(
    K_row: np.ndarray, chi_mat: np.ndarray, shares: np.ndarray
) -> float:
    """Direct evaluation of the per-issue interdependent utility (oracle for
    :func:`effective_weights`)."""
    total = 0.0
    m = len(shares)
    for c in range(m):
        total += K_row[c] * shares[c]
        for j in range(m):
            total += chi_mat[c, j] * (shares[c] - shares[j])
    return float(total)


def ratios_equal(n1: float, d1: float, n2: float, d2: float) -> bool:
    """Exact equality of ``n1/d1`` and ``n2/d2`` on stored binary64 values."""
    return Fraction(n1) * Fraction(d2) == Fraction(n2) * Fraction(d1)


def _check_partition(partition, m: int) -> tuple[tuple[int, ...], ...]:
    seen: set[int] = set()
    clean = []
    for k, part in enumerate(partition):
        issues = tuple(int(c) for c in part)
        if not issues:
            raise ValidationError("partition", f"partition {k + 1} is empty")
        for c in issues:
            if not 0 <= c < m:
                raise ValidationError(
                    "partition", f"issue {c + 1} out of range 1..{m}"
                )
            if c in seen:
                raise ValidationError(
                    "partition", f"issue {c + 1} appears in more than one partition"
                )
            seen.add(c)
        clean.append(issues)
    if seen != set(range(m)):
        missing = sorted(set(range(m)) - seen)
        raise ValidationError(
            "partition",
            "partitions do not cover all issues; missing "
            + ", ".join(str(c + 1) for c in missing),
        )
    return tuple(clean)


def _check_prob(name: str, p: np.ndarray, r: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (r,):
        raise ValidationError(name, f"expected {r} probabilities, got {p.shape}")
    if np.any(p < 0):
        raise ValidationError(name, "probabilities must be nonnegative")
    s = float(p.sum())
    if abs(s - 1.0) > TOL:
        raise ValidationError(name, f"probabilities sum to {s:g}")
    return p / s


def validate_scenario(scn: Scenario) -> Scenario:
    """Check every invariant, normalise priors, and fold interdependence.

    Returns a new validated :class:`Scenario` whose ``types.K`` holds the
    effective (possibly signed) weights actually used by the solvers.
    """
    if scn.m < 1:
        raise ValidationError("issues", f"issue count must be positive, got {scn.m}")
    if scn.n < 1:
        raise ValidationError("deadline", f"deadline must be positive, got {scn.n}")
    delta = np.asarray(scn.delta, dtype=float)
    if delta.shape != (scn.m,):
        raise ValidationError(
            "discount", f"expected {scn.m} discount factors, got {delta.shape}"
        )
    if np.any(delta <= 0) or np.any(delta > 1):
        raise ValidationError("discount", "discount factors must lie in (0, 1]")
    if scn.setting not in SETTINGS:
        raise ValidationError(
            "setting", f"{scn.setting!r} is not one of {', '.join(SETTINGS)}"
        )
    if scn.first_mover not in ("a", "b"):
        raise ValidationError("first_mover", "must be 'a' or 'b'")

    K = np.asarray(scn.types.K, dtype=float)
    if K.ndim != 2 or K.shape[1] != scn.m:
        raise ValidationError("K", f"expected r x {scn.m} weight matrix, got {K.shape}")
    r = K.shape[0]
    for name, idx in (("true_a", scn.true_a), ("true_b", scn.true_b)):
        if not 0 <= idx < r:
            raise ValidationError(name, f"type index {idx + 1} out of range 1..{r}")

    pa = _check_prob("Pa", scn.types.pa, r)
    pb = _check_prob("Pb", scn.types.pb, r)

    chi = scn.chi
    raw_K = None
    if chi is not None:
        raw_K = K.copy()
        K = effective_weights(K, chi)
        chi = np.asarray(chi, dtype=float)

    if scn.setting in POSITIVE_SETTINGS:
        if np.any(K <= 0):
            raise ValidationError(
                "K", f"weights must be strictly positive in setting {scn.setting}"
            )
    if scn.setting == "CI":
        # one code path for all settings: complete information is encoded as
        # point-mass beliefs on the true types
        if pa[scn.true_a] < 1.0 - TOL or pb[scn.true_b] < 1.0 - TOL:
            raise ValidationError(
                "Pa", "CI requires point-mass priors on the true types"
            )

    partition = _check_partition(scn.partition, scn.m)

    return Scenario(
        m=scn.m,
        n=scn.n,
        delta=delta,
        setting=scn.setting,
        first_mover=scn.first_mover,
        types=TypeSpace(K=K, pa=pa, pb=pb),
        true_a=scn.true_a,
        true_b=scn.true_b,
        partition=partition,
        chi=chi,
        raw_K=raw_K,
    )


def make_package(t: int, x: np.ndarray, delta: np.ndarray) -> Package:
    """Build a package at round ``t``, giving b the rest of each pie."""
    x = np.asarray(x, dtype=float)
    pie = delta ** (t - 1)
    return Package(t=t, x=x, y=pie - x)
