"""Hot numeric kernels, JIT-compiled when numba is available.

Three loops dominate runtime: the greedy concession sweep that solves the
one-constraint tradeoff program, the expected-value scan used while filling
the backward-induction tables, and the grid enumerations behind the
brute-force verifiers.  Each has a single nopython-compatible implementation
here plus a vectorised numpy fallback.

Set ``BARGAIN_NO_NUMBA=1`` to force the numpy fallbacks (same results;
used as the baseline in ``benchmarks/``).
"""

from __future__ import annotations

import os

import numpy as np

#: global comparison tolerance for utilities and shares
TOL = 1e-9

_env = os.environ.get("BARGAIN_NO_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _env not in {"1", "true", "yes", "on"}

if NUMBA_REQUESTED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def _jit(fn):
    if NUMBA_ENABLED:
        return njit(cache=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# tradeoff sweep
# ---------------------------------------------------------------------------


def _sweep_impl(own, opp, pie, target, order):
    # Greedy concession sweep for:  max own.a  s.t.  opp.(pie - a) = target,
    # 0 <= a <= pie.  Start from the allocation that maximises opp.a
    # (keep every issue the opponent values, concede every issue it dislikes),
    # then walk `order` (exchange-ratio order) flipping issues until the
    # constraint is met; the last flip may be fractional.
    m = own.shape[0]
    a = np.empty(m)
    cur = 0.0
    w = 0.0
    for c in range(m):
        if opp[c] > 0.0:
            a[c] = pie[c]
            cur += opp[c] * pie[c]
        elif opp[c] < 0.0:
            a[c] = 0.0
        else:
            a[c] = pie[c] if own[c] >= 0.0 else 0.0
        w += opp[c] * pie[c]
    w -= target  # required value of opp.a
    for k in range(order.shape[0]):
        gap = cur - w
        if gap <= 0.0:
            break
        c = order[k]
        full = abs(opp[c]) * pie[c]
        if full <= 0.0:
            continue
        if full <= gap:
            if opp[c] > 0.0:
                a[c] = 0.0
            else:
                a[c] = pie[c]
            cur -= full
        else:
            if opp[c] > 0.0:
                a[c] = pie[c] - gap / opp[c]
            else:
                a[c] = -gap / opp[c]
            break
    return a


sweep = _jit(_sweep_impl)


# ---------------------------------------------------------------------------
# expected value of an offer against a belief over receiver types
# ---------------------------------------------------------------------------


def _expected_value_impl(keep, give, own_w, recv_rows, thresholds, post, reject_value):
    # Offerer keeps `keep`, the receiver gets `give`.  Each receiver type s
    # accepts iff its utility clears its continuation threshold; otherwise
    # the offerer falls back to `reject_value`.
    m = keep.shape[0]
    own_util = 0.0
    for c in range(m):
        own_util += own_w[c] * keep[c]
    ev = 0.0
    for s in range(recv_rows.shape[0]):
        u = 0.0
        for c in range(m):
            u += recv_rows[s, c] * give[c]
        if u >= thresholds[s] - TOL:
            ev += post[s] * own_util
        else:
            ev += post[s] * reject_value
    return ev


expected_value = _jit(_expected_value_impl)


# ---------------------------------------------------------------------------
# grid enumerations (oracles)
# ---------------------------------------------------------------------------


def _grid_points(pie, step):
    counts = np.empty(pie.shape[0], np.int64)
    for c in range(pie.shape[0]):
        counts[c] = int(pie[c] / step + 1e-12) + 1
    return counts


def _grid_tradeoff_impl(own, opp, pie, target, step, band):
    # Exhaustive scan of the share grid; returns the best allocation whose
    # opponent utility sits within `band` of the target.
    m = own.shape[0]
    counts = _grid_points(pie, step)
    idx = np.zeros(m, np.int64)
    best = -1e300
    besta = np.zeros(m)
    found = False
    while True:
        ou = 0.0
        ru = 0.0
        for c in range(m):
            ac = idx[c] * step
            ou += own[c] * ac
            ru += opp[c] * (pie[c] - ac)
        if abs(ru - target) <= band and ou > best:
            best = ou
            found = True
            for c in range(m):
                besta[c] = idx[c] * step
        c = 0
        while c < m:
            idx[c] += 1
            if idx[c] < counts[c]:
                break
            idx[c] = 0
            c += 1
        if c == m:
            break
    return found, best, besta


def _grid_tradeoff_topset_impl(own, opp, pie, target, step, band, slack, cap):
    # Like _grid_tradeoff_impl but returns every feasible grid allocation
    # whose objective is within `slack` of the best (two passes).
    m = own.shape[0]
    counts = _grid_points(pie, step)
    idx = np.zeros(m, np.int64)
    best = -1e300
    found = False
    while True:
        ou = 0.0
        ru = 0.0
        for c in range(m):
            ac = idx[c] * step
            ou += own[c] * ac
            ru += opp[c] * (pie[c] - ac)
        if abs(ru - target) <= band and ou > best:
            best = ou
            found = True
        c = 0
        while c < m:
            idx[c] += 1
            if idx[c] < counts[c]:
                break
            idx[c] = 0
            c += 1
        if c == m:
            break
    out = np.zeros((cap, m))
    nout = 0
    if not found:
        return nout, best, out
    for c in range(m):
        idx[c] = 0
    while True:
        ou = 0.0
        ru = 0.0
        for c in range(m):
            ac = idx[c] * step
            ou += own[c] * ac
            ru += opp[c] * (pie[c] - ac)
        if abs(ru - target) <= band and ou >= best - slack and nout < cap:
            for c in range(m):
                out[nout, c] = idx[c] * step
            nout += 1
        c = 0
        while c < m:
            idx[c] += 1
            if idx[c] < counts[c]:
                break
            idx[c] = 0
            c += 1
        if c == m:
            break
    return nout, best, out


def _grid_dominates_impl(keep, wa, wb, pie, step, eps_a, eps_b):
    # True iff some grid allocation weakly dominates `keep` with a strict
    # improvement beyond the grid tolerance for at least one agent.
    m = keep.shape[0]
    ua0 = 0.0
    ub0 = 0.0
    for c in range(m):
        ua0 += wa[c] * keep[c]
        ub0 += wb[c] * (pie[c] - keep[c])
    counts = _grid_points(pie, step)
    idx = np.zeros(m, np.int64)
    while True:
        ua = 0.0
        ub = 0.0
        for c in range(m):
            ac = idx[c] * step
            ua += wa[c] * ac
            ub += wb[c] * (pie[c] - ac)
        if ua >= ua0 - TOL and ub >= ub0 - TOL:
            if ua > ua0 + eps_a or ub > ub0 + eps_b:
                return True
        c = 0
        while c < m:
            idx[c] += 1
            if idx[c] < counts[c]:
                break
            idx[c] = 0
            c += 1
        if c == m:
            break
    return False


def _grid_ci_offer_impl(own, opp, pie, recv_cont, own_reject, recv_reject, step):
    # One period of the discretised backward induction: the offerer scans
    # every grid offer, the receiver accepts exactly when its utility clears
    # its continuation, and a rejected offer yields the continuation pair.
    m = own.shape[0]
    counts = _grid_points(pie, step)
    idx = np.zeros(m, np.int64)
    best_own = -1e300
    best_recv = 0.0
    while True:
        ou = 0.0
        ru = 0.0
        for c in range(m):
            ac = idx[c] * step
            ou += own[c] * ac
            ru += opp[c] * (pie[c] - ac)
        if ru >= recv_cont - 1e-12:
            out_own = ou
            out_recv = ru
        else:
            out_own = own_reject
            out_recv = recv_reject
        if out_own > best_own:
            best_own = out_own
            best_recv = out_recv
        c = 0
        while c < m:
            idx[c] += 1
            if idx[c] < counts[c]:
                break
            idx[c] = 0
            c += 1
        if c == m:
            break
    return best_own, best_recv


# --- numpy fallbacks for the grid scans ------------------------------------


def _grid_allocs(pie, step):
    counts = [int(p / step + 1e-12) + 1 for p in pie]
    axes = [np.arange(k) * step for k in counts]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _grid_tradeoff_numpy(own, opp, pie, target, step, band):
    allocs = _grid_allocs(pie, step)
    ou = allocs @ own
    ru = (pie - allocs) @ opp
    feas = np.abs(ru - target) <= band
    if not feas.any():
        return False, -1e300, np.zeros(len(pie))
    k = np.flatnonzero(feas)[np.argmax(ou[feas])]
    return True, float(ou[k]), allocs[k].copy()


def _grid_tradeoff_topset_numpy(own, opp, pie, target, step, band, slack, cap):
    allocs = _grid_allocs(pie, step)
    ou = allocs @ own
    ru = (pie - allocs) @ opp
    feas = np.abs(ru - target) <= band
    if not feas.any():
        return 0, -1e300, np.zeros((cap, len(pie)))
    best = float(ou[feas].max())
    keep = feas & (ou >= best - slack)
    rows = allocs[keep][:cap]
    out = np.zeros((cap, len(pie)))
    out[: len(rows)] = rows
    return len(rows), best, out


def _grid_dominates_numpy(keep, wa, wb, pie, step, eps_a, eps_b):
    ua0 = float(keep @ wa)
    ub0 = float((pie - keep) @ wb)
    allocs = _grid_allocs(pie, step)
    ua = allocs @ wa
    ub = (pie - allocs) @ wb
    weak = (ua >= ua0 - TOL) & (ub >= ub0 - TOL)
    strict = (ua > ua0 + eps_a) | (ub > ub0 + eps_b)
    return bool((weak & strict).any())


def _grid_ci_offer_numpy(own, opp, pie, recv_cont, own_reject, recv_reject, step):
    allocs = _grid_allocs(pie, step)
    ou = allocs @ own
    ru = (pie - allocs) @ opp
    accepted = ru >= recv_cont - 1e-12
    out_own = np.where(accepted, ou, own_reject)
    out_recv = np.where(accepted, ru, recv_reject)
    k = int(np.argmax(out_own))
    return float(out_own[k]), float(out_recv[k])


if NUMBA_ENABLED:
    grid_tradeoff = _jit(_grid_tradeoff_impl)
    grid_tradeoff_topset = _jit(_grid_tradeoff_topset_impl)
    grid_dominates = _jit(_grid_dominates_impl)
    grid_ci_offer = _jit(_grid_ci_offer_impl)
    _grid_points = _jit(_grid_points)  # noqa: F811 - rebind for nopython callers
else:
    grid_tradeoff = _grid_tradeoff_numpy
    grid_tradeoff_topset = _grid_tradeoff_topset_numpy
    grid_dominates = _grid_dominates_numpy
    grid_ci_offer = _grid_ci_offer_numpy


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    own = np.array([1.0, 2.0])
    opp = np.array([2.0, 1.0])
    pie = np.array([1.0, 1.0])
    order = np.array([0, 1], dtype=np.int64)
    sweep(own, opp, pie, 1.5, order)
    expected_value(pie, pie * 0.0, own, opp.reshape(1, 2), np.zeros(1), np.ones(1), 0.0)
    grid_tradeoff(own, opp, pie, 1.5, 0.5, 1.0)
    grid_tradeoff_topset(own, opp, pie, 1.5, 0.5, 1.0, 0.1, 8)
    grid_dominates(pie, own, opp, pie, 0.5, 0.1, 0.1)
    grid_ci_offer(own, opp, pie, 1.0, 0.0, 0.0, 0.5)
