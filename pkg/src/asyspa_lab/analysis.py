"""Post-hoc verification of simulated runs.

The central tool is :func:`reconstruct_augmented`, which rewrites an
asynchronous trace as a synchronous, delay-free linear system on
``n * (b + 1)`` nodes (``n`` real nodes plus ``b`` relay copies of each) and
replays it step by step.

Timing convention. A node that updates at instant ``p`` pushes its shares in
augmented step ``p + 1``; a share consumed at instant ``c`` enters relay level
``u = c - p - 1`` (level 0 is the receiving node itself) and moves down one
level per step. With this convention the replay is exact: the augmented state
after step ``k`` holds, in real row ``i``, the value ``x_i`` computed at instant
``k`` (zero if ``i`` was idle) and, in relay rows, every share still waiting to
be consumed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ReconstructionError
from .graph import AsynchronyBounds
from .simulator import METRIC_COLUMNS, MetricRecorder, Trace
from .stepsize import StepsizeSchedule, window_sum


# ------------------------------------------------------------ trace parsing


@dataclass
class _Parsed:
    n: int
    last_k: int
    computed: dict  # p -> {node: record}
    active: dict  # k -> sorted node ids
    sent: dict  # msg id -> (src, p, dst)
    consumed_at: dict  # msg id -> c
    x0: np.ndarray


def _parse(trace: Trace) -> _Parsed:
    computed, active, sent, consumed_at = {}, {}, {}, {}
    last_k = 0
    x0 = [None] * trace.n
    for r in trace.records:
        typ = r["type"]
        if typ == "deliver":
            continue
        p = r["k"]
        computed.setdefault(p, {})[r["node"]] = r
        if typ == "init":
            x0[r["node"]] = r["x"]
        else:
            active.setdefault(p, []).append(r["node"])
            last_k = max(last_k, p)
            for mid in r.get("consumed", ()):
                consumed_at[mid] = p
        nbrs = trace.out_neighbors[r["node"]]
        if r["msgs"] and len(r["msgs"]) != len(nbrs):
            raise ReconstructionError(f"record at k={p} node {r['node']} lists {len(r['msgs'])} messages, "
                                      f"expected one per out-neighbor ({len(nbrs)})")
        for mid, dst in zip(r["msgs"], nbrs):
            sent[mid] = (r["node"], p, dst)
    for k in active:
        active[k].sort()
    if any(v is None for v in x0):
        raise ReconstructionError("trace lacks init records for every node")
    return _Parsed(trace.n, last_k, computed, active, sent, consumed_at, np.array(x0, dtype=np.float64))


# ------------------------------------------------------- augmented system


@dataclass
class AugmentedSystem:
    """Delay-free reformulation of a trace, replayable over steps ``1..steps``.

    ``x_aug[k]``/``y_aug[k]`` are the augmented states before step ``k``;
    ``columns[k]`` maps each column of the step-``k`` matrix to
    ``[(row, weight), ...]``; ``g[k]`` is the subgradient injection (real rows).
    """

    n: int
    b: int
    steps: int
    x_aug: np.ndarray
    y_aug: np.ndarray
    g: np.ndarray
    columns: list
    active: dict
    z_held: np.ndarray  # z_held[k] = latest z of every node after instant k
    residual_x: np.ndarray
    residual_y: np.ndarray
    residual_z: np.ndarray
    column_sum_error: float
    alpha_mismatch: float
    x0: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_aug(self) -> int:
        return self.n * (self.b + 1)

    def matrix(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.steps:
            raise ParameterError(f"step {k} outside 1..{self.steps}")
        a = np.zeros((self.n_aug, self.n_aug))
        for col, entries in enumerate(self.columns[k]):
            for row, w in entries:
                a[row, col] += w
        return a

    @classmethod
    def from_matrices(cls, mats, n: int, b: int = 0) -> "AugmentedSystem":
        """System given directly by its matrices ``A(1), A(2), ...`` (no states)."""
        mats = [np.asarray(a, dtype=np.float64) for a in mats]
        n_aug = n * (b + 1)
        if not mats or any(a.shape != (n_aug, n_aug) for a in mats):
            raise ParameterError(f"need at least one {n_aug}x{n_aug} matrix")
        columns = [None] + [[[(r, float(a[r, c])) for r in np.flatnonzero(a[:, c])] for c in range(n_aug)] for a in mats]
        col_err = max(abs(math.fsum(a[:, c]) - 1.0) for a in mats for c in range(n_aug))
        steps = len(mats)
        z = np.zeros(steps + 1)
        return cls(
            n=n, b=b, steps=steps, x_aug=np.zeros((steps + 2, n_aug, 1)), y_aug=np.zeros((steps + 2, n_aug)),
            g=np.zeros((steps + 1, n, 1)), columns=columns, active={k: list(range(n)) for k in range(1, steps + 1)},
            z_held=np.zeros((steps + 2, n, 1)), residual_x=z, residual_y=z.copy(), residual_z=z.copy(),
            column_sum_error=col_err, alpha_mismatch=0.0, x0=np.zeros((n, 1)),
        )

    @property
    def max_residual(self) -> float:
        return float(max(self.residual_x.max(initial=0.0), self.residual_y.max(initial=0.0)))

    def mass_error(self) -> float:
        """Largest ``|1^T y_aug(k) - n|`` over the replayed steps."""
        sums = np.array([math.fsum(row) for row in self.y_aug[1 : self.steps + 2]])
        return float(np.abs(sums - self.n).max())


def reconstruct_augmented(
    trace: Trace,
    bounds: AsynchronyBounds | None = None,
    objectives=None,
    schedule: StepsizeSchedule | None = None,
    b: int | None = None,
) -> AugmentedSystem:
    """Build the augmented system of an ``asyspa`` or ``naive`` trace and replay it.

    ``b`` (relay levels) defaults to ``bounds.b``. Steps are replayed up to
    ``last_k - b`` so that every share pushed in a replayed step has a known
    consumption instant. Subgradient injections use ``objectives`` when given;
    for ``asyspa`` traces with a ``schedule`` the stepsize is recomputed from the
    recorded counters, otherwise the recorded ``alpha`` is used.
    """
    if trace.algorithm == "synspa":
        raise ReconstructionError("synchronous traces need no augmentation")
    if b is None:
        if bounds is None:
            raise ParameterError("give either bounds or b")
        b = bounds.b
    if objectives is None:
        raise ParameterError("objectives are needed to rebuild the subgradient injections")
    P = _parse(trace)
    n = P.n
    n_aug = n * (b + 1)
    steps = P.last_k - b
    if steps < 1:
        raise ReconstructionError(f"trace with {P.last_k} instants is too short for b={b}")
    m = P.x0.shape[1]

    # consumption lag of every share pushed in a replayed step
    for mid, (src, p, dst) in sorted(P.sent.items()):
        c = P.consumed_at.get(mid)
        if c is None:
            if p + 1 <= steps:
                raise ReconstructionError(f"message {mid} ({src}->{dst}, sent at k={p}) never consumed "
                                          f"within {b} instants")
            continue
        if c - p - 1 > b:
            raise ReconstructionError(f"message {mid} ({src}->{dst}) sent at k={p} consumed at k={c} "
                                      f"needs relay level {c - p - 1} > b={b}")

    x_aug = np.zeros((steps + 2, n_aug, m))
    y_aug = np.zeros((steps + 2, n_aug))
    for p, recs in P.computed.items():
        if p + 1 <= steps + 1:
            for i, r in recs.items():
                x_aug[p + 1, i] = r["x"]
                y_aug[p + 1, i] = r["y"]
    for mid, (src, p, dst) in P.sent.items():
        c = P.consumed_at.get(mid)
        if c is None:
            continue
        r = P.computed[p][src]
        deg = len(trace.out_neighbors[src])
        xs = np.asarray(r["x"]) / deg
        ys = r["y"] / deg
        for kk in range(p + 2, min(c, steps + 1) + 1):
            row = n * (c - kk + 1) + dst
            x_aug[kk, row] += xs
            y_aug[kk, row] += ys

    columns = [None]
    col_err = 0.0
    for k in range(1, steps + 1):
        cols = []
        pushed = P.computed.get(k - 1, {})
        for i in range(n):
            if i in pushed:
                deg = len(trace.out_neighbors[i])
                entries = []
                for mid, dst in zip(pushed[i]["msgs"], trace.out_neighbors[i]):
                    u = P.consumed_at[mid] - k
                    entries.append((n * u + dst, 1.0 / deg))
                cols.append(entries)
            else:
                cols.append([(i, 1.0)])
        for u in range(1, b + 1):
            for j in range(n):
                cols.append([(n * (u - 1) + j, 1.0)])
        for entries in cols:
            col_err = max(col_err, abs(math.fsum(w for _, w in entries) - 1.0))
        columns.append(cols)

    g = np.zeros((steps + 1, n, m))
    alpha_mismatch = 0.0
    recompute = schedule is not None and trace.algorithm == "asyspa"
    for k in range(1, steps + 1):
        for i in P.active.get(k, ()):
            r = P.computed[k][i]
            alpha = r["alpha"]
            if recompute:
                a2 = window_sum(schedule, r["l_before"], r["l_after"] - 1)
                alpha_mismatch = max(alpha_mismatch, abs(a2 - alpha))
                alpha = a2
            g[k, i] = alpha * objectives[i].subgradient(np.asarray(r["z"]))

    z_held = np.zeros((steps + 2, n, m))
    z_cur = np.array([P.computed[0][i]["z"] for i in range(n)], dtype=np.float64)
    z_held[0] = z_cur
    for k in range(1, steps + 2):
        for i in P.active.get(k, ()):
            z_cur[i] = P.computed[k][i]["z"]
        z_held[k] = z_cur

    res_x = np.zeros(steps + 1)
    res_y = np.zeros(steps + 1)
    res_z = np.zeros(steps + 1)
    for k in range(1, steps + 1):
        qx = np.zeros((n_aug, m))
        qy = np.zeros(n_aug)
        for col, entries in enumerate(columns[k]):
            xc, yc = x_aug[k, col], y_aug[k, col]
            for row, w in entries:
                qx[row] += w * xc
                qy[row] += w * yc
        nxt = qx.copy()
        nxt[:n] -= g[k]
        res_x[k] = np.abs(x_aug[k + 1] - nxt).max()
        res_y[k] = np.abs(y_aug[k + 1] - qy).max()
        for i in P.active.get(k, ()):
            z_pred = qx[i] / y_aug[k + 1, i]
            res_z[k] = max(res_z[k], float(np.abs(z_pred - np.asarray(P.computed[k][i]["z"])).max()))

    return AugmentedSystem(
        n=n, b=b, steps=steps, x_aug=x_aug, y_aug=y_aug, g=g, columns=columns, active=P.active,
        z_held=z_held, residual_x=res_x, residual_y=res_y, residual_z=res_z, column_sum_error=col_err,
        alpha_mismatch=alpha_mismatch, x0=P.x0, meta=dict(trace.meta),
    )


# ------------------------------------------------------- graph constants


@dataclass(frozen=True)
class GraphConstants:
    """Contraction constants for ``n`` nodes and ``b`` relay levels.

    ``lam`` rounds to 1.0 in double precision once ``n**(-n*b)`` drops below
    machine epsilon; ``log_lam`` stays negative until ``n**(-n*b)`` itself
    underflows, after which the bound is vacuous anyway.
    """

    n: int
    b: int
    alpha_bound: float
    lam: float
    log_lam: float

    @classmethod
    def compute(cls, n: int, b: int) -> "GraphConstants":
        nb = n * b
        if n < 1 or b < 0:
            raise ParameterError("need n >= 1 and b >= 0")
        if nb == 0:
            # no relays: the bound degenerates to immediate contraction
            return cls(n, b, 8.0 * n, 0.0, -math.inf)
        log_floor = -nb * math.log(n)  # log n^{-nb}
        floor = math.exp(log_floor)
        log_lam = math.log1p(-floor) / nb if floor < 1 else -math.inf
        try:
            alpha = 4.0 * n * (1.0 + n**nb)
        except OverflowError:
            alpha = math.inf
        return cls(n, b, alpha, math.exp(log_lam), log_lam)

    @property
    def row_sum_floor(self) -> float:
        return float(self.n) ** (-self.n * self.b)

    def contraction(self, steps: int) -> float:
        if steps == 0:
            return self.alpha_bound
        return self.alpha_bound * math.exp(self.log_lam * steps)

    def c_eps(self, c: float, alpha: float) -> float:
        """``8 n^{nb+1} c b^alpha / (1 - lam)``."""
        nb = self.n * self.b
        one_minus = -math.expm1(self.log_lam)
        try:
            return 8.0 * self.n ** (nb + 1) * c * self.b**alpha / one_minus
        except (OverflowError, ZeroDivisionError):
            return math.inf


@dataclass
class PhiReport:
    k: int
    t: int
    phi: np.ndarray
    matrix: np.ndarray
    deviation: float
    bound: float
    row_sum_min: float
    row_sum_floor: float

    @property
    def within_bound(self) -> bool:
        return self.deviation <= self.bound

    @property
    def row_sums_ok(self) -> bool:
        return self.row_sum_min >= self.row_sum_floor


def _product(system, k, t):
    phi = np.eye(system.n_aug)
    for s in range(t, k + 1):
        phi = system.matrix(s) @ phi
    return phi


def phi_product(system: AugmentedSystem, k: int, t: int, phi_vec: np.ndarray | None = None) -> PhiReport:
    """``Phi(k, t) = A(k) ... A(t)`` with its distance to the rank-one limit.

    The limit vector defaults to the average column of ``Phi(k, 1)``. The
    deviation is the induced 1-norm (largest absolute column sum). The
    row-sum floor is checked on the real rows of nodes updating at step ``k``
    (idle nodes have empty real rows in this timing convention).
    """
    if not 1 <= t <= k <= system.steps:
        raise ParameterError(f"need 1 <= t <= k <= {system.steps}, got k={k}, t={t}")
    consts = GraphConstants.compute(system.n, system.b)
    mat = _product(system, k, t)
    if phi_vec is None:
        phi_vec = _product(system, k, 1).mean(axis=1)
    dev = float(np.abs(mat - phi_vec[:, None]).sum(axis=0).max())
    full = _product(system, k, 1) if t != 1 else mat
    # only nodes updating at step k hold a value in their real row
    rows = system.active.get(k, [])
    row_min = float(full[rows, : system.n].sum(axis=1).min()) if rows else math.inf
    return PhiReport(k, t, phi_vec, mat, dev, consts.contraction(k - t), row_min, consts.row_sum_floor)


def phi_deviation_profile(system: AugmentedSystem, k: int) -> tuple:
    """Deviations of ``Phi(k, t)`` from rank one for ``t = k, k-1, ..., 1``.

    Returns ``(gaps, deviations, bounds)`` with ``gaps = k - t``.
    """
    consts = GraphConstants.compute(system.n, system.b)
    mats = []
    phi = np.eye(system.n_aug)
    for t in range(k, 0, -1):
        phi = phi @ system.matrix(t)
        mats.append(phi.copy())
    limit = mats[-1].mean(axis=1)
    gaps = np.arange(len(mats))
    devs = np.array([np.abs(m - limit[:, None]).sum(axis=0).max() for m in mats])
    bounds = np.array([consts.contraction(int(s)) for s in gaps])
    return gaps, devs, bounds


def geometric_ratio(gaps, values, floor: float = 1e-13) -> float:
    """Fitted per-step decay ratio of a positive series (points below ``floor`` dropped)."""
    gaps = np.asarray(gaps, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = values > floor
    if keep.sum() < 2:
        raise ParameterError("fewer than two points above the floor")
    slope = np.polyfit(gaps[keep], np.log(values[keep]), 1)[0]
    return float(math.exp(slope))


# --------------------------------------------------------------- consensus


def consensus_series(system: AugmentedSystem, with_bound: bool = True) -> dict:
    """Per-step ``max_i |z_i(k+1) - xbar(k)|`` and the spread of the held ``z``.

    ``xbar(k)`` is the total augmented mass divided by ``n`` (the push-sum
    weights sum to ``n``, so this is the value the ratios converge to).
    With ``with_bound`` the bound ``8 n^{nb} (lam^k ||x(1)||_1 + sum_t lam^{k-t} ||g(t)||_1)``
    is evaluated alongside.
    """
    n, steps = system.n, system.steps
    ks = np.arange(1, steps + 1)
    dev = np.zeros(steps)
    spread = np.zeros(steps)
    xbar = np.zeros((steps, system.x0.shape[1]))
    for idx, k in enumerate(ks):
        xbar[idx] = system.x_aug[k].sum(axis=0) / n
        z = system.z_held[k]
        dev[idx] = np.abs(z - xbar[idx]).max()
        spread[idx] = (z.max(axis=0) - z.min(axis=0)).max()
    out = {"k": ks, "deviation": dev, "spread": spread, "xbar": xbar}
    if with_bound:
        consts = GraphConstants.compute(n, system.b)
        try:
            pref = 8.0 * float(n) ** (n * system.b)
        except OverflowError:
            pref = math.inf
        lam = consts.lam
        x1 = float(np.abs(system.x0).sum())
        acc = 0.0
        rhs = np.zeros(steps)
        for idx, k in enumerate(ks):
            acc = lam * acc + float(np.abs(system.g[k]).sum())
            rhs[idx] = pref * (math.exp(consts.log_lam * k) * x1 + acc)
        out["consensus_bound"] = rhs
        out["consensus_bound_ok"] = bool(np.all(dev <= rhs))
    return out


# ------------------------------------------------------------------ audits


def activation_instants(trace: Trace) -> dict:
    out = {}
    for r in trace.records:
        if r["type"] == "activate":
            out.setdefault(r["k"], []).append(r["node"])
    return out


def event_count_audit(trace: Trace, bounds: AsynchronyBounds, schedule: StepsizeSchedule | None = None) -> dict:
    """Count violations of the activation-window, delivery-lag and counter-gap bounds."""
    n, b1, b = trace.n, bounds.b1, bounds.b
    inst = activation_instants(trace)
    last_k = max(inst) if inst else 0
    window_viol = 0
    if last_k >= b1:
        seen_last = [0] * n
        for k in range(1, last_k + 1):
            for i in inst.get(k, ()):
                seen_last[i] = k
            if k >= b1 and min(seen_last) < k - b1 + 1:
                window_viol += 1
    P = _parse(trace)
    lag_viol = []
    max_lag = 0
    for mid, (src, p, dst) in P.sent.items():
        c = P.consumed_at.get(mid)
        if c is None:
            if p + b < last_k:
                lag_viol.append(mid)
            continue
        max_lag = max(max_lag, c - p)
        if c - p > b:
            lag_viol.append(mid)
    l = [1] * n
    used = [0.0] * n
    max_gap = 0
    inc_lo, inc_hi = math.inf, 0
    balance_viol = 0
    max_balance = 0.0
    by_k = {}
    for r in trace.records:
        if r["type"] == "activate":
            by_k.setdefault(r["k"], []).append(r)
    for k in sorted(by_k):
        for r in by_k[k]:
            inc = r["l_after"] - r["l_before"]
            inc_lo, inc_hi = min(inc_lo, inc), max(inc_hi, inc)
            l[r["node"]] = r["l_after"]
            used[r["node"]] += r["alpha"]
        max_gap = max(max_gap, max(l) - min(l))
        if schedule is not None:
            gap = max(used) - min(used)
            max_balance = max(max_balance, gap)
            if gap > window_sum(schedule, min(l), min(l) + n * b) + 1e-12:
                balance_viol += 1
    nb = n * b
    return {
        "window_violations": window_viol,
        "lag_violations": len(lag_viol),
        "lag_violation_ids": lag_viol[:20],
        "max_lag": max_lag,
        "max_l_gap": max_gap,
        "l_gap_bound": nb,
        "l_gap_ok": max_gap <= nb,
        "increment_min": inc_lo if inc_lo != math.inf else 0,
        "increment_max": inc_hi,
        "increment_ok": inc_lo >= 1 and inc_hi <= nb + 1,
        "balance_violations": balance_viol,
        "max_stepsize_gap": max_balance,
    }


def update_rates(trace: Trace) -> np.ndarray:
    """Fraction of all activations performed by each node."""
    counts = np.zeros(trace.n)
    for r in trace.records:
        if r["type"] == "activate":
            counts[r["node"]] += 1
    total = counts.sum()
    if total == 0:
        raise ParameterError("trace contains no activations")
    return counts / total


def metrics_from_trace(trace: Trace, objectives, fstar=None, scale: float = 1.0, every: int = 1) -> dict:
    """Recompute the per-instant run metrics from trace records alone."""
    n = trace.n
    z = [None] * n
    l = [1] * n
    used = [0.0] * n
    for r in trace.records:
        if r["type"] == "init":
            z[r["node"]] = np.asarray(r["z"], dtype=np.float64)
            l[r["node"]] = r["l_after"]
    by_k = {}
    for r in trace.records:
        if r["type"] == "activate":
            by_k.setdefault(r["k"], []).append(r)
    rec = MetricRecorder(objectives, fstar, scale, every)
    ks = sorted(by_k)
    for k in ks:
        t = by_k[k][0]["t"]
        for r in by_k[k]:
            z[r["node"]] = np.asarray(r["z"], dtype=np.float64)
            l[r["node"]] = r["l_after"]
            used[r["node"]] += r["alpha"]
        rec.record(k, t, np.array(z), l, used, force=k == ks[-1])
    return rec.rows


# ------------------------------------------------------------ rate fitting


@dataclass
class RateFit:
    slope: float
    intercept: float
    n_points: int
    target: float | None = None
    c_eps: float | None = None
    dropped: int = 0

    @property
    def envelope(self) -> float:
        """Constant ``C`` of the fitted envelope ``C * k**slope``."""
        return math.exp(self.intercept)


def rate_fit(k, values, window=None, burn_in: int = 0, theta=None, alpha=None, constants=None, c=None) -> RateFit:
    """Least-squares slope of ``log(values)`` against ``log(k)``.

    ``window=(lo, hi)`` restricts ``k``; the first ``burn_in`` points are
    skipped. Nonpositive values are dropped with a warning. ``theta`` and
    ``alpha`` give the reference slope ``-2 theta alpha``; ``constants`` and
    ``c`` add the ``c_eps`` value for context.
    """
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    sel = np.ones_like(k, dtype=bool)
    sel[:burn_in] = False
    if window is not None:
        sel &= (k >= window[0]) & (k <= window[1])
    pos = v > 0
    dropped = int((sel & ~pos).sum())
    if dropped:
        warnings.warn(f"rate_fit: dropped {dropped} nonpositive values", RuntimeWarning, stacklevel=2)
    sel &= pos
    if sel.sum() < 2:
        raise ParameterError("need at least two positive points in the fit window")
    slope, intercept = np.polyfit(np.log(k[sel]), np.log(v[sel]), 1)
    target = -2.0 * theta * alpha if theta is not None and alpha is not None else None
    c_eps = constants.c_eps(c, alpha) if constants is not None and c is not None and alpha is not None else None
    return RateFit(float(slope), float(intercept), int(sel.sum()), target, c_eps, dropped)


def summarize(system: AugmentedSystem, audit: dict | None = None, consensus: dict | None = None) -> dict:
    """JSON-ready bound-check summary (pass/fail plus margins)."""
    out = {
        "steps": system.steps,
        "n": system.n,
        "b": system.b,
        "replay_residual": {"value": system.max_residual, "limit": 1e-9, "pass": system.max_residual <= 1e-9},
        "column_sums": {"value": system.column_sum_error, "limit": 1e-12, "pass": system.column_sum_error <= 1e-12},
        "mass": {"value": system.mass_error(), "limit": 1e-9, "pass": system.mass_error() <= 1e-9},
        "z_replay": {"value": float(system.residual_z.max(initial=0.0))},
    }
    if audit is not None:
        out["event_counts"] = {
            "window_violations": audit["window_violations"],
            "lag_violations": audit["lag_violations"],
            "max_l_gap": audit["max_l_gap"],
            "l_gap_bound": audit["l_gap_bound"],
            "pass": audit["window_violations"] == 0 and audit["lag_violations"] == 0 and audit["l_gap_ok"],
        }
    if consensus is not None and "consensus_bound_ok" in consensus:
        margin = consensus["consensus_bound"] - consensus["deviation"]
        out["consensus_bound"] = {"min_margin": float(margin.min()), "pass": consensus["consensus_bound_ok"]}
    return out


__all__ = [
    "AugmentedSystem",
    "GraphConstants",
    "METRIC_COLUMNS",
    "PhiReport",
    "RateFit",
    "consensus_series",
    "geometric_ratio",
    "event_count_audit",
    "metrics_from_trace",
    "phi_deviation_profile",
    "phi_product",
    "rate_fit",
    "reconstruct_augmented",
    "summarize",
    "update_rates",
]
