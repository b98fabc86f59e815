"""Deterministic discrete-event engine for AsySPA, the naive variant and SynSPA.

Events are ordered by ``(time, kind, node, seq)`` with deliveries before
activations at equal times. All activations sharing a timestamp form one
activation instant and share the global index ``k``; shares broadcast at that
instant are delivered afterwards, so co-activated nodes never see each other's
fresh output.
"""

from __future__ import annotations

import gzip
import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _rng
from .errors import ConfigError, InvariantViolation, ParameterError
from .graph import AsynchronyBounds, Digraph, asynchrony_bounds, build_topology, validate_strongly_connected
from .objective import (
    make_objective,
    minimizer_set,
    read_dataset_csv,
    shard_dataset,
    total_subgradient,
    total_value,
    make_synthetic_dataset,
    normalize,
)
from .protocol import ACTIVATE, Message, NodeState, deposit, initial_broadcast, synspa_round
from .stepsize import StepsizeSchedule

ALGORITHMS = ("asyspa", "naive", "synspa")
_DELIVER, _ACTIVATE = 0, 1

METRIC_COLUMNS = ("k", "t", "f_avg_err", "spread", "l_gap", "stepsize_gap")


@dataclass
class Timing:
    """Activation-gap and delay model.

    ``periodic``: node ``i`` waits ``periods[i]`` between activations.
    ``uniform``: gaps are drawn uniformly from ``[gap_min, gap_max]``.
    Straggler nodes multiply their base gap by ``slowdown`` and add an
    exponential wait with mean ``mean_wait`` capped at ``wait_cap``.
    Message delays are uniform on ``[0, tau_delay]``; self-messages have none.
    """

    mode: str = "periodic"
    periods: tuple = ()
    gap_min: float = 1.0
    gap_max: float = 1.0
    tau_delay: float = 0.0
    stragglers: tuple = ()
    slowdown: float = 1.0
    mean_wait: float = 0.0
    wait_cap: float | None = None
    offsets: tuple = ()

    def __post_init__(self):
        if self.mode not in ("periodic", "uniform"):
            raise ConfigError(f"unknown timing mode {self.mode!r}", "timing.mode")
        if self.tau_delay < 0:
            raise ConfigError("delay bound must be nonnegative", "timing.tau_delay")
        if self.slowdown < 1.0:
            raise ConfigError("straggler slowdown must be >= 1", "timing.stragglers.slowdown")
        if self.mean_wait < 0:
            raise ConfigError("mean wait must be nonnegative", "timing.stragglers.mean_wait")
        if self.wait_cap is None:
            self.wait_cap = 5.0 * self.mean_wait
        if self.mode == "uniform" and not 0 < self.gap_min <= self.gap_max < math.inf:
            raise ConfigError("need 0 < tau_min <= tau_max < inf", "timing.tau_min")
        if self.offsets and min(self.offsets) < 0:
            raise ConfigError("start offsets must be nonnegative", "timing.offsets")
        if self.mode == "periodic" and self.periods and min(self.periods) <= 0:
            raise ConfigError("periods must be positive", "timing.periods")

    def _factor(self, i):
        return self.slowdown if i in self.stragglers else 1.0

    def gap_range(self, i):
        f = self._factor(i)
        if self.mode == "periodic":
            lo = hi = self.periods[i] * f
        else:
            lo, hi = self.gap_min * f, self.gap_max * f
        if i in self.stragglers:
            hi += self.wait_cap
        return lo, hi

    def tau_bounds(self, n):
        ranges = [self.gap_range(i) for i in range(n)]
        return min(r[0] for r in ranges), max(r[1] for r in ranges)

    def offset(self, i):
        return self.offsets[i] if self.offsets else 0.0

    def draw_gap(self, i, stream):
        f = self._factor(i)
        if self.mode == "periodic":
            gap = self.periods[i] * f
        else:
            gap = stream.uniform(self.gap_min, self.gap_max) * f
        if i in self.stragglers and self.mean_wait > 0:
            gap += min(stream.exponential(self.mean_wait), self.wait_cap)
        return gap


@dataclass
class SimConfig:
    graph: Digraph
    objectives: list
    schedule: StepsizeSchedule
    timing: Timing
    algorithm: str = "asyspa"
    x0: np.ndarray = None
    seed: int = 0
    max_events: int = 1000
    stop_after: str = "activations"
    record_trace: bool = True
    record_deliveries: bool = True
    metrics_every: int = 1
    check_mass: bool = True
    fstar: float | None = None
    metric_scale: float = 1.0
    name: str = "run"

    def __post_init__(self):
        n = self.graph.n
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}", "algorithm")
        if len(self.objectives) != n:
            raise ConfigError(f"need {n} objectives, got {len(self.objectives)}", "objective")
        dim = self.objectives[0].dim
        if any(o.dim != dim for o in self.objectives):
            raise ConfigError("all local objectives must share one dimension", "objective")
        if self.timing.mode == "periodic" and len(self.timing.periods) != n:
            raise ConfigError(f"need {n} periods, got {len(self.timing.periods)}", "timing.periods")
        if self.timing.offsets and len(self.timing.offsets) != n:
            raise ConfigError(f"need {n} start offsets, got {len(self.timing.offsets)}", "timing.offsets")
        if self.x0 is None:
            self.x0 = np.zeros((n, dim))
        x0 = np.asarray(self.x0, dtype=np.float64)
        if x0.ndim == 0:
            x0 = np.full((n, dim), float(x0))
        elif x0.ndim == 1 and dim == 1 and x0.shape[0] == n:
            x0 = x0.reshape(n, 1)
        elif x0.ndim == 1 and x0.shape[0] == dim:
            x0 = np.tile(x0, (n, 1))
        if x0.shape != (n, dim):
            raise ConfigError(f"initial state must have shape ({n}, {dim})", "x0")
        self.x0 = x0
        if self.stop_after not in ("activations", "instants"):
            raise ConfigError("stop_after must be 'activations' or 'instants'", "stop_after")
        if self.max_events < 1:
            raise ConfigError("max_events must be >= 1", "max_events")
        if self.metrics_every < 1:
            raise ConfigError("metrics_every must be >= 1", "metrics_every")
        if not validate_strongly_connected(self.graph):
            raise ConfigError("communication graph is not strongly connected", "graph")
        lo, hi = self.timing.tau_bounds(n)
        if not 0 < lo <= hi < math.inf:
            raise ConfigError("activation gaps violate 0 < tau_min <= tau_max < inf", "timing")

    @property
    def n(self) -> int:
        return self.graph.n

    def bounds(self) -> AsynchronyBounds:
        lo, hi = self.timing.tau_bounds(self.n)
        return asynchrony_bounds(self.n, lo, hi, self.timing.tau_delay)

    @classmethod
    def from_dict(cls, cfg: dict, base_dir=None) -> "SimConfig":
        """Build a config from its JSON form (see ``asyspa_lab.config`` for the schema)."""
        graph = graph_from_spec(cfg["graph"], base_dir)
        n = graph.n
        objectives, scale = objectives_from_spec(cfg["objective"], n, base_dir)
        step = dict(cfg.get("stepsize", {}))
        if step.pop("per_sample", False):
            step["scale"] = step.get("scale", 1.0) / scale
        try:
            schedule = StepsizeSchedule.from_dict(step)
        except ParameterError as exc:
            raise ConfigError(str(exc), "stepsize") from None
        timing = timing_from_spec(cfg.get("timing", {}), n)
        fstar = cfg.get("fstar")
        return cls(
            graph=graph,
            objectives=objectives,
            schedule=schedule,
            timing=timing,
            algorithm=cfg.get("algorithm", "asyspa"),
            x0=cfg.get("x0"),
            seed=cfg.get("seed", 0),
            max_events=cfg.get("max_events", 1000),
            stop_after=cfg.get("stop_after", "activations"),
            record_trace=cfg.get("trace", {}).get("enabled", True),
            record_deliveries=cfg.get("trace", {}).get("deliveries", True),
            metrics_every=cfg.get("metrics_every", 1),
            check_mass=cfg.get("check_mass", True),
            fstar=fstar if isinstance(fstar, (int, float)) else None,
            metric_scale=scale,
            name=cfg.get("name", "run"),
        )


def graph_from_spec(spec: dict, base_dir=None) -> Digraph:
    kind = spec.get("kind")
    try:
        if kind == "single":
            return Digraph.single_node()
        if kind == "edges" and "path" in spec:
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise ConfigError(f"edge-list file {path} not found", "graph.path")
            return Digraph.load(path)
        if kind == "edges":
            return Digraph(spec["n"], frozenset(tuple(e) for e in spec.get("edges", [])))
        return build_topology(kind, spec["n"], spec.get("k"))
    except ParameterError as exc:
        raise ConfigError(str(exc), "graph") from None


def timing_from_spec(spec: dict, n: int) -> Timing:
    mode = spec.get("mode", "periodic")
    periods = spec.get("periods")
    if mode == "periodic" and periods is None:
        base = spec.get("base", 1.0)
        beta = spec.get("beta", 0.0)
        periods = [base * (i + 1) ** beta for i in range(n)]
    strag = spec.get("stragglers", {})
    t = Timing(
        mode=mode,
        periods=tuple(periods or ()),
        gap_min=spec.get("tau_min", 1.0),
        gap_max=spec.get("tau_max", spec.get("tau_min", 1.0)),
        tau_delay=spec.get("tau_delay", 0.0),
        stragglers=tuple(strag.get("nodes", ())),
        slowdown=strag.get("slowdown", 1.0),
        mean_wait=strag.get("mean_wait", 0.0),
        wait_cap=strag.get("wait_cap"),
        offsets=tuple(spec.get("offsets", ())),
    )
    if mode == "periodic" and "tau_min" in spec:
        lo, hi = t.tau_bounds(n)
        if lo < spec["tau_min"] or hi > spec.get("tau_max", math.inf):
            raise ConfigError("periods fall outside [tau_min, tau_max]", "timing.periods")
    return t


def objectives_from_spec(spec: dict, n: int, base_dir=None):
    """Per-node objectives and the error normalizer (instance count for data losses)."""
    kind = spec.get("kind")
    if kind in ("abs_deviation", "quadratic"):
        centers = spec.get("centers")
        if centers is None or len(centers) != n:
            raise ConfigError(f"need one center per node ({n})", "objective.centers")
        weights = spec.get("weights", [1.0] * n)
        return [make_objective({"kind": kind, "center": c, "weight": w}) for c, w in zip(centers, weights)], 1.0
    if kind == "zero":
        return [make_objective({"kind": "zero", "dim": spec.get("dim", 1)}) for _ in range(n)], 1.0
    if kind in ("logistic_multiclass", "hinge_svm"):
        ds = dataset_from_spec(spec.get("dataset"), base_dir)
        if spec.get("normalize", False):
            ds = normalize(ds, spec.get("categorical", ds.categorical))
        gamma = spec.get("gamma", 1.0)
        try:
            shards = shard_dataset(ds, n)
        except ParameterError as exc:
            raise ConfigError(str(exc), "objective.dataset") from None
        # the regularizer is split so the node objectives add up to the global one
        objs = [make_objective({"kind": kind, "gamma": gamma / n}, sh) for sh in shards]
        return objs, float(ds.n_samples)
    raise ConfigError(f"unknown objective kind {kind!r}", "objective.kind")


def dataset_from_spec(spec, base_dir=None):
    if spec is None:
        raise ConfigError("classification objectives need a dataset", "objective.dataset")
    if isinstance(spec, str):
        path = Path(spec)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError(f"dataset file {path} not found", "objective.dataset")
        return read_dataset_csv(path)
    syn = spec.get("synthetic")
    if syn is None:
        raise ConfigError("dataset must be a CSV path or {'synthetic': {...}}", "objective.dataset")
    try:
        return make_synthetic_dataset(syn["n_samples"], syn["n_features"], syn["n_classes"], syn.get("seed", 0))
    except ParameterError as exc:
        raise ConfigError(str(exc), "objective.dataset.synthetic") from None


# ------------------------------------------------------------------ results


@dataclass
class Trace:
    """Event records plus the run metadata needed to replay them."""

    records: list
    n: int
    algorithm: str
    out_neighbors: list
    meta: dict = field(default_factory=dict)

    def activations(self):
        return [r for r in self.records if r["type"] == "activate"]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.records)

    def write(self, path, compress: bool | None = None) -> None:
        path = Path(path)
        if compress is None:
            compress = path.suffix == ".gz"
        data = self.to_jsonl().encode()
        if compress:
            # mtime pinned so equal traces give equal bytes
            with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
                fh.write(data)
        else:
            path.write_bytes(data)

    @classmethod
    def read(cls, path, graph: Digraph, algorithm: str = "asyspa") -> "Trace":
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "rt") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        return cls(records, graph.n, algorithm, [list(graph.out_neighbors(i)) for i in range(graph.n)])


@dataclass
class SimResult:
    config: SimConfig
    states: list
    trace: Trace | None
    metrics: dict
    bounds: AsynchronyBounds
    max_mass_error: float
    n_instants: int
    n_activations: int
    end_time: float

    def z(self) -> np.ndarray:
        return np.array([s.z for s in self.states])

    def x_bar(self) -> np.ndarray:
        return self.z().mean(axis=0)


class MetricRecorder:
    """Collects the per-instant metric rows emitted by runs and re-derived by analysis."""

    def __init__(self, objectives, fstar, scale, every=1):
        self.objectives = objectives
        self.fstar = fstar
        self.scale = scale
        self.every = every
        self.rows = {c: [] for c in METRIC_COLUMNS}

    def record(self, k, t, z, l, used, force=False):
        if not force and k % self.every:
            return
        zbar = z.mean(axis=0)
        f = total_value(self.objectives, zbar)
        err = (f - self.fstar) / self.scale if self.fstar is not None else f / self.scale
        self.rows["k"].append(k)
        self.rows["t"].append(t)
        self.rows["f_avg_err"].append(err)
        self.rows["spread"].append(float((z.max(axis=0) - z.min(axis=0)).max()))
        self.rows["l_gap"].append(int(max(l) - min(l)))
        self.rows["stepsize_gap"].append(max(used) - min(used))


def write_metrics_csv(metrics: dict, path, columns=None) -> None:
    """Write metric rows; ``columns`` selects a subset (``k`` is always kept)."""
    cols = [c for c in METRIC_COLUMNS if columns is None or c in columns or c == "k"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*(metrics[c] for c in cols)):
            fh.write(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row) + "\n")


def estimate_fstar(objectives, schedule: StepsizeSchedule, steps: int, x0=None) -> float:
    """Optimal value: closed form where available, else the best value of a
    centralized subgradient run of ``steps`` iterations."""
    opt = minimizer_set(objectives)
    if opt is not None:
        return total_value(objectives, opt[0])
    x = np.zeros(objectives[0].dim) if x0 is None else np.array(x0, dtype=np.float64)
    best = total_value(objectives, x)
    for k in range(1, steps + 1):
        x = x - schedule.rho(k) * total_subgradient(objectives, x)
        best = min(best, total_value(objectives, x))
    return best


# ------------------------------------------------------------------- engine


def _vec(a):
    return a.tolist()


def run(cfg: SimConfig) -> SimResult:
    """Simulate until ``cfg.max_events`` node activations have been executed."""
    if cfg.algorithm == "synspa":
        return _run_synspa(cfg)
    return _run_async(cfg)


def _run_async(cfg: SimConfig) -> SimResult:
    g, n = cfg.graph, cfg.n
    activate = ACTIVATE[cfg.algorithm]
    objs, sched, timing = cfg.objectives, cfg.schedule, cfg.timing
    states = [NodeState(i, cfg.x0[i], g.out_degree(i)) for i in range(n)]
    node_rng = [_rng.Stream(cfg.seed, _rng.NODE_STREAM, i) for i in range(n)]
    edge_rng = {(i, j): _rng.Stream(cfg.seed, _rng.EDGE_STREAM, i, j) for i in range(n) for j in g.out_neighbors(i) if j != i}
    out_nbrs = [g.out_neighbors(i) for i in range(n)]
    records = [] if cfg.record_trace else None
    rec_deliver = cfg.record_trace and cfg.record_deliveries
    metrics = MetricRecorder(objs, cfg.fstar, cfg.metric_scale, cfg.metrics_every)

    heap = []
    in_flight = {}
    msg_id = 0
    max_mass_err = 0.0

    def send(i, bc, t, k):
        nonlocal msg_id
        ids = []
        for j in out_nbrs[i]:
            m = Message(msg_id, i, j, bc.x_share, bc.y_share, bc.l, t, t, k)
            msg_id += 1
            ids.append(m.id)
            if j == i:
                deposit(states[i], m)
                if rec_deliver:
                    records.append({"k": k, "t": t, "type": "deliver", "node": j, "src": i, "sent_k": k, "msgs": [m.id]})
            else:
                m.deliver_time = t + edge_rng[(i, j)].uniform(0.0, timing.tau_delay) if timing.tau_delay > 0 else t
                in_flight[m.id] = m
                heapq.heappush(heap, (m.deliver_time, _DELIVER, j, m.id))
        return ids

    # start-up broadcast at t = 0
    for i in range(n):
        bc = initial_broadcast(states[i])
        ids = send(i, bc, 0.0, 0)
        if records is not None:
            s = states[i]
            records.append({"k": 0, "t": 0.0, "type": "init", "node": i, "l_before": 1, "l_after": 1, "alpha": 0.0,
                            "y": s.y, "z": _vec(s.z), "x": _vec(s.x), "msgs": ids})
    for i in range(n):
        heapq.heappush(heap, (timing.offset(i) + timing.draw_gap(i, node_rng[i]), _ACTIVATE, i, 0))

    k = 0
    done = 0
    t = 0.0
    by_instant = cfg.stop_after == "instants"
    budget = math.inf if by_instant else cfg.max_events

    def finished():
        return (k if by_instant else done) >= cfg.max_events

    while not finished() and heap:
        t = heap[0][0]
        while heap and heap[0][0] == t and heap[0][1] == _DELIVER:
            _, _, j, mid = heapq.heappop(heap)
            m = in_flight.pop(mid)
            deposit(states[j], m)
            if rec_deliver:
                records.append({"k": k, "t": t, "type": "deliver", "node": j, "src": m.src, "sent_k": m.sent_k, "msgs": [mid]})
        if not (heap and heap[0][0] == t and heap[0][1] == _ACTIVATE):
            continue
        active = []
        while heap and heap[0][0] == t and heap[0][1] == _ACTIVATE:
            active.append(heapq.heappop(heap)[2])
        k += 1
        fired = []
        for i in sorted(active):
            if done == budget:
                break
            bc = activate(states[i], sched, objs[i])
            done += 1
            fired.append((i, bc))
        for i, bc in fired:
            ids = send(i, bc, t, k) if bc is not None else []
            if records is not None:
                s = states[i]
                records.append({
                    "k": k, "t": t, "type": "activate", "node": i,
                    "l_before": bc.l_before if bc else s.l, "l_after": s.l,
                    "alpha": bc.alpha if bc else 0.0, "y": s.y, "z": _vec(s.z), "x": _vec(s.x),
                    "msgs": ids, "consumed": list(bc.consumed) if bc else [],
                })
        for i in active:
            heapq.heappush(heap, (t + timing.draw_gap(i, node_rng[i]), _ACTIVATE, i, k))
        if cfg.check_mass:
            ys = [m.y_share for m in in_flight.values()]
            for s in states:
                ys.extend(s.y_buf)
            err = abs(math.fsum(ys) - n)
            if err > 1e-9 * n:
                raise InvariantViolation(f"push-sum mass drifted by {err:.3e} at k={k}")
            max_mass_err = max(max_mass_err, err)
        metrics.record(k, t, np.array([s.z for s in states]), [s.l for s in states],
                       [s.stepsize_used for s in states], force=finished())

    trace = None
    if records is not None:
        trace = Trace(records, n, cfg.algorithm, [list(o) for o in out_nbrs], _meta(cfg))
    return SimResult(cfg, states, trace, metrics.rows, cfg.bounds(), max_mass_err, k, done, t)


def _run_synspa(cfg: SimConfig) -> SimResult:
    """Lock-step rounds; a round lasts as long as its slowest node's compute time."""
    g, n = cfg.graph, cfg.n
    states = [NodeState(i, cfg.x0[i], g.out_degree(i)) for i in range(n)]
    node_rng = [_rng.Stream(cfg.seed, _rng.NODE_STREAM, i) for i in range(n)]
    records = [] if cfg.record_trace else None
    metrics = MetricRecorder(cfg.objectives, cfg.fstar, cfg.metric_scale, cfg.metrics_every)
    if records is not None:
        for s in states:
            records.append({"k": 0, "t": 0.0, "type": "init", "node": s.id, "l_before": 0, "l_after": 0,
                            "alpha": 0.0, "y": s.y, "z": _vec(s.z), "x": _vec(s.x), "msgs": []})
    t = 0.0
    k = 0
    done = 0
    rounds = cfg.max_events if cfg.stop_after == "instants" else -(-cfg.max_events // n)
    for k in range(1, rounds + 1):
        t += max(cfg.timing.draw_gap(i, node_rng[i]) for i in range(n))
        synspa_round(states, g, k, cfg.schedule, cfg.objectives)
        done += n
        if records is not None:
            step = cfg.schedule.rho(k)
            for s in states:
                records.append({"k": k, "t": t, "type": "activate", "node": s.id, "l_before": k, "l_after": k + 1,
                                "alpha": step, "y": s.y, "z": _vec(s.z), "x": _vec(s.x), "msgs": [], "consumed": []})
        metrics.record(k, t, np.array([s.z for s in states]), [k] * n,
                       [s.stepsize_used for s in states], force=k == rounds)
    trace = None
    if records is not None:
        trace = Trace(records, n, "synspa", [list(g.out_neighbors(i)) for i in range(n)], _meta(cfg))
    return SimResult(cfg, states, trace, metrics.rows, cfg.bounds(), 0.0, k, done, t)


def _meta(cfg):
    b = cfg.bounds()
    return {
        "name": cfg.name,
        "algorithm": cfg.algorithm,
        "n": cfg.n,
        "seed": cfg.seed,
        "edges": sorted(cfg.graph.edges),
        "tau_min": b.tau_min,
        "tau_max": b.tau_max,
        "tau_delay": b.tau_delay,
        "stepsize": cfg.schedule.to_dict(),
    }


def time_to_threshold(metrics: dict, threshold: float, column: str = "f_avg_err") -> float:
    """First simulated time at which ``column`` drops to ``threshold`` (``inf`` if never)."""
    for t, v in zip(metrics["t"], metrics[column]):
        if v <= threshold:
            return t
    return math.inf


def simultaneous_activation_policy(times) -> list:
    """Group activation times into instants: returns ``(k, [node ids])`` in order.

    Equal timestamps share one ``k``; node ids within an instant are sorted.
    """
    order = sorted((t, i) for i, t in enumerate(times))
    groups = []
    for t, i in order:
        if groups and groups[-1][0] == t:
            groups[-1][1].append(i)
        else:
            groups.append((t, [i]))
    return [(k + 1, nodes) for k, (_, nodes) in enumerate(groups)]
