"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible with
``pytest -s`` or in the ``-v`` log) before asserting.
"""

import json
import time

import numpy as np
import pytest

from asyspa_lab import analysis as A
from asyspa_lab.cli import main as cli_main
from asyspa_lab.gensubgrad import gen_run, make_cyclic_incremental, make_full_subgradient, run_and_measure
from asyspa_lab.graph import build_topology
from asyspa_lab.objective import (
    AbsDeviation,
    HingeSVM,
    LogisticMulticlass,
    Quadratic,
    ZeroObjective,
    make_synthetic_dataset,
)
from asyspa_lab.simulator import SimConfig, Timing, estimate_fstar, run, time_to_threshold
from asyspa_lab.stepsize import StepsizeSchedule


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def ring_run():
    """3-node ring, random gaps in [1, 2], delays up to 2, 10^4 events."""
    t0 = time.perf_counter()
    objs = [AbsDeviation(c) for c in (-1.0, 0.5, 2.0)]
    cfg = SimConfig(build_topology("ring", 3), objs, StepsizeSchedule("power", 1.0, 0.6),
                    Timing(mode="uniform", gap_min=1.0, gap_max=2.0, tau_delay=2.0),
                    x0=[1.0, 2.0, 6.0], max_events=10_000, seed=0)
    res = run(cfg)
    system = A.reconstruct_augmented(res.trace, res.bounds, objs, cfg.schedule)
    return cfg, res, system, time.perf_counter() - t0


def test_criterion_1_augmented_replay(ring_run, capsys):
    cfg, res, system, secs = ring_run
    ok = system.max_residual <= 1e-9 and secs < 30
    report(capsys, 1, ok, f"max replay residual {system.max_residual:.2e} (<= 1e-9) over {system.steps} steps, "
                          f"{secs:.1f}s (< 30s)")


def test_criterion_2_mass_conservation(ring_run, capsys):
    cfg, res, system, _ = ring_run
    mass = max(res.max_mass_error, system.mass_error())
    ok = mass <= 1e-9 and system.column_sum_error <= 1e-12
    report(capsys, 2, ok, f"mass error {mass:.2e} (<= 1e-9), column-sum error {system.column_sum_error:.2e} (<= 1e-12)")


def test_criterion_3_event_count_audits(ring_run, capsys):
    cfg, res, _, _ = ring_run
    a = A.event_count_audit(res.trace, res.bounds)
    ok = a["window_violations"] == 0 and a["lag_violations"] == 0 and a["l_gap_ok"]
    report(capsys, 3, ok, f"window violations {a['window_violations']}, lag violations {a['lag_violations']} "
                          f"(max lag {a['max_lag']} <= b={res.bounds.b}), max l gap {a['max_l_gap']} <= {a['l_gap_bound']}")


def test_criterion_4_exact_convergence(capsys):
    t0 = time.perf_counter()
    cfg = SimConfig.from_dict({
        "graph": {"kind": "ring", "n": 5},
        "objective": {"kind": "abs_deviation", "centers": [-2, -1, 0, 3, 7]},
        "stepsize": {"kind": "power", "scale": 1.0, "alpha": 0.6},
        "timing": {"mode": "periodic", "base": 1.0, "beta": 1.0, "tau_delay": 2.0},
        "max_events": 200_000, "stop_after": "instants", "trace": {"enabled": False},
        "metrics_every": 1000, "check_mass": False, "seed": 0, "fstar": 0.0,
    })
    z = run(cfg).z().ravel()
    secs = time.perf_counter() - t0
    err, spread = float(np.abs(z).max()), float(z.max() - z.min())
    ok = err <= 0.05 and spread <= 0.01 and secs < 60
    report(capsys, 4, ok, f"max|z| {err:.4f} (<= 0.05), spread {spread:.4f} (<= 0.01), {secs:.1f}s (< 60s)")


def test_criterion_5_naive_bias(capsys):
    t0 = time.perf_counter()
    g = build_topology("complete", 2)
    objs = [Quadratic(1.0), Quadratic(-1.0)]
    timing = Timing(mode="periodic", periods=(1.0, 2.0))
    naive = run(SimConfig(g, objs, StepsizeSchedule("constant", 1e-3, 0.0), timing, algorithm="naive",
                          max_events=20_000, record_trace=False)).z().ravel()
    asy = run(SimConfig(g, objs, StepsizeSchedule("power", 1.0, 0.6), timing, algorithm="asyspa",
                        max_events=20_000, record_trace=False)).z().ravel()
    secs = time.perf_counter() - t0
    ok = np.abs(naive - 1 / 3).max() <= 0.05 and np.abs(asy).max() <= 0.02 and secs < 30
    report(capsys, 5, ok, f"naive z {np.round(naive, 4).tolist()} (1/3 +- 0.05), "
                          f"asyspa z {np.round(asy, 4).tolist()} (0 +- 0.02), {secs:.1f}s")


def test_criterion_6_gensubgrad_reductions(capsys):
    steps = 10_000
    rho = StepsizeSchedule("power", 1.0, 0.8)
    sharp = [AbsDeviation(1.0), AbsDeviation(-2.0, 0.5)]
    res = gen_run([4.0], steps, make_cyclic_incremental(2), rho, sharp)
    x, direct = 4.0, [4.0]
    for k in range(1, steps + 1):
        c, w = ((1.0, 1.0), (-2.0, 0.5))[(k - 1) % 2]
        x = x - ((k + 1) // 2) ** -0.8 * w * np.sign(x - c)
        direct.append(x)
    err1 = float(np.abs(res.x[:, 0] - direct).max())

    quad = [Quadratic(1.0), Quadratic(-2.0, 3.0)]
    rho2 = StepsizeSchedule("power", 0.2, 0.6)
    res2 = gen_run([4.0], steps, make_full_subgradient(2), rho2, quad)
    y, err2 = 4.0, 0.0
    for p in range(1, steps // 2 + 1):
        err2 = max(err2, abs(res2.x[2 * (p - 1), 0] - y))
        y = y - 0.2 * p**-0.6 * ((y - 1.0) + 3.0 * (y + 2.0))
    ok = err1 <= 1e-12 and err2 <= 1e-12
    report(capsys, 6, ok, f"cyclic incremental max diff {err1:.1e}, full-subgradient compressed max diff {err2:.1e} (<= 1e-12)")


@pytest.mark.parametrize("kind", ["sharp", "quadratic"])
def test_criterion_7_rate_fits(kind, capsys):
    t0 = time.perf_counter()
    rho = StepsizeSchedule("power", 1.0, 1.0)
    if kind == "sharp":
        objs = [AbsDeviation(0.3, 1.0), AbsDeviation(-1.1, 0.6), AbsDeviation(2.2, 0.7)]
        limit, theta = -1.6, 1.0
    else:
        objs = [Quadratic(0.5), Quadratic(-1.0), Quadratic(2.0)]
        limit, theta = -0.8, 0.5
    s = run_and_measure([3.7], 100_000, make_cyclic_incremental(3), rho, objs)
    fit = A.rate_fit(s["k"], s["dist2"], window=(1e3, 1e5), theta=theta, alpha=1.0)
    secs = time.perf_counter() - t0
    ok = fit.slope <= limit and secs < 60
    report(capsys, 7, ok, f"{kind}: slope {fit.slope:.3f} (<= {limit}, theory {fit.target}), {secs:.1f}s")


def test_criterion_8_contraction(capsys):
    objs = [Quadratic(1.0), Quadratic(-1.0)]
    cfg = SimConfig(build_topology("complete", 2), objs, StepsizeSchedule("power", 1.0, 0.6),
                    Timing(mode="periodic", periods=(1.0, 1.0), offsets=(0.0, 0.5)), max_events=80, seed=0)
    res = run(cfg)
    system = A.reconstruct_augmented(res.trace, objectives=objs, schedule=cfg.schedule, b=1)
    consts = A.GraphConstants.compute(2, 1)
    worst = -np.inf
    for k in range(1, system.steps + 1):
        gaps, devs, bounds = A.phi_deviation_profile(system, k)
        worst = max(worst, float((devs - bounds).max()))
    gaps, devs, _ = A.phi_deviation_profile(system, 30)
    ratio = A.geometric_ratio(gaps, devs)
    ok = (worst <= 0 and ratio < 1 and consts.alpha_bound == 40.0 and abs(consts.lam - 0.8660) < 5e-5)
    report(capsys, 8, ok, f"alpha_bound {consts.alpha_bound:g}, lambda {consts.lam:.4f}, "
                          f"max(dev - bound) {worst:.3f} (<= 0), fitted ratio {ratio:.3f} (< 1)")


def test_criterion_9_straggler_speedup(capsys):
    t0 = time.perf_counter()
    base = {
        "graph": {"kind": "ring_plus_k", "n": 6, "k": 2},
        "objective": {"kind": "logistic_multiclass", "normalize": True, "gamma": 1.0,
                      "dataset": {"synthetic": {"n_samples": 2000, "n_features": 10, "n_classes": 3, "seed": 1}}},
        "stepsize": {"kind": "constant", "scale": 1.0, "per_sample": True},
        "timing": {"mode": "periodic", "base": 1.0, "tau_delay": 0.5, "stragglers": {"nodes": [5], "slowdown": 10.0}},
        "max_events": 6000, "trace": {"enabled": False}, "metrics_every": 10,
    }
    objs = SimConfig.from_dict(base).objectives
    fstar = estimate_fstar(objs, StepsizeSchedule("constant", 1.0 / 2000, 0.0), 3000)
    T = {}
    for alg in ("asyspa", "synspa"):
        m = run(SimConfig.from_dict(dict(base, algorithm=alg, fstar=fstar))).metrics
        T[alg] = time_to_threshold(m, 1e-2)
    secs = time.perf_counter() - t0
    ok = T["asyspa"] <= 0.5 * T["synspa"] and np.isfinite(T["asyspa"]) and secs < 300
    report(capsys, 9, ok, f"time to 1e-2: asyspa {T['asyspa']:g}, synspa {T['synspa']:g} "
                          f"(ratio {T['asyspa'] / T['synspa']:.3f} <= 0.5), {secs:.1f}s")


def test_criterion_10_subgradient_oracles(capsys):
    rng = np.random.default_rng(2024)
    ds = make_synthetic_dataset(40, 4, 3, seed=3)
    logistic = LogisticMulticlass(ds.features, ds.labels, 3, gamma=0.5)
    worst_fd = 0.0
    h = 1e-5
    for _ in range(100):
        x = rng.normal(scale=2.0, size=logistic.dim)
        g = logistic.subgradient(x)
        fd = np.array([(logistic.value(x + h * e) - logistic.value(x - h * e)) / (2 * h) for e in np.eye(logistic.dim)])
        worst_fd = max(worst_fd, float(np.abs(fd - g).max() / np.abs(g).max()))
    kinds = {
        "abs_deviation": (AbsDeviation(0.7, 1.3), 1),
        "quadratic": (Quadratic(-0.4, 2.0), 1),
        "zero": (ZeroObjective(3), 3),
        "logistic_multiclass": (logistic, logistic.dim),
        "hinge_svm": (HingeSVM(ds.features, ds.labels, 3, gamma=0.5), logistic.dim),
    }
    worst_gap = {}
    for name, (obj, dim) in kinds.items():
        xs = rng.normal(scale=3.0, size=(10_000, dim))
        ys = rng.normal(scale=3.0, size=(10_000, dim))
        gap = np.inf
        for x, y in zip(xs, ys):
            gap = min(gap, obj.value(y) - obj.value(x) - float(obj.subgradient(x) @ (y - x)))
        worst_gap[name] = gap
    ok = worst_fd <= 1e-5 and min(worst_gap.values()) >= -1e-9
    report(capsys, 10, ok, f"logistic fd relative error {worst_fd:.1e} (<= 1e-5); min inequality slack "
                           + ", ".join(f"{k} {v:.1e}" for k, v in worst_gap.items()) + " (>= -1e-9)")


def test_criterion_11_determinism(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ASYSPA_LAB_THREADS", "1")
    configs = {
        "asyspa": {"algorithm": "asyspa", "graph": {"kind": "ring", "n": 4},
                   "objective": {"kind": "abs_deviation", "centers": [0, 1, 2, 3]},
                   "timing": {"mode": "uniform", "tau_min": 1.0, "tau_max": 2.0, "tau_delay": 2.0},
                   "max_events": 500, "seed": 11},
        "naive": {"algorithm": "naive", "graph": {"kind": "complete", "n": 3},
                  "objective": {"kind": "quadratic", "centers": [1, -1, 0]},
                  "timing": {"mode": "uniform", "tau_min": 1.0, "tau_max": 3.0, "tau_delay": 1.0},
                  "max_events": 500, "seed": 5},
        "synspa": {"algorithm": "synspa", "graph": {"kind": "ring_plus_k", "n": 4, "k": 1},
                   "objective": {"kind": "logistic_multiclass",
                                 "dataset": {"synthetic": {"n_samples": 80, "n_features": 3, "n_classes": 3}}},
                   "stepsize": {"kind": "constant", "scale": 1.0, "per_sample": True},
                   "timing": {"mode": "periodic", "base": 1.0, "stragglers": {"nodes": [1], "slowdown": 3.0}},
                   "max_events": 200, "seed": 3},
    }
    same = {}
    for name, cfg in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / name / rep
            assert cli_main(["run", str(path), "--out", str(d)]) == 0
            outs.append(((d / "trace.jsonl").read_bytes(), (d / "metrics.csv").read_bytes()))
        same[name] = outs[0] == outs[1]
    report(capsys, 11, all(same.values()), "byte-identical trace and metrics: "
                                           + ", ".join(f"{k} {v}" for k, v in same.items()))
