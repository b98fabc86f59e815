"""Command-line entry point: ``asyspa-lab {run,compare,analyze,gen-data}``.

Exit codes: 0 success, 2 configuration error, 3 runtime invariant violation.
Times in all outputs are simulated time units, not wall-clock.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, config
from .errors import ConfigError, InvariantViolation, ParameterError, ReconstructionError
from .gensubgrad import GenSchedule, HolderSpec, make_cyclic_incremental, make_full_subgradient, run_and_measure, write_series_csv
from .objective import make_synthetic_dataset, write_dataset_csv
from .simulator import METRIC_COLUMNS, SimConfig, Trace, estimate_fstar, objectives_from_spec, run, time_to_threshold, write_metrics_csv
from .stepsize import StepsizeSchedule

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def max_workers(n_jobs: int) -> int:
    env = os.environ.get("ASYSPA_LAB_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigError(f"ASYSPA_LAB_THREADS must be an integer, got {env!r}", "ASYSPA_LAB_THREADS") from None
    return max(1, min(cap, n_jobs))


def _map(fn, jobs):
    workers = max_workers(len(jobs))
    if workers == 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# ------------------------------------------------------------------ runs


def build_sim(cfg: dict, base_dir=None, seed=None) -> SimConfig:
    """SimConfig from a validated config dict, resolving ``fstar``."""
    cfg = dict(cfg)
    if seed is not None:
        cfg["seed"] = seed
    sim = SimConfig.from_dict(cfg, base_dir)
    fstar = cfg.get("fstar", "auto")
    if fstar == "auto":
        steps = cfg.get("fstar_steps", 10 * sim.max_events)
        sim.fstar = estimate_fstar(sim.objectives, sim.schedule, steps, sim.x0.mean(axis=0))
    return sim


def _gensubgrad_schedule(spec: dict, n: int) -> GenSchedule:
    kind = spec["type"]
    if kind == "cyclic":
        return make_cyclic_incremental(n)
    if kind == "full":
        return make_full_subgradient(n)
    selector = spec.get("selector")
    if selector is None:
        raise ConfigError("custom schedules need a selector", "schedule.selector")
    inc = spec.get("increments", 1)
    if isinstance(inc, list):
        seq = tuple(inc)
        inc = lambda k, i, seq=seq: seq[(k - 1) % len(seq)]  # noqa: E731
    try:
        return GenSchedule(n, selector, inc, spec.get("sigma1"), spec.get("sigma2", 1))
    except ParameterError as exc:
        raise ConfigError(str(exc), "schedule") from None


def run_gensubgrad(cfg: dict, out_dir: Path, base_dir=None) -> dict:
    n = cfg.get("components") or len(cfg["objective"].get("centers", [])) or 1
    objs, _ = objectives_from_spec(cfg["objective"], n, base_dir)
    rho = StepsizeSchedule.from_dict(cfg.get("stepsize", {}))
    sched = _gensubgrad_schedule(cfg["schedule"], n)
    x0 = np.asarray(cfg.get("x0", 0.0), dtype=np.float64)
    if x0.ndim == 0:
        x0 = np.full(objs[0].dim, float(x0))
    holder = HolderSpec.from_objectives(objs, cfg["theta"]) if "theta" in cfg else None
    series = run_and_measure(x0, cfg["steps"], sched, rho, objs, holder, cfg.get("every", 1))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_series_csv(series, out_dir / "series.csv")
    summary = {
        "name": cfg.get("name", "run"),
        "kind": "gensubgrad",
        "steps": cfg["steps"],
        "final_f_err": float(series["f_err"][-1]),
        "running_min": float(series["running_min"][-1]),
        "noise_sum": series["noise_sum"],
        "noise_ratio": series["noise_ratio"],
    }
    if "dist2" in series:
        summary["final_dist2"] = float(series["dist2"][-1])
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_sim(cfg: dict, out_dir: Path, base_dir=None, seed=None) -> dict:
    sim = build_sim(cfg, base_dir, seed)
    res = run(sim)
    out_dir.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.get("trace", {})
    if res.trace is not None:
        res.trace.write(out_dir / ("trace.jsonl.gz" if tcfg.get("gzip") else "trace.jsonl"))
    write_metrics_csv(res.metrics, out_dir / "metrics.csv", cfg.get("metrics"))
    b = res.bounds
    summary = {
        "name": sim.name,
        "algorithm": sim.algorithm,
        "seed": sim.seed,
        "n": sim.n,
        "time_axis": "simulated",
        "n_instants": res.n_instants,
        "n_activations": res.n_activations,
        "end_time": res.end_time,
        "fstar": sim.fstar,
        "max_mass_error": res.max_mass_error,
        "bounds": {"tau_min": b.tau_min, "tau_max": b.tau_max, "tau_delay": b.tau_delay, "b1": b.b1, "b2": b.b2, "b": b.b},
        "final": {c: res.metrics[c][-1] for c in METRIC_COLUMNS if res.metrics[c]},
        "z": res.z().tolist(),
    }
    if "threshold" in cfg:
        summary["time_to_threshold"] = _json_time(time_to_threshold(res.metrics, cfg["threshold"]))
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _json_time(t):
    return None if math.isinf(t) else t


def _out_dir(args_out, cfg, cfg_path: Path) -> Path:
    if args_out:
        return Path(args_out)
    if "output_dir" in cfg:
        p = Path(cfg["output_dir"])
        return p if p.is_absolute() else cfg_path.parent / p
    return Path("runs") / cfg.get("name", cfg_path.stem)


def _run_job(cfg, out_dir, base_dir, seed):
    return run_sim(cfg, Path(out_dir), base_dir, seed)


def cmd_run(args) -> int:
    cfg_path = Path(args.config)
    cfg = config.load(cfg_path)
    out = _out_dir(args.out, cfg, cfg_path)
    base = cfg_path.parent
    if cfg.get("kind") == "gensubgrad":
        summary = run_gensubgrad(cfg, out, base)
        print(f"{summary['name']}: {summary['steps']} steps, final f_err {summary['final_f_err']:.6g} -> {out}")
        return EXIT_OK
    if args.seed is not None:
        seeds = [args.seed]
    else:
        seeds = cfg.get("seeds") or [cfg.get("seed", 0)]
    dirs = [out] if len(seeds) == 1 else [out / f"seed_{s}" for s in seeds]
    results = _map(_run_job, [(cfg, str(d), base, s) for d, s in zip(dirs, seeds)])
    for d, s in zip(dirs, results):
        err = s["final"].get("f_avg_err")
        print(f"{s['name']} seed={s['seed']}: {s['n_instants']} instants, {s['n_activations']} activations, "
              f"t={s['end_time']:.6g}, f_avg_err={err:.6g} -> {d}")
    return EXIT_OK


# --------------------------------------------------------------- compare


def read_metrics_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "k" not in reader.fieldnames or "t" not in reader.fieldnames:
            raise ConfigError(f"{path} is not a metrics CSV (needs k and t columns)", str(path))
        rows = {c: [] for c in reader.fieldnames}
        for line, row in enumerate(reader, start=2):
            for c in reader.fieldnames:
                try:
                    rows[c].append(int(row[c]) if c in ("k", "l_gap") else float(row[c]))
                except (TypeError, ValueError):
                    raise ConfigError(f"{path}:{line}: bad value {row[c]!r} in column {c}", c) from None
    return rows


def _compare_job(path, threshold, metric):
    p = Path(path)
    if p.is_dir():
        p = p / "metrics.csv"
    if p.suffix == ".csv":
        metrics = read_metrics_csv(p)
        name = p.parent.name
    else:
        cfg = dict(config.load(p))
        cfg["trace"] = {"enabled": False}
        sim = build_sim(cfg, p.parent)
        metrics = run(sim).metrics
        name = sim.name
    if metric not in metrics:
        raise ConfigError(f"metric {metric!r} missing from {path}", "metric")
    return name, time_to_threshold(metrics, threshold, metric)


def compare_table(entries) -> list:
    """``[(name, T)]`` -> rows with speedup ``T_first / T`` relative to the first entry."""
    t0 = entries[0][1]
    rows = []
    for name, t in entries:
        if math.isinf(t):
            speedup, flag = 0.0, "never reached"
        elif math.isinf(t0):
            speedup, flag = math.inf, "baseline never reached"
        else:
            speedup, flag = t0 / t if t > 0 else math.inf, ""
        rows.append({"name": name, "T": t, "speedup": speedup, "flag": flag})
    return rows


def _fmt(v):
    return "∞" if math.isinf(v) else f"{v:.6g}"


def cmd_compare(args) -> int:
    if len(args.inputs) < 2:
        raise ConfigError("compare needs at least two configs or runs", "inputs")
    entries = _map(_compare_job, [(p, args.threshold, args.metric) for p in args.inputs])
    rows = compare_table(entries)
    print(f"{'name':<24} {'T':>12} {'speedup':>10}  flag")
    for r in rows:
        print(f"{r['name']:<24} {_fmt(r['T']):>12} {_fmt(r['speedup']):>10}  {r['flag']}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("name,T,speedup,flag\n")
            for r in rows:
                fh.write(f"{r['name']},{_fmt(r['T']) if math.isinf(r['T']) else repr(r['T'])},"
                         f"{_fmt(r['speedup']) if math.isinf(r['speedup']) else repr(r['speedup'])},{r['flag']}\n")
    return EXIT_OK


# --------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    cfg_path = Path(args.config)
    cfg = config.load(cfg_path)
    sim = SimConfig.from_dict(cfg, cfg_path.parent)
    trace = Trace.read(args.trace, sim.graph, sim.algorithm)
    trace.meta = {"name": sim.name}
    out = Path(args.out) if args.out else Path(args.trace).parent
    out.mkdir(parents=True, exist_ok=True)
    bounds = sim.bounds()
    report = {"update_rates": analysis.update_rates(trace).tolist()}
    if sim.algorithm != "synspa":
        system = analysis.reconstruct_augmented(trace, bounds, sim.objectives, sim.schedule, b=args.b)
        audit = analysis.event_count_audit(trace, bounds, sim.schedule)
        cons = analysis.consensus_series(system)
        report.update(analysis.summarize(system, audit, cons))
        with open(out / "consensus.csv", "w") as fh:
            fh.write("k,deviation,spread,consensus_bound\n")
            for k, d, s, r in zip(cons["k"], cons["deviation"], cons["spread"], cons["consensus_bound"]):
                fh.write(f"{int(k)},{float(d)!r},{float(s)!r},{float(r)!r}\n")
    if args.metrics:
        fstar = cfg.get("fstar", "auto")
        if fstar == "auto":
            # the run recorded the f* it estimated
            fstar = _fstar_from_summary(Path(args.metrics).parent)
        recomputed = analysis.metrics_from_trace(trace, sim.objectives, fstar, sim.metric_scale, sim.metrics_every)
        ref = read_metrics_csv(args.metrics)
        diff = max((abs(a - b) for c in ref if c in recomputed for a, b in zip(ref[c], recomputed[c])), default=0.0)
        same_len = all(len(ref[c]) == len(recomputed[c]) for c in ref if c in recomputed)
        report["metrics_roundtrip"] = {"max_abs_diff": diff, "pass": same_len and diff <= 1e-9}
    (out / "analysis.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")
    failed = [k for k, v in report.items() if isinstance(v, dict) and v.get("pass") is False]
    print(f"analysis -> {out / 'analysis.json'}" + (f"; failed checks: {', '.join(failed)}" if failed else "; all checks passed"))
    return EXIT_INVARIANT if failed else EXIT_OK


def _fstar_from_summary(run_dir: Path):
    p = run_dir / "summary.json"
    if p.exists():
        return json.loads(p.read_text()).get("fstar")
    return None


# -------------------------------------------------------------- gen-data


def cmd_gen_data(args) -> int:
    try:
        ds = make_synthetic_dataset(args.n_samples, args.n_features, args.n_classes, args.seed)
    except ParameterError as exc:
        raise ConfigError(str(exc), "gen-data") from None
    path = Path(args.out)
    try:
        write_dataset_csv(ds, path)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {ds.n_samples} rows, {ds.n_features} features, {ds.n_classes} classes -> {path}")
    return EXIT_OK


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asyspa-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: config output_dir or runs/<name>)")
    r.add_argument("--seed", type=int, help="override the config seed(s)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="time-to-threshold and speedup table")
    c.add_argument("inputs", nargs="+", help="configs (.json), run directories or metrics CSVs; the first is the baseline")
    c.add_argument("--threshold", type=float, default=1e-2)
    c.add_argument("--metric", default="f_avg_err")
    c.add_argument("--out", help="write the table as CSV")
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("analyze", help="verify a trace against the augmented system")
    a.add_argument("trace")
    a.add_argument("--config", required=True, help="config that produced the trace")
    a.add_argument("--metrics", help="metrics CSV to check against the trace")
    a.add_argument("--b", type=int, help="relay levels (default: worst-case bound)")
    a.add_argument("--out", help="output directory (default: next to the trace)")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("gen-data", help="write a synthetic classification dataset CSV")
    g.add_argument("--n-samples", type=int, required=True)
    g.add_argument("--n-features", type=int, required=True)
    g.add_argument("--n-classes", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, ReconstructionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
