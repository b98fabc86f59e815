"""Generalized subgradient method with per-component stepsize counters.

One step selects a component ``s = s(k)``, advances its counter ``r_s`` by
``dr`` and moves along that component's subgradient evaluated at a perturbed
point::

    x(k+1) = x(k) - (rho(r_s + 1) + ... + rho(r_s + dr)) * grad f_s(x(k) + eps(k))

Different selectors, increments and perturbations recover cyclic incremental
and plain full-subgradient methods. Both declared schedule bounds are checked
while running.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ScheduleViolation
from .objective import distance_to_set, minimizer_set, total_value
from .stepsize import StepsizeSchedule, window_sum


class GenSchedule:
    """Selector, counter increments, declared bounds and perturbation rule.

    ``selector`` is a sequence of 0-based component ids (repeated periodically)
    or a callable ``k -> id`` with ``k`` starting at 1. ``increments`` is
    ``None`` (always 1), a positive int, or a callable ``(k, id) -> int``.
    ``noise`` is ``None``, ``"freeze"`` (evaluate at the iterate that opened the
    current pass over all components) or a callable ``(k, x) -> vector``.

    The object is stateful: it holds the counters and monitors of one run.
    Call :meth:`reset` before reusing it.
    """

    def __init__(self, n: int, selector, increments=None, sigma1: int | None = None, sigma2: int = 1, noise=None):
        if n < 1:
            raise ParameterError("need at least one component")
        if callable(selector):
            self._select = selector
        else:
            seq = [int(s) for s in selector]
            if not seq or min(seq) < 0 or max(seq) >= n:
                raise ParameterError(f"selector entries must lie in 0..{n - 1}")
            self._select = lambda k, seq=tuple(seq): seq[(k - 1) % len(seq)]
        if increments is None:
            increments = 1
        if isinstance(increments, int):
            if increments < 1:
                raise ParameterError("counter increments must be positive integers")
            self._inc = lambda k, i, d=increments: d
        else:
            self._inc = increments
        if noise not in (None, "freeze") and not callable(noise):
            raise ParameterError("noise must be None, 'freeze' or a callable")
        self.n = n
        self.sigma1 = n if sigma1 is None else int(sigma1)
        self.sigma2 = int(sigma2)
        if self.sigma1 < n or self.sigma2 < 1:
            raise ParameterError("need sigma1 >= n and sigma2 >= 1")
        self.noise = noise
        self.reset()

    def reset(self) -> "GenSchedule":
        self.r = [0] * self.n
        self.last_seen = [0] * self.n
        self.k = 0
        return self

    def select(self, k: int) -> int:
        i = int(self._select(k))
        if not 0 <= i < self.n:
            raise ScheduleViolation(f"selector returned component {i} at step {k}")
        return i

    def advance(self, k: int, i: int) -> tuple:
        """Advance component ``i`` at step ``k``; returns ``(r_old, r_new)``."""
        if k != self.k + 1:
            raise ScheduleViolation(f"steps must be consecutive: expected {self.k + 1}, got {k}")
        dr = int(self._inc(k, i))
        if dr < 1:
            raise ScheduleViolation(f"counter increment {dr} at step {k} is not a positive integer")
        if dr > self.sigma2:
            raise ScheduleViolation(f"counter increment {dr} at step {k} exceeds sigma2={self.sigma2}")
        old = self.r[i]
        self.r[i] += dr
        self.k = k
        self.last_seen[i] = k
        if max(self.r) - min(self.r) > self.sigma2:
            raise ScheduleViolation(f"counter spread {max(self.r) - min(self.r)} at step {k} exceeds sigma2={self.sigma2}")
        if k >= self.sigma1 and min(self.last_seen) <= k - self.sigma1:
            idle = self.last_seen.index(min(self.last_seen))
            raise ScheduleViolation(f"component {idle} not selected in steps {k - self.sigma1 + 1}..{k} (sigma1={self.sigma1})")
        return old, self.r[i]


def make_cyclic_incremental(n: int) -> GenSchedule:
    """Components visited in order ``0, 1, ..., n-1, 0, ...`` with unit increments."""
    return GenSchedule(n, list(range(n)), 1, sigma1=n, sigma2=1)


def make_full_subgradient(n: int) -> GenSchedule:
    """Cyclic schedule whose perturbation freezes each pass at its starting iterate.

    Every ``n`` steps then add up to one full subgradient step with ``rho(pass)``.
    """
    return GenSchedule(n, list(range(n)), 1, sigma1=n, sigma2=1, noise="freeze")


def gen_step(x, k: int, sched: GenSchedule, rho: StepsizeSchedule, objs, eps=None) -> np.ndarray:
    """One step of the method.

    ``eps`` overrides the schedule's perturbation; the ``"freeze"`` rule needs
    the pass anchor and is applied by :func:`gen_run`.
    """
    x = np.asarray(x, dtype=np.float64)
    i = sched.select(k)
    if eps is None and callable(sched.noise):
        eps = np.asarray(sched.noise(k, x), dtype=np.float64)
    old, new = sched.advance(k, i)
    step = window_sum(rho, old + 1, new)
    point = x if eps is None else x + eps
    return x - step * objs[i].subgradient(point)


@dataclass
class GenRun:
    x: np.ndarray  # x[k-1] is the k-th iterate, k = 1..steps+1
    eps_norm: np.ndarray  # ||eps(k)||, k = 1..steps
    noise_sum: np.ndarray  # partial sums of rho(k) ||eps(k)||


def gen_run(x0, steps: int, sched: GenSchedule, rho: StepsizeSchedule, objs) -> GenRun:
    """Iterate ``steps`` times from ``x0`` (a fresh copy of the schedule state is used)."""
    if len(objs) != sched.n:
        raise ParameterError(f"schedule has {sched.n} components, got {len(objs)} objectives")
    sched.reset()
    x = np.array(x0, dtype=np.float64).reshape(-1)
    xs = np.empty((steps + 1, x.size))
    xs[0] = x
    eps_norm = np.zeros(steps)
    noise_sum = np.zeros(steps)
    acc = 0.0
    anchor = x
    for k in range(1, steps + 1):
        eps = None
        if sched.noise == "freeze":
            if (k - 1) % sched.n == 0:
                anchor = x
            eps = anchor - x
        elif callable(sched.noise):
            eps = np.asarray(sched.noise(k, x), dtype=np.float64)
        if eps is not None:
            eps_norm[k - 1] = float(np.linalg.norm(eps))
            acc += rho.rho(k) * eps_norm[k - 1]
        noise_sum[k - 1] = acc
        x = gen_step(x, k, sched, rho, objs, eps=eps)
        xs[k] = x
    return GenRun(xs, eps_norm, noise_sum)


@dataclass
class HolderSpec:
    """Error-bound data ``f(x) - f* >= c_h d(x)^(1/theta)`` around ``opt_set``."""

    theta: float
    c_h: float
    fstar: float
    opt_set: tuple

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ParameterError("theta must lie in (0, 1]")
        if self.c_h <= 0:
            raise ParameterError("c_h must be positive")

    @classmethod
    def from_objectives(cls, objs, theta: float, radius: float = 2.0) -> "HolderSpec":
        from .objective import holder_constant

        opt = minimizer_set(objs)
        if opt is None:
            raise ParameterError("no closed-form optimal set for these objectives")
        return cls(theta, holder_constant(objs, theta, radius), total_value(objs, opt[0]), opt)

    def holds(self, objs, points) -> bool:
        for x in points:
            d = distance_to_set(x, self.opt_set)
            if total_value(objs, x) - self.fstar < self.c_h * d ** (1.0 / self.theta) - 1e-12:
                return False
        return True


def run_and_measure(x0, steps: int, sched: GenSchedule, rho: StepsizeSchedule, objs, holder: HolderSpec | None = None,
                    every: int = 1) -> dict:
    """Run and return ``{k, f_err, dist2, running_min}`` sampled every ``every`` steps,
    plus the scalars ``noise_sum`` and ``noise_ratio = max_k ||eps(k)|| / rho(k)``.

    ``f*`` and the optimal set come from ``holder`` or a closed form; when
    neither is known ``f_err`` holds raw values and ``dist2`` is omitted.
    """
    res = gen_run(x0, steps, sched, rho, objs)
    if holder is not None:
        fstar, opt = holder.fstar, holder.opt_set
    else:
        opt = minimizer_set(objs)
        fstar = total_value(objs, opt[0]) if opt is not None else None
    ks = np.arange(1, steps + 2)
    idx = np.arange(0, steps + 1, every)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    f = np.array([total_value(objs, res.x[j]) for j in range(steps + 1)])
    f_err = f - fstar if fstar is not None else f
    out = {
        "k": ks[idx],
        "f_err": f_err[idx],
        "running_min": np.minimum.accumulate(f_err)[idx],
        "noise_sum": float(res.noise_sum[-1]) if steps else 0.0,
        # smallest c with ||eps(k)|| <= c rho(k) along this run
        "noise_ratio": float(max((e / rho.rho(k) for k, e in enumerate(res.eps_norm, start=1)), default=0.0)),
    }
    if opt is not None:
        out["dist2"] = np.array([distance_to_set(res.x[j], opt) ** 2 for j in idx])
    return out


def write_series_csv(series: dict, path) -> None:
    cols = ["k", "f_err"] + (["dist2"] if "dist2" in series else [])
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*(series[c] for c in cols)):
            fh.write(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]) + "\n")


def freeze_noise_bound(k: int, n: int, rho: StepsizeSchedule, grad_bound: float) -> float:
    """``n * rho(floor((k-1)/n) + 1) * grad_bound``: bound on the frozen-point perturbation."""
    return n * rho.rho((k - 1) // n + 1) * grad_bound


__all__ = [
    "GenRun",
    "GenSchedule",
    "HolderSpec",
    "freeze_noise_bound",
    "gen_run",
    "gen_step",
    "make_cyclic_incremental",
    "make_full_subgradient",
    "run_and_measure",
    "write_series_csv",
]
