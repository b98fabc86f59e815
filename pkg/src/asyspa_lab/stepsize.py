"""Stepsize schedules and the stepsize-window sums used by adaptive updates."""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError

_CHUNK = 4096
# windows up to this length are summed term by term; longer ones difference prefixes
_DIRECT_WINDOW = 64


class StepsizeSchedule:
    """Stepsize rule ``rho(k) = scale * k**-alpha`` (``power``) or ``scale`` (``constant``).

    Prefix sums ``P(k) = rho(1) + ... + rho(k)`` are cached and grown on demand.
    Each cached block is a float64 cumulative sum offset by a Neumaier-compensated
    running total, so long prefixes keep close to full double precision.
    """

    def __init__(self, kind: str = "power", scale: float = 1.0, alpha: float = 1.0):
        if kind not in ("power", "constant"):
            raise ParameterError(f"unknown stepsize kind {kind!r}")
        if not scale > 0:
            raise ParameterError(f"stepsize scale must be positive, got {scale}")
        if kind == "power" and not 0 < alpha <= 1:
            raise ParameterError(f"power exponent must lie in (0, 1], got {alpha}")
        self.kind = kind
        self.scale = float(scale)
        self.alpha = float(alpha)
        self._prefix = np.zeros(1)  # _prefix[k] = P(k)
        self._hi = 0.0
        self._lo = 0.0

    @classmethod
    def from_dict(cls, spec: dict) -> "StepsizeSchedule":
        return cls(spec.get("kind", "power"), spec.get("scale", 1.0), spec.get("alpha", 1.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "alpha": self.alpha}

    def __repr__(self):
        return f"StepsizeSchedule(kind={self.kind!r}, scale={self.scale!r}, alpha={self.alpha!r})"

    @property
    def square_summable(self) -> bool:
        """Whether the schedule satisfies sum rho = inf and sum rho^2 < inf."""
        return self.kind == "power" and 0.5 < self.alpha <= 1.0

    def rho(self, k: int) -> float:
        if k < 1:
            raise ParameterError(f"stepsize index must be >= 1, got {k}")
        if self.kind == "constant":
            return self.scale
        return self.scale * float(k) ** -self.alpha

    def _terms(self, start, stop):
        ks = np.arange(start, stop, dtype=np.float64)
        return self.scale * ks**-self.alpha

    def _grow(self, k):
        have = len(self._prefix) - 1
        target = max(k, 2 * have, _CHUNK)
        blocks = [self._prefix]
        start = have + 1
        while start <= target:
            stop = min(start + _CHUNK, target + 1)
            terms = self._terms(start, stop)
            blocks.append(self._hi + (self._lo + np.cumsum(terms)))
            s = math.fsum(terms)
            t = self._hi + s
            if abs(self._hi) >= abs(s):
                self._lo += (self._hi - t) + s
            else:
                self._lo += (s - t) + self._hi
            self._hi = t
            start = stop
        self._prefix = np.concatenate(blocks)

    def prefix(self, k: int) -> float:
        """``P(k)``; ``P(0) = 0``."""
        if k < 0:
            raise ParameterError(f"prefix index must be >= 0, got {k}")
        if self.kind == "constant":
            return self.scale * k
        if k >= len(self._prefix):
            self._grow(k)
        return float(self._prefix[k])

    def reserve(self, k: int) -> None:
        """Pre-grow the prefix cache (needed before sharing across threads)."""
        if self.kind == "power" and k >= len(self._prefix):
            self._grow(k)


def window_sum(sched: StepsizeSchedule, l_from: int, l_to: int) -> float:
    """Sum of ``rho(t)`` for ``t = l_from..l_to``; zero for an empty window."""
    if l_from < 1:
        raise ParameterError(f"window start must be >= 1, got {l_from}")
    if l_to < l_from:
        return 0.0
    if sched.kind == "constant":
        return sched.scale * (l_to - l_from + 1)
    if l_to - l_from < _DIRECT_WINDOW:
        return math.fsum(sched.rho(t) for t in range(l_from, l_to + 1))
    return sched.prefix(l_to) - sched.prefix(l_from - 1)


def rate_normalizer_s(alpha: float, k: float) -> float:
    """Cumulative-stepsize normalizer: ``(k**(1-alpha) - 1)/(1-alpha)``, or ``ln k`` at alpha=1."""
    if not 0.5 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0.5, 1], got {alpha}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if alpha == 1.0:
        return math.log(k)
    return (k ** (1.0 - alpha) - 1.0) / (1.0 - alpha)
