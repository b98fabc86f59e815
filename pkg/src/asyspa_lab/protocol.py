"""Node-local update rules: AsySPA, the naive asynchronous variant and SynSPA.

A node keeps receiving ``(x_share, y_share, l)`` triples into its buffers. On
activation it consumes everything buffered, takes one subgradient step and
broadcasts a fresh triple to its out-neighbors (itself included).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation, RoutingError
from .stepsize import StepsizeSchedule, window_sum


@dataclass
class Message:
    id: int
    src: int
    dst: int
    x_share: np.ndarray
    y_share: float
    l: int
    send_time: float = 0.0
    deliver_time: float = 0.0
    sent_k: int = 0


@dataclass
class NodeState:
    id: int
    x: np.ndarray
    out_degree: int
    y: float = 1.0
    z: np.ndarray = None
    l: int = 1
    local_update_count: int = 1
    x_buf: list = field(default_factory=list)
    y_buf: list = field(default_factory=list)
    l_buf: list = field(default_factory=list)
    id_buf: list = field(default_factory=list)
    stepsize_used: float = 0.0

    def __post_init__(self):
        self.x = np.array(self.x, dtype=np.float64).reshape(-1)
        if self.z is None:
            self.z = self.x / self.y

    @property
    def buffer_sizes(self) -> tuple:
        return (len(self.x_buf), len(self.y_buf), len(self.l_buf))


@dataclass
class Broadcast:
    """Outcome of one activation: the shares to send plus bookkeeping for traces."""

    x_share: np.ndarray
    y_share: float
    l: int
    alpha: float
    l_before: int
    l_after: int
    consumed: list


def initial_broadcast(state: NodeState) -> Broadcast:
    """Shares sent once at start-up, before any activation."""
    return Broadcast(state.x / state.out_degree, state.y / state.out_degree, state.l, 0.0, state.l, state.l, [])


def deposit(state: NodeState, msg: Message) -> NodeState:
    """Store an incoming triple. Repeated receptions from one sender are all kept."""
    if msg.dst != state.id:
        raise RoutingError(f"message {msg.id} for node {msg.dst} delivered to node {state.id}")
    state.x_buf.append(msg.x_share)
    state.y_buf.append(msg.y_share)
    state.l_buf.append(msg.l)
    state.id_buf.append(msg.id)
    return state


def _consume(state):
    w = np.sum(state.x_buf, axis=0)
    y = float(sum(state.y_buf))
    if not y > 0:
        raise InvariantViolation(f"node {state.id}: push-sum weight became {y!r}")
    l_max = max(state.l_buf)
    consumed = state.id_buf
    state.x_buf, state.y_buf, state.l_buf, state.id_buf = [], [], [], []
    return w, y, l_max, consumed


def asyspa_activate(state: NodeState, sched: StepsizeSchedule, obj) -> Broadcast | None:
    """One AsySPA update with the adaptive stepsize ``sum_{t=l}^{l_max} rho(t)``.

    Returns ``None`` (state untouched) when the buffers are empty.
    """
    if not state.x_buf:
        return None
    l_before = state.l
    w, y, l_max, consumed = _consume(state)
    l_max = max(l_max, l_before)
    z = w / y
    alpha = window_sum(sched, l_before, l_max)
    state.x = w - alpha * obj.subgradient(z)
    state.y = y
    state.z = z
    state.l = l_max + 1
    state.stepsize_used += alpha
    return Broadcast(state.x / state.out_degree, y / state.out_degree, state.l, alpha, l_before, state.l, consumed)


def naive_activate(state: NodeState, sched: StepsizeSchedule, obj) -> Broadcast | None:
    """Asynchronous push-sum step with ``rho(local update count)`` and no l-counter."""
    if not state.x_buf:
        return None
    w, y, _, consumed = _consume(state)
    z = w / y
    alpha = sched.rho(state.local_update_count)
    state.local_update_count += 1
    state.x = w - alpha * obj.subgradient(z)
    state.y = y
    state.z = z
    state.stepsize_used += alpha
    return Broadcast(state.x / state.out_degree, y / state.out_degree, state.l, alpha, state.l, state.l, consumed)


ACTIVATE = {"asyspa": asyspa_activate, "naive": naive_activate}


def synspa_round(states, g, k: int, sched: StepsizeSchedule, objs) -> list:
    """One synchronous round: everyone pushes shares, then updates with ``rho(k)``."""
    x_sh = [s.x / g.out_degree(s.id) for s in states]
    y_sh = [s.y / g.out_degree(s.id) for s in states]
    step = sched.rho(k)
    new = []
    for s in states:
        nbrs = g.in_neighbors(s.id)
        w = np.sum([x_sh[j] for j in nbrs], axis=0)
        y = float(sum(y_sh[j] for j in nbrs))
        z = w / y
        new.append((w - step * objs[s.id].subgradient(z), y, z))
    for s, (x, y, z) in zip(states, new):
        s.x, s.y, s.z = x, y, z
        s.stepsize_used += step
    return states
