"""Directed communication graphs, topology constructors and asynchrony bounds.

Self-loops are implicit: every node is its own out- and in-neighbor and the
stored edge set never contains ``(i, i)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParameterError

TOPOLOGIES = ("ring", "ring_plus_k", "exponential", "complete")


@dataclass(frozen=True)
class Digraph:
    """Immutable digraph on nodes ``0..n-1``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ParameterError(f"node count must be a positive integer, got {self.n!r}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ParameterError(f"edge ({i}, {j}) references a node outside 0..{self.n - 1}")
            if i == j:
                raise ParameterError(f"explicit self-loop ({i}, {i}); self-loops are implicit")
        object.__setattr__(self, "edges", edges)
        out = [[i] for i in range(self.n)]
        inn = [[i] for i in range(self.n)]
        for i, j in sorted(edges):
            out[i].append(j)
            inn[j].append(i)
        object.__setattr__(self, "_out", tuple(tuple(sorted(o)) for o in out))
        object.__setattr__(self, "_in", tuple(tuple(sorted(o)) for o in inn))

    @classmethod
    def single_node(cls) -> "Digraph":
        """Degenerate one-node graph; the distributed methods reduce to centralized ones."""
        return cls(1, frozenset())

    def out_neighbors(self, i: int) -> tuple:
        return self._out[i]

    def in_neighbors(self, i: int) -> tuple:
        return self._in[i]

    def out_degree(self, i: int) -> int:
        return len(self._out[i])

    def mixing_matrix(self):
        """Column-stochastic matrix of one synchronous push-sum round."""
        import numpy as np

        a = np.zeros((self.n, self.n))
        for i in range(self.n):
            share = 1.0 / self.out_degree(i)
            for j in self._out[i]:
                a[j, i] = share
        return a

    def to_edge_list(self) -> str:
        lines = [f"n={self.n}"]
        lines.extend(f"{i} {j}" for i, j in sorted(self.edges))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Digraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("n="):
            raise ParameterError("edge list must start with a header line 'n=<count>'")
        try:
            n = int(lines[0][2:])
            edges = []
            for ln in lines[1:]:
                i, j = ln.split()
                edges.append((int(i), int(j)))
        except ValueError as exc:
            raise ParameterError(f"malformed edge list: {exc}") from None
        return cls(n, frozenset(edges))

    def save(self, path) -> None:
        Path(path).write_text(self.to_edge_list())

    @classmethod
    def load(cls, path) -> "Digraph":
        return cls.from_edge_list(Path(path).read_text())


def _reachable(adj, start):
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def reachability(g: Digraph) -> list:
    """Set of nodes reachable from each node (BFS)."""
    adj = [g.out_neighbors(i) for i in range(g.n)]
    return [_reachable(adj, i) for i in range(g.n)]


def validate_strongly_connected(g: Digraph) -> bool:
    """True iff every node reaches every other node along directed edges."""
    out_adj = [g.out_neighbors(i) for i in range(g.n)]
    in_adj = [g.in_neighbors(i) for i in range(g.n)]
    # one forward and one backward search from node 0 suffice
    return len(_reachable(out_adj, 0)) == g.n and len(_reachable(in_adj, 0)) == g.n


def _offsets(kind, n, k):
    if kind == "ring":
        return [1]
    if kind == "ring_plus_k":
        if k is None or not 1 <= k <= n - 1:
            raise ParameterError(f"ring_plus_k needs 1 <= k <= n-1, got k={k!r} with n={n}")
        return list(range(1, k + 1))
    if kind == "exponential":
        return [2**j + 1 for j in range(int(math.floor(math.log2(n - 1))) + 1)]
    if kind == "complete":
        return list(range(1, n))
    raise ParameterError(f"unknown topology {kind!r}; expected one of {TOPOLOGIES}")


def build_topology(kind: str, n: int, k: int | None = None) -> Digraph:
    """Construct one of the standard circulant digraphs.

    ``ring``: i -> i+1. ``ring_plus_k``: i -> i+1, ..., i+k.
    ``exponential``: i -> i + 2**j + 1 for j = 0..floor(log2(n-1)).
    ``complete``: every ordered pair. All indices are mod n.
    """
    if not isinstance(n, int) or n < 2:
        raise ParameterError(
            f"{kind} topology needs n >= 2 (use Digraph.single_node() for one node), got n={n!r}"
        )
    edges = set()
    for i in range(n):
        for off in _offsets(kind, n, k):
            j = (i + off) % n
            if j != i:
                edges.add((i, j))
    g = Digraph(n, frozenset(edges))
    if not validate_strongly_connected(g):
        raise ParameterError(f"{kind} topology with n={n} is not strongly connected")
    return g


@dataclass(frozen=True)
class AsynchronyBounds:
    """Event-count bounds implied by bounded activation gaps and delays."""

    n: int
    tau_min: float
    tau_max: float
    tau_delay: float
    b1: int
    b2: int
    b: int


def _floor_ratio(num, den):
    # absorb representation error, e.g. 0.3 / 0.1 = 2.9999999999999996
    return int(math.floor(num / den + 1e-9))


def asynchrony_bounds(n: int, tau_min: float, tau_max: float, tau_delay: float) -> AsynchronyBounds:
    """Compute ``b1 = (n-1) floor(tau_max/tau_min) + 1``, ``b2 = n floor(tau_delay/tau_min)``
    and ``b = b1 + b2``."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not tau_min > 0:
        raise ParameterError(f"tau_min must be positive, got {tau_min}")
    if not (tau_min <= tau_max < math.inf):
        raise ParameterError(f"need tau_min <= tau_max < inf, got {tau_min}, {tau_max}")
    if not tau_delay >= 0:
        raise ParameterError(f"tau_delay must be nonnegative, got {tau_delay}")
    b1 = (n - 1) * _floor_ratio(tau_max, tau_min) + 1
    b2 = n * _floor_ratio(tau_delay, tau_min)
    return AsynchronyBounds(n, float(tau_min), float(tau_max), float(tau_delay), b1, b2, b1 + b2)
