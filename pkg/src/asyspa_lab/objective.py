"""Convex local objectives with subgradient oracles, plus dataset plumbing.

Decision vectors are flat float arrays. For the classification losses the
weight matrix ``X`` (``n_features x n_classes``) is flattened column-major, so
the weights of class ``j`` occupy ``x[j*n_f:(j+1)*n_f]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ParameterError, StateError

KINDS = ("abs_deviation", "quadratic", "logistic_multiclass", "hinge_svm")


def _as_vector(x, dim):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != dim:
        raise ParameterError(f"decision vector has length {x.shape[0]}, expected {dim}")
    return x


class Objective:
    """Base class. Subclasses implement ``_value`` and ``_subgradient``."""

    kind = ""
    dim = 1

    def value(self, x) -> float:
        return self._value(_as_vector(x, self.dim))

    def subgradient(self, x) -> np.ndarray:
        return self._subgradient(_as_vector(x, self.dim))

    def subgradient_bound(self, radius: float = 1.0) -> float:
        """Upper bound on the subgradient norm over the ball ``||x|| <= radius``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class AbsDeviation(Objective):
    """``weight * ||x - center||_1``; subgradient picks 0 at kinks."""

    kind = "abs_deviation"

    def __init__(self, center, weight: float = 1.0):
        self.center = np.atleast_1d(np.asarray(center, dtype=np.float64)).reshape(-1)
        self.weight = float(weight)
        self.dim = self.center.shape[0]

    def _value(self, x):
        return self.weight * float(np.abs(x - self.center).sum())

    def _subgradient(self, x):
        return self.weight * np.sign(x - self.center)

    def subgradient_bound(self, radius=1.0):
        return abs(self.weight) * math.sqrt(self.dim)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "weight": self.weight}


class Quadratic(Objective):
    """``weight/2 * ||x - center||^2``.

    The gradient is unbounded globally; ``subgradient_bound`` is only valid on
    the given ball, which is how these objectives are used in tests.
    """

    kind = "quadratic"

    def __init__(self, center, weight: float = 1.0):
        self.center = np.atleast_1d(np.asarray(center, dtype=np.float64)).reshape(-1)
        self.weight = float(weight)
        self.dim = self.center.shape[0]

    def _value(self, x):
        d = x - self.center
        return 0.5 * self.weight * float(d @ d)

    def _subgradient(self, x):
        return self.weight * (x - self.center)

    def subgradient_bound(self, radius=1.0):
        return abs(self.weight) * (radius + float(np.linalg.norm(self.center)))

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "weight": self.weight}


class _LinearClassifierLoss(Objective):
    def __init__(self, features, labels, n_classes: int, gamma: float = 1.0):
        s = np.asarray(features, dtype=np.float64)
        if s.ndim != 2:
            raise ParameterError("features must be a 2-d array")
        lab = np.asarray(labels).astype(np.int64).reshape(-1)
        if lab.shape[0] != s.shape[0]:
            raise ParameterError("features and labels disagree on the number of instances")
        if n_classes < 2:
            raise ParameterError(f"need at least 2 classes, got {n_classes}")
        if lab.size and (lab.min() < 0 or lab.max() >= n_classes):
            raise ParameterError(f"labels must lie in 0..{n_classes - 1}")
        self.features = s
        self.labels = lab
        self.n_classes = int(n_classes)
        self.n_features = s.shape[1]
        self.gamma = float(gamma)
        self.dim = self.n_features * self.n_classes
        self._onehot = np.zeros((lab.shape[0], self.n_classes))
        self._onehot[np.arange(lab.shape[0]), lab] = 1.0

    def weights(self, x):
        return x.reshape((self.n_features, self.n_classes), order="F")

    def _flat(self, w):
        return w.reshape(-1, order="F")

    def subgradient_bound(self, radius=1.0):
        row_norms = np.linalg.norm(self.features, axis=1).sum()
        return math.sqrt(2.0) * (self.n_classes - 1) * float(row_norms) + self.gamma * radius

    def to_dict(self):
        return {
            "kind": self.kind,
            "n_instances": int(self.features.shape[0]),
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "gamma": self.gamma,
        }


class LogisticMulticlass(_LinearClassifierLoss):
    """Softmax negative log-likelihood plus ``gamma/2 * ||X||_F^2``."""

    kind = "logistic_multiclass"

    def _scores(self, x):
        return self.features @ self.weights(x)

    def _value(self, x):
        scores = self._scores(x)
        top = scores.max(axis=1, keepdims=True)
        lse = top[:, 0] + np.log(np.exp(scores - top).sum(axis=1))
        nll = float((lse - scores[np.arange(scores.shape[0]), self.labels]).sum())
        return nll + 0.5 * self.gamma * float(x @ x)

    def _subgradient(self, x):
        scores = self._scores(x)
        scores -= scores.max(axis=1, keepdims=True)
        p = np.exp(scores)
        p /= p.sum(axis=1, keepdims=True)
        grad = self.features.T @ (p - self._onehot)
        return self._flat(grad) + self.gamma * x

    def predict_proba(self, x, features):
        scores = np.asarray(features, dtype=np.float64) @ self.weights(_as_vector(x, self.dim))
        scores -= scores.max(axis=1, keepdims=True)
        p = np.exp(scores)
        return p / p.sum(axis=1, keepdims=True)


class HingeSVM(_LinearClassifierLoss):
    """Multiclass hinge loss ``sum_i sum_{j != l_i} max(0, x_j.s_i - x_{l_i}.s_i + 1)``
    plus ``gamma/2 * ||X||_F^2``. Terms exactly at the hinge contribute 0."""

    kind = "hinge_svm"

    def _margins(self, x):
        scores = self.features @ self.weights(x)
        own = scores[np.arange(scores.shape[0]), self.labels][:, None]
        m = scores - own + 1.0
        m[np.arange(scores.shape[0]), self.labels] = 0.0
        return m

    def _value(self, x):
        m = self._margins(x)
        return float(np.maximum(m, 0.0).sum()) + 0.5 * self.gamma * float(x @ x)

    def _subgradient(self, x):
        active = (self._margins(x) > 0.0).astype(np.float64)
        coeff = active.copy()
        coeff[np.arange(coeff.shape[0]), self.labels] = -active.sum(axis=1)
        grad = self.features.T @ coeff
        return self._flat(grad) + self.gamma * x


class ZeroObjective(Objective):
    """Identically zero; turns the optimizers into pure push-sum averaging."""

    kind = "zero"

    def __init__(self, dim: int = 1):
        self.dim = int(dim)

    def _value(self, x):
        return 0.0

    def _subgradient(self, x):
        return np.zeros(self.dim)

    def subgradient_bound(self, radius=1.0):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim}


def value(obj: Objective, x) -> float:
    return obj.value(x)


def subgradient(obj: Objective, x) -> np.ndarray:
    return obj.subgradient(x)


def total_value(objs, x) -> float:
    return math.fsum(o.value(x) for o in objs)


def total_subgradient(objs, x) -> np.ndarray:
    g = np.zeros(objs[0].dim)
    for o in objs:
        g += o.subgradient(x)
    return g


def check_subgradient_fd(obj: Objective, x, h: float = 1e-5) -> float:
    """Max over coordinates of ``|central difference - subgradient| / (1 + |subgradient|)``.

    Only meaningful where ``obj`` is differentiable.
    """
    x = _as_vector(x, obj.dim)
    g = obj.subgradient(x)
    worst = 0.0
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = h
        fd = (obj.value(x + e) - obj.value(x - e)) / (2.0 * h)
        worst = max(worst, abs(fd - g[i]) / (1.0 + abs(g[i])))
    return worst


def minimizer_set(objs) -> tuple:
    """Closed-form optimal set ``(lo, hi)`` of a scalar abs-deviation or quadratic sum.

    Returns ``None`` for sums without a closed form here.
    """
    if not objs or any(o.dim != 1 for o in objs):
        return None
    if all(isinstance(o, Quadratic) for o in objs):
        w = np.array([o.weight for o in objs])
        c = np.array([o.center[0] for o in objs])
        m = float((w * c).sum() / w.sum())
        return (m, m)
    if all(isinstance(o, AbsDeviation) for o in objs):
        # weighted median set of the centers
        pairs = sorted((o.center[0], o.weight) for o in objs)
        total = sum(w for _, w in pairs)
        acc = 0.0
        for idx, (c, w) in enumerate(pairs):
            acc += w
            if math.isclose(acc, total / 2.0, rel_tol=0, abs_tol=1e-12):
                return (c, pairs[idx + 1][0])
            if acc > total / 2.0:
                return (c, c)
    return None


def distance_to_set(x, opt_set) -> float:
    """Euclidean distance from ``x`` to a box/interval ``(lo, hi)`` (scalars broadcast)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    lo, hi = opt_set
    return float(np.linalg.norm(x - np.clip(x, lo, hi)))


def holder_constant(objs, theta: float, radius: float = 2.0, n_grid: int = 2001) -> float:
    """Smallest ``(f(x) - f*) / d(x)**(1/theta)`` over a grid around the optimal set.

    A positive result certifies the error bound on that grid.
    """
    opt = minimizer_set(objs)
    if opt is None:
        raise ParameterError("holder_constant needs a scalar objective with a closed-form optimum")
    fstar = total_value(objs, opt[0])
    grid = np.linspace(opt[0] - radius, opt[1] + radius, n_grid)
    best = math.inf
    for x in grid:
        d = distance_to_set(x, opt)
        if d < 1e-9:
            continue
        best = min(best, (total_value(objs, x) - fstar) / d ** (1.0 / theta))
    return best


def make_objective(spec: dict, dataset: "Dataset | None" = None) -> Objective:
    kind = spec.get("kind")
    if kind == "abs_deviation":
        return AbsDeviation(spec["center"], spec.get("weight", 1.0))
    if kind == "quadratic":
        return Quadratic(spec["center"], spec.get("weight", 1.0))
    if kind == "zero":
        return ZeroObjective(spec.get("dim", 1))
    if kind in ("logistic_multiclass", "hinge_svm"):
        if dataset is None:
            raise ParameterError(f"{kind} objective needs a dataset")
        cls = LogisticMulticlass if kind == "logistic_multiclass" else HingeSVM
        return cls(dataset.features, dataset.labels, dataset.n_classes, spec.get("gamma", 1.0))
    raise ParameterError(f"unknown objective kind {kind!r}")


# ---------------------------------------------------------------- datasets


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    normalized: bool = False
    zero_variance: tuple = ()
    categorical: tuple = field(default=())

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.int64).reshape(-1)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ParameterError("dataset features must be (n_samples, n_features) matching labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ParameterError(f"labels must lie in 0..{self.n_classes - 1}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def normalize(ds: Dataset, categorical_columns=()) -> Dataset:
    """Standardize every non-categorical column with its mean and population std.

    Zero-variance columns are left as they are and listed in ``zero_variance``.
    """
    if ds.normalized:
        raise StateError("dataset is already normalized")
    cat = set(int(c) for c in categorical_columns)
    out = ds.features.copy()
    flagged = []
    for j in range(ds.n_features):
        if j in cat:
            continue
        col = ds.features[:, j]
        std = col.std()
        if std == 0.0:
            flagged.append(j)
            continue
        out[:, j] = (col - col.mean()) / std
    return replace(
        ds, features=out, normalized=True, zero_variance=tuple(flagged), categorical=tuple(sorted(cat))
    )


def write_dataset_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(ds.n_features)] + ["label"])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


def read_dataset_csv(path, n_classes: int | None = None) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_f = len(header) - 1
        if header != [f"f{j}" for j in range(n_f)] + ["label"]:
            raise ParameterError(f"{path}: header must be f0..f{n_f - 1},label")
        rows = [r for r in reader if r]
    feats = np.array([[float(v) for v in r[:n_f]] for r in rows]).reshape(len(rows), n_f)
    labels = np.array([int(r[n_f]) for r in rows], dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if labels.size else 0
    return Dataset(feats, labels, n_classes)


COVERTYPE_CATEGORICAL = tuple(range(10, 54))


def load_covertype(path, add_bias: bool = True) -> Dataset:
    """Read the raw UCI ``covtype.data`` file (54 features, labels 1..7).

    Labels are shifted to 0..6. With ``add_bias`` a constant column is appended
    (55 features); it is zero-variance, so normalization leaves it intact.
    """
    raw = np.loadtxt(path, delimiter=",", dtype=np.float64)
    feats = raw[:, :54]
    if add_bias:
        feats = np.hstack([feats, np.ones((feats.shape[0], 1))])
    return Dataset(feats, raw[:, 54].astype(np.int64) - 1, 7, categorical=COVERTYPE_CATEGORICAL)


def make_synthetic_dataset(n_samples: int, n_features: int, n_classes: int, seed: int = 0) -> Dataset:
    """Noisy linearly separable multiclass data, deterministic per seed."""
    if n_samples < 1 or n_features < 1:
        raise ParameterError("n_samples and n_features must be positive")
    if n_classes < 2:
        raise ParameterError(f"need at least 2 classes, got {n_classes}")
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.normal(size=(n_features, n_classes))
    s = rng.normal(size=(n_samples, n_features))
    scores = s @ w + rng.normal(scale=0.5, size=(n_samples, n_classes))
    return Dataset(s, scores.argmax(axis=1), n_classes)


def shard_dataset(ds: Dataset, n_nodes: int) -> list:
    """Split instances over nodes: the first ``n_nodes * (n_s // n_nodes)`` rows are
    dealt round-robin, the leftover rows go to the last node."""
    if n_nodes < 1:
        raise ParameterError("need at least one node")
    per = ds.n_samples // n_nodes
    if per == 0:
        raise ParameterError(f"{ds.n_samples} instances cannot cover {n_nodes} nodes")
    idx = [list(range(i, per * n_nodes, n_nodes)) for i in range(n_nodes)]
    idx[-1].extend(range(per * n_nodes, ds.n_samples))
    return [
        Dataset(ds.features[ix], ds.labels[ix], ds.n_classes, ds.normalized, ds.zero_variance, ds.categorical)
        for ix in idx
    ]
