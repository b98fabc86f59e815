"""scikit-learn front end: a distributed linear classifier and a feature scaler.

The classifier shards the training set over simulated nodes and fits with one
of the simulated protocols; everything else (traces, bounds, analysis) lives
in the simulator and analysis modules.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from .graph import build_topology
from .objective import Dataset, make_objective, shard_dataset
from .simulator import SimConfig, Timing, run
from .stepsize import StepsizeSchedule

_LOSSES = {"logistic": "logistic_multiclass", "hinge": "hinge_svm"}


class AsySPAClassifier(ClassifierMixin, BaseEstimator):
    """Multiclass linear classifier trained by simulated distributed optimization.

    Parameters
    ----------
    n_nodes : int
        Number of simulated nodes; instances are dealt round-robin.
    topology : {"ring", "ring_plus_k", "exponential", "complete"}
    k : int or None
        Extra out-neighbors for ``ring_plus_k``.
    algorithm : {"asyspa", "naive", "synspa"}
    loss : {"logistic", "hinge"}
    gamma : float
        Total Frobenius regularization weight (split evenly over nodes).
    step_scale, step_alpha : float
        Stepsize ``step_scale / n_samples * k**-step_alpha``.
    max_events : int
        Activation budget of the simulated run.
    beta : float
        Update-rate unevenness: node ``i`` waits ``(i + 1)**beta`` between updates.
    tau_delay : float
        Upper bound on message delays.
    random_state : int
    """

    def __init__(self, n_nodes=4, topology="ring", k=None, algorithm="asyspa", loss="logistic", gamma=1.0,
                 step_scale=1.0, step_alpha=0.5, max_events=2000, beta=0.0, tau_delay=0.0, random_state=0):
        self.n_nodes = n_nodes
        self.topology = topology
        self.k = k
        self.algorithm = algorithm
        self.loss = loss
        self.gamma = gamma
        self.step_scale = step_scale
        self.step_alpha = step_alpha
        self.max_events = max_events
        self.beta = beta
        self.tau_delay = tau_delay
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        if self.loss not in _LOSSES:
            raise ValueError(f"loss must be one of {sorted(_LOSSES)}, got {self.loss!r}")
        self.classes_, codes = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError(f"need at least two classes, got 1 class ({self.classes_[0]!r})")
        ds = Dataset(X, codes, self.classes_.size)
        n = int(self.n_nodes)
        shards = shard_dataset(ds, n)
        objs = [make_objective({"kind": _LOSSES[self.loss], "gamma": self.gamma / n}, sh) for sh in shards]
        cfg = SimConfig(
            graph=build_topology(self.topology, n, self.k),
            objectives=objs,
            schedule=StepsizeSchedule("power", self.step_scale / X.shape[0], self.step_alpha),
            timing=Timing(mode="periodic", periods=tuple((i + 1.0) ** self.beta for i in range(n)), tau_delay=self.tau_delay),
            algorithm=self.algorithm,
            seed=self.random_state,
            max_events=self.max_events,
            record_trace=False,
        )
        self.result_ = run(cfg)
        z = self.result_.z().mean(axis=0)
        self.coef_ = objs[0].weights(z).T.copy()  # (n_classes, n_features)
        self.n_iter_ = self.result_.n_activations
        return self

    def _scores(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X @ self.coef_.T

    def decision_function(self, X):
        """Per-class scores; for two classes, the margin of the second over the first."""
        s = self._scores(X)
        return s[:, 1] - s[:, 0] if s.shape[1] == 2 else s

    def predict(self, X):
        winner = np.argmax(self._scores(X), axis=1)
        return self.classes_[winner]

    def predict_proba(self, X):
        if self.loss != "logistic":
            raise AttributeError("predict_proba is only available for the logistic loss")
        s = self._scores(X)
        s -= s.max(axis=1, keepdims=True)
        p = np.exp(s)
        return p / p.sum(axis=1, keepdims=True)


class NonCategoricalScaler(TransformerMixin, BaseEstimator):
    """Standardize every column except the listed categorical ones.

    Uses the population standard deviation; zero-variance columns are passed
    through unchanged and listed in ``zero_variance_``.
    """

    def __init__(self, categorical=()):
        self.categorical = categorical

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        cat = set(int(c) for c in self.categorical)
        self.mean_ = np.zeros(X.shape[1])
        self.scale_ = np.ones(X.shape[1])
        zero = []
        for j in range(X.shape[1]):
            if j in cat:
                continue
            std = X[:, j].std()
            if std == 0.0:
                zero.append(j)
                continue
            self.mean_[j] = X[:, j].mean()
            self.scale_[j] = std
        self.zero_variance_ = tuple(zero)
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        return X * self.scale_ + self.mean_
