"""JSON experiment configs: schema, loading and validation.

Two run kinds share one file format. ``"sim"`` (the default) drives the
event simulator; ``"gensubgrad"`` drives the generalized subgradient method.
Unknown fields are rejected everywhere.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .errors import ConfigError

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT_POS = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


GRAPH = _obj({
    "kind": {"enum": ["ring", "ring_plus_k", "exponential", "complete", "single", "edges"]},
    "n": _INT_POS,
    "k": {"type": "integer", "minimum": 1},
    "edges": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                          "minItems": 2, "maxItems": 2}},
    "path": {"type": "string"},
}, ["kind"])

DATASET = {
    "oneOf": [
        {"type": "string"},
        _obj({"synthetic": _obj({
            "n_samples": _INT_POS, "n_features": _INT_POS, "n_classes": {"type": "integer", "minimum": 2},
            "seed": _SEED,
        }, ["n_samples", "n_features", "n_classes"])}, ["synthetic"]),
    ]
}

OBJECTIVE = _obj({
    "kind": {"enum": ["abs_deviation", "quadratic", "zero", "logistic_multiclass", "hinge_svm"]},
    "centers": {"type": "array", "items": {"oneOf": [_NUM, {"type": "array", "items": _NUM}]}},
    "weights": {"type": "array", "items": _POS},
    "dim": _INT_POS,
    "dataset": DATASET,
    "normalize": {"type": "boolean"},
    "categorical": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    "gamma": _NONNEG,
}, ["kind"])

STEPSIZE = _obj({
    "kind": {"enum": ["power", "constant"]},
    "scale": _POS,
    "alpha": _NONNEG,
    "per_sample": {"type": "boolean"},
})

TIMING = _obj({
    "mode": {"enum": ["periodic", "uniform"]},
    "periods": {"type": "array", "items": _POS},
    "base": _POS,
    "beta": _NONNEG,
    "tau_min": _POS,
    "tau_max": _POS,
    "tau_delay": _NONNEG,
    "offsets": {"type": "array", "items": _NONNEG},
    "stragglers": _obj({
        "nodes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "slowdown": {"type": "number", "minimum": 1},
        "mean_wait": _NONNEG,
        "wait_cap": _NONNEG,
    }),
})

TRACE = _obj({"enabled": {"type": "boolean"}, "deliveries": {"type": "boolean"}, "gzip": {"type": "boolean"}})

_X0 = {"oneOf": [_NUM, {"type": "array", "items": {"oneOf": [_NUM, {"type": "array", "items": _NUM}]}}]}

_COMMON = {
    "name": {"type": "string"},
    "kind": {"enum": ["sim", "gensubgrad"]},
    "objective": OBJECTIVE,
    "stepsize": STEPSIZE,
    "x0": _X0,
    "output_dir": {"type": "string"},
}

SIM = _obj({
    **_COMMON,
    "algorithm": {"enum": ["asyspa", "naive", "synspa"]},
    "graph": GRAPH,
    "timing": TIMING,
    "seed": _SEED,
    "seeds": {"type": "array", "items": _SEED, "minItems": 1},
    "max_events": _INT_POS,
    "stop_after": {"enum": ["activations", "instants"]},
    "metrics_every": _INT_POS,
    "metrics": {"type": "array", "items": {"enum": ["k", "t", "f_avg_err", "spread", "l_gap", "stepsize_gap"]}},
    "check_mass": {"type": "boolean"},
    "fstar": {"oneOf": [_NUM, {"enum": ["auto", None]}]},
    "fstar_steps": _INT_POS,
    "threshold": _POS,
    "trace": TRACE,
}, ["graph", "objective"])

GENSUBGRAD = _obj({
    **_COMMON,
    "components": _INT_POS,
    "schedule": _obj({
        "type": {"enum": ["cyclic", "full", "custom"]},
        "selector": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "increments": {"oneOf": [_INT_POS, {"type": "array", "items": _INT_POS, "minItems": 1}]},
        "sigma1": _INT_POS,
        "sigma2": _INT_POS,
    }, ["type"]),
    "steps": _INT_POS,
    "every": _INT_POS,
    "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
}, ["kind", "objective", "schedule", "steps"])


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        parts.append(missing)
    elif err.validator == "additionalProperties" and "'" in err.message:
        parts.append(err.message.split("'")[1])
    return ".".join(p for p in parts if p) or "<root>"


def validate(cfg) -> dict:
    """Check ``cfg`` against the schema; raises :class:`ConfigError` naming the field."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    schema = GENSUBGRAD if cfg.get("kind") == "gensubgrad" else SIM
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _path(err))
    return cfg


def load(path) -> dict:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found", "<file>") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "<file>") from None
    return validate(cfg)
