"""Experiment configuration: defaults, schema validation, seed splitting.

A run draws every random number from one root ``seed``.  Stages get
fixed offsets so that changing one stage never shifts another:

========================  ===========================
stage                     seed
========================  ===========================
problem generation        ``seed + PROBLEM_OFFSET``
noise excitations         ``seed + NOISE_OFFSET``
RPOD selection ``k``      ``rpod.seed + k``, where ``rpod.seed``
                          defaults to ``seed + RPOD_OFFSET``
========================  ===========================
"""

from __future__ import annotations

import copy
import json
from dataclasses import fields
from importlib import resources

import jsonschema
import numpy as np

from .errors import ConfigError

PROBLEM_OFFSET = 0
NOISE_OFFSET = 2
RPOD_OFFSET = 100

OUTPUT_ENV = "RPOD_OUTPUT_DIR"


def _dataclass_defaults(cls, skip=()):
    out = {}
    for f in fields(cls):
        if f.name in skip:
            continue
        out[f.name] = f.default
    return out


def _problem_defaults(kind):
    from .problems.channel import ChannelConfig
    from .problems.fpk import DuffingFpkConfig
    from .problems.pollutant import GridSpec2D, PollutantConfig

    if kind == "pollutant":
        grid = _dataclass_defaults(GridSpec2D)
        grid.update(nx=20, ny=20)
        cfg = _dataclass_defaults(PollutantConfig)
        cfg["sources"] = [[x, y, s] for (x, y), s in cfg["sources"]]
        cfg["obstacles"] = [list(o) for o in cfg["obstacles"]]
        return {**grid, **cfg}
    if kind == "channel":
        d = _dataclass_defaults(ChannelConfig)
        d["forcing_z"] = list(d["forcing_z"])
        d["fields"] = list(d["fields"])
        return d
    if kind == "duffing_fpk":
        d = _dataclass_defaults(DuffingFpkConfig, skip=("seed",))
        d["x1_range"] = list(d["x1_range"])
        d["x2_range"] = list(d["x2_range"])
        return d
    if kind == "synthetic":
        return {"tail_magnitude": 1e-8, "p": 10, "q": 10}
    if kind == "matrix-files":
        return {"dt": 1.0}
    return {}


DEFAULTS = {
    "seed": 0,
    "output_dir": None,
    "snapshots": {"primal_steps": {"start": 0, "stop": 50, "step": 1},
                  "adjoint_steps": {"start": 0, "stop": 50, "step": 1}},
    "method": {"bpod": True, "rpod": None},
    "order": None,
    "rank_tol": 1e-8,
    "match_tol": None,
    "discard_unstable": False,
    "report": {"horizon": 100, "excitation": {"kind": "impulse"}, "top_eigenvalues": None},
}

RPOD_DEFAULTS = {"seed": None, "K": 1, "with_replacement": False, "weights": None,
                 "bounds": None}


def load_schema():
    text = resources.files("rpod").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _schema_error(err):
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    return ConfigError(f"invalid config at {path}: {err.message}", field=path)


def validate(cfg, schema=None):
    schema = schema or load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    err = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if err is not None:
        raise _schema_error(err)


def effective_config(raw):
    """Validate `raw`, fill in every default and validate the result."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", field="<root>")
    schema = load_schema()
    validate(raw, schema)
    cfg = _merge(DEFAULTS, {k: v for k, v in raw.items() if k != "problem"})
    kind = raw["problem"]["kind"]
    cfg["problem"] = _merge({"kind": kind, **_problem_defaults(kind)}, raw["problem"])
    if cfg["method"].get("rpod") is not None:
        cfg["method"]["rpod"] = _merge(RPOD_DEFAULTS, cfg["method"]["rpod"])
    validate(cfg, schema)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})", field="<file>") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", field="<file>") from exc
    return effective_config(raw)


def expand_steps(spec):
    """Step list from an explicit list or a ``{start, stop, step}`` range."""
    if isinstance(spec, dict):
        return list(range(spec.get("start", 0), spec["stop"], spec.get("step", 1)))
    return [int(v) for v in spec]


def stage_seeds(cfg):
    root = cfg["seed"]
    rp = cfg["method"].get("rpod") or {}
    rpod_seed = rp.get("seed")
    return {"problem": root + PROBLEM_OFFSET,
            "noise": root + NOISE_OFFSET,
            "rpod": root + RPOD_OFFSET if rpod_seed is None else rpod_seed}


def resolve_weights(spec, pools):
    """Turn per-set weight specs into probability vectors over `pools`.

    ``{"decay": tau}`` gives ``exp(-k / tau)`` over the pool's step values
    (or indices for input/output pools); lists are normalized as given.
    """
    if not spec:
        return None
    out = {}
    for key, w in spec.items():
        pool = np.asarray(pools[key], dtype=float)
        if isinstance(w, dict):
            vals = np.exp(-(pool - pool.min()) / w["decay"])
        else:
            vals = np.asarray(w, dtype=float)
            if vals.shape != pool.shape:
                raise ConfigError(f"weights for {key} need {pool.size} entries, got {vals.size}",
                                  field=f"method.rpod.weights.{key}")
        total = vals.sum()
        if not total > 0:
            raise ConfigError(f"weights for {key} must not all vanish",
                              field=f"method.rpod.weights.{key}")
        out[key] = vals / total
    return out
