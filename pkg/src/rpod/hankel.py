"""Hankel matrices ``H = Y'X`` and input/output/time selections."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .numerics import ordered_matmul


@dataclass(eq=False)
class HankelMatrix:
    """Dense ``H = Y'X`` with enough provenance to recompute it.

    Rows follow the adjoint ensemble's (trajectory-major) column order,
    columns follow the primal ensemble's.
    """

    H: np.ndarray
    primal_ref: dict
    adjoint_ref: dict

    @property
    def shape(self):
        return self.H.shape


def _ref(ensemble):
    if not hasattr(ensemble, "trajectory_ids"):
        return {}
    return {"trajectory_ids": ensemble.trajectory_ids.copy(),
            "step_indices": ensemble.step_indices.copy()}


def _snapshot_data(x):
    return np.asarray(getattr(x, "data", x))


def build_hankel(primal, adjoint, ordered=True):
    """Inner products of every adjoint snapshot with every primal snapshot.

    The default ordered kernel makes each entry a function of its two
    snapshot columns only, so a sub-Hankel built from selected ensembles
    equals the corresponding submatrix of the full one bit for bit.
    Plain arrays are accepted in place of ensembles (without provenance).
    """
    x, y = _snapshot_data(primal), _snapshot_data(adjoint)
    if x.shape[0] != y.shape[0]:
        raise DimensionError(
            f"primal ensemble has {x.shape[0]} states, adjoint has {y.shape[0]}")
    h = ordered_matmul(y.T, x) if ordered else y.T @ x
    return HankelMatrix(h, _ref(primal), _ref(adjoint))


def _as_index_tuple(values):
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class Selection:
    """Chosen input columns, output rows and snapshot steps.

    All index tuples are sorted ascending and duplicate free.
    """

    input_pick: tuple
    output_pick: tuple
    primal_steps: tuple
    adjoint_steps: tuple
    seed: int = 0

    def __post_init__(self):
        for name in ("input_pick", "output_pick", "primal_steps", "adjoint_steps"):
            vals = _as_index_tuple(getattr(self, name))
            if len(set(vals)) != len(vals):
                raise ConfigError(f"{name} contains duplicates", field=name)
            if any(v < 0 for v in vals):
                raise ConfigError(f"{name} contains negative indices", field=name)
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def r(self):
        return len(self.input_pick)

    @property
    def s(self):
        return len(self.output_pick)

    @property
    def m1(self):
        return len(self.primal_steps)

    @property
    def m2(self):
        return len(self.adjoint_steps)

    def validate(self, p, q):
        if self.input_pick and max(self.input_pick) >= p:
            raise ConfigError(f"input index {max(self.input_pick)} out of range for p={p}",
                              field="input_pick")
        if self.output_pick and max(self.output_pick) >= q:
            raise ConfigError(f"output index {max(self.output_pick)} out of range for q={q}",
                              field="output_pick")

    def p1(self, p):
        """``p x r`` 0/1 matrix with ``B @ p1 == B[:, input_pick]``."""
        m = np.zeros((p, self.r))
        m[list(self.input_pick), np.arange(self.r)] = 1.0
        return m

    def p2(self, q):
        """``s x q`` 0/1 matrix with ``p2 @ C == C[output_pick, :]``."""
        m = np.zeros((self.s, q))
        m[np.arange(self.s), list(self.output_pick)] = 1.0
        return m

    def to_dict(self):
        return {"seed": self.seed,
                "input_pick": list(self.input_pick),
                "output_pick": list(self.output_pick),
                "primal_steps": list(self.primal_steps),
                "adjoint_steps": list(self.adjoint_steps)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["input_pick"], d["output_pick"], d["primal_steps"],
                   d["adjoint_steps"], d.get("seed", 0))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def full(cls, p, q, primal_steps, adjoint_steps, seed=0):
        return cls(range(p), range(q), primal_steps, adjoint_steps, seed)


def apply_selection(sys, sel):
    """Return ``(B_hat, C_hat) = (B p1, p2 C)`` as copies."""
    sel.validate(sys.n_inputs, sys.n_outputs)
    b_hat = sys.B[:, list(sel.input_pick)].copy()
    c_hat = sys.C[list(sel.output_pick), :].copy()
    return b_hat, c_hat


def _induced(ensemble, picks, steps):
    pick_set, step_set = set(picks), set(steps)
    idx = [c for c in range(ensemble.n_snapshots)
           if int(ensemble.trajectory_ids[c]) in pick_set
           and int(ensemble.step_indices[c]) in step_set]
    return np.asarray(idx, dtype=np.int64)


def induced_indices(primal, adjoint, sel):
    """Row and column indices of the full ``H`` selected by `sel`.

    With full ensembles in trajectory-major order the returned indices
    reproduce the sub-Hankel ordering used by the randomized pipeline.
    """
    rows = _induced(adjoint, sel.output_pick, sel.adjoint_steps)
    cols = _induced(primal, sel.input_pick, sel.primal_steps)
    return rows, cols
