"""Discrete LTI systems and impulse-response snapshot ensembles."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, DivergenceError
from .numerics import as_matrix, ordered_matmul
from .textio import read_matrix, write_matrix

PRIMAL = "primal"
ADJOINT = "adjoint"

#: Any snapshot entry above this magnitude aborts the simulation.
DIVERGENCE_CAP = 1e12


class StabilityWarning(UserWarning):
    pass


@dataclass(eq=False)
class LtiSystem:
    """``x_k = A x_{k-1} + B u_k``, ``y_k = C x_k`` with step length `dt`."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.B = as_matrix(self.B, "B")
        self.C = as_matrix(self.C, "C")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {self.C.shape}")
        if not self.dt > 0:
            raise ConfigError("dt must be positive", field="dt")

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_outputs(self):
        return self.C.shape[0]

    def spectral_radius(self):
        if self.n_states == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def check_stability(self, tol=1e-9):
        """True when rho(A) <= 1 + tol; warns (never raises) otherwise."""
        rho = self.spectral_radius()
        if rho > 1.0 + tol:
            warnings.warn(f"spectral radius {rho:.6g} exceeds 1", StabilityWarning,
                          stacklevel=2)
            return False
        return True


@dataclass(eq=False)
class SnapshotEnsemble:
    """State snapshots stored column-wise in trajectory-major order.

    Column ``j * n_steps + t`` holds trajectory ``trajectory_ids[...]`` at
    step ``step_indices[...]``; for a primal ensemble trajectory ``i``
    starts from column ``i`` of ``B``, for an adjoint ensemble from row
    ``i`` of ``C``.
    """

    data: np.ndarray
    trajectory_ids: np.ndarray
    step_indices: np.ndarray
    kind: str = PRIMAL
    dt: float = 1.0

    def __post_init__(self):
        self.data = np.asarray(self.data)
        self.trajectory_ids = np.asarray(self.trajectory_ids, dtype=np.int64)
        self.step_indices = np.asarray(self.step_indices, dtype=np.int64)
        if self.kind not in (PRIMAL, ADJOINT):
            raise ConfigError(f"unknown ensemble kind {self.kind!r}", field="kind")
        ncol = self.data.shape[1]
        if self.trajectory_ids.shape != (ncol,) or self.step_indices.shape != (ncol,):
            raise DimensionError("one trajectory id and step index per column required")

    @property
    def n_states(self):
        return self.data.shape[0]

    @property
    def n_snapshots(self):
        return self.data.shape[1]

    @property
    def trajectories(self):
        """Distinct trajectory ids in column order."""
        _, first = np.unique(self.trajectory_ids, return_index=True)
        return self.trajectory_ids[np.sort(first)]

    @property
    def steps(self):
        return np.unique(self.step_indices)

    def column_index(self, trajectory, step):
        hit = np.flatnonzero((self.trajectory_ids == trajectory)
                             & (self.step_indices == step))
        if hit.size == 0:
            raise KeyError((trajectory, step))
        return int(hit[0])

    def save(self, stem):
        """Write ``<stem>.txt`` (matrix) and ``<stem>.json`` (tags)."""
        stem = Path(stem)
        write_matrix(stem.with_suffix(".txt"), self.data)
        tags = {"kind": self.kind,
                "trajectory_ids": self.trajectory_ids.tolist(),
                "step_indices": self.step_indices.tolist(),
                "dt": self.dt}
        stem.with_suffix(".json").write_text(json.dumps(tags, indent=2) + "\n")

    @classmethod
    def load(cls, stem):
        stem = Path(stem)
        tags = json.loads(stem.with_suffix(".json").read_text())
        data = read_matrix(stem.with_suffix(".txt"))
        return cls(data, tags["trajectory_ids"], tags["step_indices"],
                   kind=tags["kind"], dt=tags["dt"])


def _propagator(sys, direction):
    if direction == PRIMAL:
        return sys.A
    if direction == ADJOINT:
        return np.ascontiguousarray(sys.A.T)
    raise ConfigError(f"direction must be 'primal' or 'adjoint', got {direction!r}",
                      field="direction")


def default_initial_columns(sys, direction):
    return sys.B if direction == PRIMAL else np.ascontiguousarray(sys.C.T)


def _check_steps(sample_steps):
    steps = np.asarray(sample_steps, dtype=np.int64).ravel()
    if steps.size and (steps[0] < 0 or np.any(np.diff(steps) <= 0)):
        raise ConfigError("sample_steps must be nonnegative and strictly increasing",
                          field="sample_steps")
    return steps


def simulate_impulse(sys, direction, sample_steps, initial_columns=None,
                     trajectory_ids=None, ordered=True):
    """Collect snapshots of free responses under ``A`` or ``A'``.

    Each trajectory is advanced by repeated multiplication with the saved
    previous state; step 0 is the initial column itself.  With
    ``ordered=True`` (default) the products use :func:`ordered_matmul`,
    which makes every snapshot column bit-identical no matter which other
    trajectories are simulated alongside it.
    """
    prop = _propagator(sys, direction)
    steps = _check_steps(sample_steps)
    if initial_columns is None:
        initial_columns = default_initial_columns(sys, direction)
    x = as_matrix(initial_columns, "initial_columns").copy()
    if x.shape[0] != sys.n_states:
        raise DimensionError(
            f"initial columns have {x.shape[0]} rows, system has {sys.n_states} states")
    ntraj = x.shape[1]
    if trajectory_ids is None:
        trajectory_ids = np.arange(ntraj)
    trajectory_ids = np.asarray(trajectory_ids, dtype=np.int64)
    if trajectory_ids.shape != (ntraj,):
        raise DimensionError("need one trajectory id per initial column")

    saved = []
    if steps.size:
        wanted = set(steps.tolist())
        for k in range(int(steps[-1]) + 1):
            if k > 0:
                x = ordered_matmul(prop, x) if ordered else prop @ x
                if x.size and np.max(np.abs(x)) > DIVERGENCE_CAP:
                    raise DivergenceError(
                        f"{direction} simulation diverged at step {k} "
                        f"(|x| > {DIVERGENCE_CAP:g})", step=k)
            if k in wanted:
                saved.append(x.copy())
    nsteps = steps.size
    dtype = x.dtype
    if nsteps:
        data = np.stack(saved, axis=2).reshape(sys.n_states, ntraj * nsteps)
    else:
        data = np.zeros((sys.n_states, 0), dtype=dtype)
    return SnapshotEnsemble(
        data=data,
        trajectory_ids=np.repeat(trajectory_ids, nsteps),
        step_indices=np.tile(steps, ntraj),
        kind=direction,
        dt=sys.dt,
    )


def state_reconstruction(ensemble, sys, initial_columns=None):
    """Largest deviation of any column from ``M^k`` applied to its start.

    Re-simulates with plain BLAS products, independently of the ordered
    kernel used by :func:`simulate_impulse`.  `initial_columns`, when
    given, is indexed by trajectory id; otherwise ``B`` or ``C'`` is used.
    """
    if ensemble.n_snapshots == 0:
        return 0.0
    prop = sys.A if ensemble.kind == PRIMAL else sys.A.T
    if initial_columns is None:
        initial_columns = default_initial_columns(sys, ensemble.kind)
    start = as_matrix(initial_columns)
    worst = 0.0
    for traj in ensemble.trajectories:
        cols = np.flatnonzero(ensemble.trajectory_ids == traj)
        order = cols[np.argsort(ensemble.step_indices[cols], kind="stable")]
        x = start[:, traj].copy()
        k = 0
        for c in order:
            target = int(ensemble.step_indices[c])
            while k < target:
                x = prop @ x
                k += 1
            worst = max(worst, float(np.linalg.norm(ensemble.data[:, c] - x)))
    return worst


def check_snapshot_budget(order, *ensembles):
    """Warn when `order` exceeds the snapshot count of any ensemble.

    At most ``n_snapshots`` modes can be active in an ensemble, so asking
    for more cannot be satisfied from the data.
    """
    budget = min(e.n_snapshots for e in ensembles)
    if order > budget:
        warnings.warn(f"requested order {order} exceeds snapshot count {budget}",
                      UserWarning, stacklevel=2)
        return False
    return True
