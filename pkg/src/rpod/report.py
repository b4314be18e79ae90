"""Error metrics, eigenvalue comparison and cost accounting for ROMs."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError
from .pod.modal import ModalRom, match_eigenvalues, mode_order, rom_simulate
from .textio import format_real

#: Post-transient averages start at this fraction of the horizon.
TRANSIENT_FRACTION = 0.1


@dataclass(eq=False)
class Trajectory:
    states: np.ndarray
    outputs: np.ndarray


def simulate_full(sys, steps, u=None, x0=None):
    """Full-order forced response for steps ``k = 1..steps``.

    `u` is ``p x steps`` with column ``k-1`` applied at step ``k``.
    """
    x = np.zeros(sys.n_states) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x.shape[0] != sys.n_states:
        raise DimensionError(f"x0 has {x.shape[0]} entries, system has {sys.n_states}")
    if u is not None:
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if u.shape != (sys.n_inputs, steps):
            raise DimensionError(f"u must be {sys.n_inputs}x{steps}, got {u.shape}")
    states = np.empty((sys.n_states, steps))
    for k in range(steps):
        x = sys.A @ x
        if u is not None:
            x = x + sys.B @ u[:, k]
        states[:, k] = x
    return Trajectory(states, sys.C @ states)


@dataclass(eq=False)
class ErrorSeries:
    """Relative ROM errors per step, averaged over excitations.

    ``e_output[k-1]`` is the mean over excitations of
    ``|y_true(k) - y_rom(k)| / |y_true(k)|``; steps where the truth is
    zero for every excitation are NaN and listed in ``undefined_*``.
    The ``*_frobenius`` aggregates are ``|Y_true - Y_rom|_F / |Y_true|_F``
    over the stacked series, averaged over excitations, for the whole
    horizon and for steps ``k >= post_start``.
    """

    e_output: np.ndarray
    e_state: np.ndarray
    output_frobenius: float
    state_frobenius: float
    output_frobenius_post: float
    state_frobenius_post: float
    post_start: int
    n_excitations: int
    undefined_output: list = field(default_factory=list)
    undefined_state: list = field(default_factory=list)

    @property
    def steps(self):
        return np.arange(1, self.e_output.size + 1)

    @property
    def output_time_average(self):
        return float(np.nanmean(self.e_output)) if np.any(~np.isnan(self.e_output)) else math.nan

    @property
    def state_time_average(self):
        return float(np.nanmean(self.e_state)) if np.any(~np.isnan(self.e_state)) else math.nan

    def summary(self):
        return {"output_frobenius": self.output_frobenius,
                "state_frobenius": self.state_frobenius,
                "output_frobenius_post": self.output_frobenius_post,
                "state_frobenius_post": self.state_frobenius_post,
                "output_time_average": self.output_time_average,
                "state_time_average": self.state_time_average,
                "post_start": self.post_start,
                "n_excitations": self.n_excitations,
                "undefined_output_steps": list(self.undefined_output),
                "undefined_state_steps": list(self.undefined_state)}


def _excitations(sys, steps, excitation):
    if excitation is None or excitation == "impulse":
        excitation = {"kind": "impulse"}
    kind = excitation.get("kind", "impulse")
    if kind == "impulse":
        inputs = excitation.get("inputs", range(sys.n_inputs))
        out = []
        for j in inputs:
            if not 0 <= j < sys.n_inputs:
                raise ConfigError(f"impulse input {j} out of range", field="inputs")
            u = np.zeros((sys.n_inputs, steps))
            u[j, 0] = 1.0
            out.append(u)
        return out
    if kind == "noise":
        rng = np.random.Generator(np.random.PCG64(int(excitation.get("seed", 0))))
        count = int(excitation.get("count", 1))
        return [rng.standard_normal((sys.n_inputs, steps)) for _ in range(count)]
    raise ConfigError(f"unknown excitation kind {kind!r}", field="excitation")


def _ratio_series(truth, approx):
    num = np.linalg.norm(truth - approx, axis=0)
    den = np.linalg.norm(truth, axis=0)
    out = np.full(den.shape, np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def _frobenius(truth, approx):
    den = np.linalg.norm(truth)
    return np.linalg.norm(truth - approx) / den if den > 0 else math.nan


def _mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def compare_outputs(full, rom, steps, excitation=None):
    """Run the full model and `rom` on the same excitations and compare.

    `excitation` is ``"impulse"`` (default: one impulse per input at step
    1), ``{"kind": "impulse", "inputs": [...]}`` or
    ``{"kind": "noise", "seed": s, "count": n}`` for unit-variance
    Gaussian input sequences shared by both models.
    """
    if rom.B_r.shape[1] != full.n_inputs or rom.C_r.shape[0] != full.n_outputs:
        raise DimensionError("ROM input/output dimensions do not match the full system")
    if rom.n_states != full.n_states:
        raise DimensionError("ROM lifts to a different state dimension")
    post = max(1, int(math.ceil(TRANSIENT_FRACTION * steps)))
    per_out, per_state = [], []
    fro = {"out": [], "state": [], "out_post": [], "state_post": []}
    for u in _excitations(full, steps, excitation):
        truth = simulate_full(full, steps, u)
        red = rom_simulate(rom, steps, u)
        red_states = red.states(rom)
        per_out.append(_ratio_series(truth.outputs, red.outputs))
        per_state.append(_ratio_series(truth.states, red_states))
        fro["out"].append(_frobenius(truth.outputs, red.outputs))
        fro["state"].append(_frobenius(truth.states, red_states))
        fro["out_post"].append(_frobenius(truth.outputs[:, post - 1:], red.outputs[:, post - 1:]))
        fro["state_post"].append(_frobenius(truth.states[:, post - 1:], red_states[:, post - 1:]))

    def average(series):
        s = np.vstack(series)
        defined = ~np.isnan(s)
        total = np.where(defined, s, 0.0).sum(axis=0)
        count = defined.sum(axis=0)
        out = np.full(s.shape[1], np.nan)
        out[count > 0] = total[count > 0] / count[count > 0]
        undefined = (np.flatnonzero(count == 0) + 1).tolist()
        return out, undefined

    e_out, und_out = average(per_out)
    e_state, und_state = average(per_state)
    return ErrorSeries(e_out, e_state, _mean(fro["out"]), _mean(fro["state"]),
                       _mean(fro["out_post"]), _mean(fro["state_post"]), post,
                       len(per_out), und_out, und_state)


@dataclass(eq=False)
class EigenComparison:
    """Matched eigenvalue pairs sorted by descending ``|lambda_a|``."""

    rows: list
    unmatched_a: list
    unmatched_b: list

    @property
    def max_distance(self):
        return max((r[3] for r in self.rows), default=0.0)


def _values(x):
    vals = x.eigenvalues if isinstance(x, ModalRom) else np.asarray(x, dtype=complex).ravel()
    return vals[mode_order(vals)]


def compare_eigenvalues(a, b, top=None, tol=np.inf):
    """Greedy complex-plane matching of two spectra.

    `a` and `b` are ROMs or plain eigenvalue arrays.  With `top`, only
    the `top` largest-modulus values of each set take part.
    """
    va, vb = _values(a), _values(b)
    if top is not None:
        va, vb = va[:top], vb[:top]
    pairs = match_eigenvalues(va, vb, tol)
    rows = [(i, complex(va[i]), complex(vb[j]), d) for i, j, d in pairs]
    used_a = {i for i, _, _ in pairs}
    used_b = {j for _, j, _ in pairs}
    return EigenComparison(
        rows,
        [complex(v) for i, v in enumerate(va) if i not in used_a],
        [complex(v) for j, v in enumerate(vb) if j not in used_b])


@dataclass(frozen=True)
class CostReport:
    """Operation counts and problem sizes of the full and sampled pipelines.

    Markov-parameter cost counts one ``N x N`` matrix-vector product per
    simulated snapshot; ``hankel_flops_*`` is the cost of forming ``Y'X``.
    """

    p: int
    q: int
    M1: int
    M2: int
    r: int
    s: int
    m1: int
    m2: int
    N: int

    @property
    def markov_flops_bpod(self):
        return (self.M1 + self.M2) * self.p * self.q * self.N ** 2

    @property
    def markov_flops_rpod(self):
        return (self.m1 + self.m2) * self.r * self.s * self.N ** 2

    @property
    def hankel_flops_bpod(self):
        return self.q * self.M2 * self.p * self.M1 * self.N

    @property
    def hankel_flops_rpod(self):
        return self.s * self.m2 * self.r * self.m1 * self.N

    @property
    def svd_dims_bpod(self):
        return (self.q * self.M2, self.p * self.M1)

    @property
    def svd_dims_rpod(self):
        return (self.s * self.m2, self.r * self.m1)

    @property
    def ratio(self):
        """``rs/(pq) * m1 m2/(M1 M2)``, the Hankel-size (and assembly) ratio."""
        return (self.r * self.s) / (self.p * self.q) * (self.m1 * self.m2) / (self.M1 * self.M2)

    @property
    def markov_ratio(self):
        return self.markov_flops_rpod / self.markov_flops_bpod

    @property
    def svd_ratio(self):
        """Ratio of cubic dense-SVD costs ``max(dims)^3``."""
        return max(self.svd_dims_rpod) ** 3 / max(self.svd_dims_bpod) ** 3

    @property
    def size_string(self):
        (a, b), (c, d) = self.svd_dims_bpod, self.svd_dims_rpod
        return f"({a} × {b}) : ({c} × {d})"

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("p", "q", "M1", "M2", "r", "s", "m1", "m2", "N")}
        for k in ("markov_flops_bpod", "markov_flops_rpod", "hankel_flops_bpod",
                  "hankel_flops_rpod", "ratio", "markov_ratio", "svd_ratio", "size_string"):
            d[k] = getattr(self, k)
        d["svd_dims_bpod"] = list(self.svd_dims_bpod)
        d["svd_dims_rpod"] = list(self.svd_dims_rpod)
        return d


def cost_report(p, q, M1, M2, r, s, m1, m2, N):
    for name, v in (("p", p), ("q", q), ("M1", M1), ("M2", M2), ("r", r), ("s", s),
                    ("m1", m1), ("m2", m2), ("N", N)):
        if v < 1:
            raise ConfigError(f"{name} must be positive", field=name)
    return CostReport(p, q, M1, M2, r, s, m1, m2, N)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format_real(float(v))
    return str(v)


def write_eigenvalues_csv(path, comparison):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re_a", "im_a", "re_b", "im_b", "distance"])
        for i, za, zb, d in comparison.rows:
            w.writerow([i, _fmt(za.real), _fmt(za.imag), _fmt(zb.real), _fmt(zb.imag), _fmt(d)])


def write_errors_csv(path, series):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "e_output", "e_state"])
        for k, eo, es in zip(series.steps, series.e_output, series.e_state):
            w.writerow([int(k), _fmt(eo), _fmt(es)])


def write_cost_csv(path, cost):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for k, v in cost.to_dict().items():
            if isinstance(v, list):
                v = " x ".join(str(x) for x in v)
            w.writerow([k, _fmt(v)])


def write_summary_json(path, summary):
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
