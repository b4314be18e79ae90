"""Random index selection and the column-sampling rank bounds.

Random draws use numpy's ``Generator(PCG64(seed))``.  For a fixed numpy
version the same seed reproduces the same :class:`Selection` on every
platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .hankel import Selection
from .numerics import RANK_TOL, numerical_rank, svd

INDEX_SETS = ("input", "output", "primal_steps", "adjoint_steps")


@dataclass(frozen=True)
class BoundInputs:
    """Parameters of the column-sampling bound.

    ``eps_bar`` is the smallest fraction of columns in which any spanning
    mode is present.  When sampling with non-uniform ``weights`` pass the
    weighted fraction from :func:`weighted_presence` instead.
    """

    l: int
    eps_bar: float
    beta: float
    weights: tuple | None = None

    def __post_init__(self):
        if self.l < 1:
            raise ConfigError("l must be >= 1", field="l")
        if not 0 < self.eps_bar <= 1:
            raise ConfigError("eps_bar must lie in (0, 1]", field="eps_bar")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)", field="beta")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ConfigError("weights must be nonnegative and sum to 1",
                                  field="weights")
            object.__setattr__(self, "weights", tuple(w.tolist()))


def min_columns(b, log_base=None):
    """Columns needed so a rank-`l` sample fails with probability < beta.

    ``ceil(max(l, log(l/beta)/eps_bar))``; the logarithm is natural unless
    `log_base` is given.  When the ceiling lands exactly on the bound the
    equality is accepted.
    """
    ratio = b.l / b.beta
    lg = math.log(ratio) if log_base is None else math.log(ratio, log_base)
    return int(math.ceil(max(b.l, lg / b.eps_bar)))


def rank_failure_bound(b, m):
    """Union bound ``min(1, l (1 - eps_bar)^M)`` on P(rank < l)."""
    if m < 0:
        raise ConfigError("M must be nonnegative", field="M")
    return min(1.0, b.l * (1.0 - b.eps_bar) ** m)


def gamma(beta):
    """Failure probability of a sub-Hankel built from two beta-level samples."""
    return 1.0 - (1.0 - beta) ** 2


def combined_failure(beta, k):
    """Probability that all of `k` independent sub-Hankel picks are deficient."""
    if not 0 < beta < 1:
        raise ConfigError("beta must lie in (0, 1)", field="beta")
    if k < 1:
        raise ConfigError("K must be >= 1", field="K")
    return gamma(beta) ** k


def presence_fractions(indicator, weights=None):
    """Per-mode fraction ``sum_j 1_i(X_j) pi_j`` of an ``l x ncols`` 0/1 map."""
    ind = np.asarray(indicator, dtype=bool)
    if weights is None:
        return ind.mean(axis=1)
    return ind.astype(float) @ np.asarray(weights, dtype=float)


def weighted_presence(indicator, weights=None):
    """Smallest presence fraction over modes (uniform or weighted)."""
    return float(np.min(presence_fractions(indicator, weights)))


def _draw(rng, pool, size, weights, with_replacement, name):
    pool = np.asarray(pool, dtype=np.int64)
    if size > pool.size and not with_replacement:
        raise ConfigError(f"cannot draw {size} of {pool.size} {name}", field=name)
    if size < 0:
        raise ConfigError(f"{name} count must be nonnegative", field=name)
    p = None
    if weights is not None:
        p = np.asarray(weights, dtype=float)
        if p.shape != pool.shape or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError(f"weights for {name} must be a distribution over the pool",
                              field=f"weights.{name}")
    pos = rng.choice(pool.size, size=size, replace=with_replacement, p=p)
    return np.unique(pool[pos]).tolist()


def draw_selection(p, q, primal_pool, adjoint_pool, r, s, m1, m2, seed,
                   weights=None, with_replacement=False):
    """Sample inputs, outputs and snapshot steps for one sub-Hankel.

    Sampling is without replacement by default; ``with_replacement=True``
    draws i.i.d. and then drops duplicates, so the realized counts can be
    smaller than requested.  `weights` optionally maps any of
    ``"input"``, ``"output"``, ``"primal_steps"``, ``"adjoint_steps"`` to
    sampling probabilities over the corresponding pool.
    """
    weights = weights or {}
    unknown = set(weights) - set(INDEX_SETS)
    if unknown:
        raise ConfigError(f"unknown weight keys {sorted(unknown)}", field="weights")
    if r > p and not with_replacement:
        raise ConfigError(f"r={r} exceeds p={p}", field="r")
    if s > q and not with_replacement:
        raise ConfigError(f"s={s} exceeds q={q}", field="s")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    inputs = _draw(rng, np.arange(p), r, weights.get("input"), with_replacement, "r")
    outputs = _draw(rng, np.arange(q), s, weights.get("output"), with_replacement, "s")
    psteps = _draw(rng, primal_pool, m1, weights.get("primal_steps"),
                   with_replacement, "m1")
    asteps = _draw(rng, adjoint_pool, m2, weights.get("adjoint_steps"),
                   with_replacement, "m2")
    return Selection(inputs, outputs, psteps, asteps, seed)


@dataclass(frozen=True)
class SamplingPlan:
    """A drawn selection together with the request that produced it."""

    selection: Selection
    p: int
    q: int
    primal_pool: tuple
    adjoint_pool: tuple
    r: int
    s: int
    m1: int
    m2: int
    bound_m_primal: int | None = None
    bound_m_adjoint: int | None = None
    beta: float | None = None
    K: int = 1
    weights: dict | None = field(default=None, compare=False)
    with_replacement: bool = False

    @property
    def gamma(self):
        return None if self.beta is None else gamma(self.beta)

    @property
    def bound_satisfying(self):
        if self.bound_m_primal is None or self.bound_m_adjoint is None:
            return False
        sel = self.selection
        return (sel.r * sel.m1 >= self.bound_m_primal
                and sel.s * sel.m2 >= self.bound_m_adjoint)

    def redraw(self, seed):
        """Same request, fresh selection from `seed`."""
        sel = draw_selection(self.p, self.q, self.primal_pool, self.adjoint_pool,
                             self.r, self.s, self.m1, self.m2, seed,
                             self.weights, self.with_replacement)
        return replace(self, selection=sel)

    def to_dict(self):
        return {"selection": self.selection.to_dict(),
                "p": self.p, "q": self.q,
                "primal_pool": list(self.primal_pool),
                "adjoint_pool": list(self.adjoint_pool),
                "r": self.r, "s": self.s, "m1": self.m1, "m2": self.m2,
                "bound_m_primal": self.bound_m_primal,
                "bound_m_adjoint": self.bound_m_adjoint,
                "beta": self.beta, "gamma": self.gamma, "K": self.K,
                "weights": self.weights,
                "with_replacement": self.with_replacement}

    @classmethod
    def from_dict(cls, d):
        return cls(Selection.from_dict(d["selection"]), d["p"], d["q"],
                   tuple(d["primal_pool"]), tuple(d["adjoint_pool"]),
                   d["r"], d["s"], d["m1"], d["m2"],
                   d.get("bound_m_primal"), d.get("bound_m_adjoint"),
                   d.get("beta"), d.get("K", 1), d.get("weights"),
                   d.get("with_replacement", False))


def make_plan(p, q, primal_pool, adjoint_pool, r, s, m1, m2, seed,
              bounds_primal=None, bounds_adjoint=None, K=1, weights=None,
              with_replacement=False):
    """Draw a selection and attach the sampling-bound diagnostics."""
    if K < 1:
        raise ConfigError("K must be >= 1", field="K")
    sel = draw_selection(p, q, primal_pool, adjoint_pool, r, s, m1, m2, seed,
                         weights, with_replacement)
    beta = None
    bm_p = bm_a = None
    if bounds_primal is not None:
        bm_p = min_columns(bounds_primal)
        beta = bounds_primal.beta
    if bounds_adjoint is not None:
        bm_a = min_columns(bounds_adjoint)
        if beta is not None and bounds_adjoint.beta != beta:
            raise ConfigError("primal and adjoint bounds must share beta", field="beta")
        beta = bounds_adjoint.beta
    return SamplingPlan(sel, p, q, tuple(int(v) for v in primal_pool),
                        tuple(int(v) for v in adjoint_pool), r, s, m1, m2,
                        bm_p, bm_a, beta, K, weights, with_replacement)


def empirical_rank_failure(x, m, trials, seed, l=None, weights=None,
                           replace=True, rank_tol=RANK_TOL):
    """Monte-Carlo frequency with which `m` sampled columns have rank < `l`.

    Columns are drawn i.i.d. (``replace=True``) from `weights`, uniform
    by default.  `l` defaults to the numerical rank of `x`.
    """
    x = np.asarray(x)
    if l is None:
        l = svd(x, rank_tol).truncation_rank
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    ncols = x.shape[1]
    failures = 0
    for _ in range(trials):
        idx = rng.choice(ncols, size=m, replace=replace, p=weights)
        sub = x[:, idx]
        if sub.size == 0:
            failures += 1
            continue
        s = np.linalg.svd(sub, compute_uv=False)
        if numerical_rank(s, rank_tol) < l:
            failures += 1
    return failures / trials


def bounds_rows(ls, epss, betas, k):
    """``(l, eps_bar, beta, M, gamma, gamma^K)`` for every combination."""
    rows = []
    for l in ls:
        for eps in epss:
            for beta in betas:
                b = BoundInputs(int(l), float(eps), float(beta))
                rows.append((b.l, b.eps_bar, b.beta, min_columns(b),
                             gamma(b.beta), combined_failure(b.beta, k)))
    return rows
