"""Fokker-Planck propagator for a noisy damped Duffing oscillator.

``x'' + eta x' + alpha x + beta x^3 = g w(t)`` with white noise of
intensity `Q` gives, in the state ``(x1, x2) = (x, x')``, the drift
``(x2, -eta x2 - alpha x1 - beta x1^3)`` and the single diffusion
coefficient ``D22 = g^2 Q / 2`` (the noise does not depend on the state,
so there is no noise-induced drift).

The density is discretized by cell-centred finite volumes: upwind drift
fluxes, central diffusive fluxes in ``x2`` and zero flux through the
outer boundary.  Every face flux leaves one cell and enters another, so
the columns of the generator sum to zero and those of the backward-Euler
propagator sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..numerics import solve_linear
from ..snapshots import LtiSystem

MIN_NODES = 12


@dataclass(frozen=True)
class DuffingFpkConfig:
    """Oscillator, noise and grid parameters.

    `drift_scale` multiplies the whole drift field (0 switches transport
    off).  `n_bumps` Gaussian densities of width `bump_width` (in cells)
    centred at seeded random cells serve as both the input columns and
    the output rows.
    """

    eta_damp: float = 10.0
    alpha_lin: float = -15.0
    beta_cubic: float = 30.0
    g_noise: float = 1.0
    Q: float = 1.0
    drift_scale: float = 1.0
    nx1: int = 24
    nx2: int = 24
    x1_range: tuple = (-1.6, 1.6)
    x2_range: tuple = (-3.2, 3.2)
    dt: float = 0.01
    n_bumps: int = 100
    bump_width: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.nx1 < MIN_NODES or self.nx2 < MIN_NODES:
            raise ConfigError(f"FPK grid needs at least {MIN_NODES} cells per axis to "
                              "resolve the two potential wells", field="nx1")
        for name in ("x1_range", "x2_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ConfigError(f"{name} must be increasing", field=name)
        if self.Q < 0:
            raise ConfigError("noise intensity must be nonnegative", field="Q")
        if not self.dt > 0:
            raise ConfigError("dt must be positive", field="dt")
        if self.n_bumps < 1:
            raise ConfigError("need at least one bump", field="n_bumps")

    @property
    def h1(self):
        return (self.x1_range[1] - self.x1_range[0]) / self.nx1

    @property
    def h2(self):
        return (self.x2_range[1] - self.x2_range[0]) / self.nx2

    @property
    def n(self):
        return self.nx1 * self.nx2

    def centers(self):
        x1 = self.x1_range[0] + (np.arange(self.nx1) + 0.5) * self.h1
        x2 = self.x2_range[0] + (np.arange(self.nx2) + 0.5) * self.h2
        return x1, x2

    def index(self, i, j):
        return j * self.nx1 + i


def _upwind(lop, a, b, speed):
    """Flux ``speed * W_upwind`` across the face from cell `a` to `b`."""
    if speed > 0:
        lop[a, a] -= speed
        lop[b, a] += speed
    elif speed < 0:
        lop[b, b] += speed
        lop[a, b] -= speed


def fpk_generator(cfg):
    """Semi-discrete operator ``L_FP`` with zero column sums."""
    n = cfg.n
    lop = np.zeros((n, n))
    x1, x2 = cfg.centers()
    s = cfg.drift_scale
    d22 = 0.5 * cfg.g_noise ** 2 * cfg.Q
    diff = d22 / cfg.h2 ** 2
    for j in range(cfg.nx2):
        for i in range(cfg.nx1):
            k = cfg.index(i, j)
            if i + 1 < cfg.nx1:
                # x1-velocity is x2, constant over the face
                _upwind(lop, k, cfg.index(i + 1, j), s * x2[j] / cfg.h1)
            if j + 1 < cfg.nx2:
                x2f = x2[j] + 0.5 * cfg.h2
                f2 = -cfg.eta_damp * x2f - cfg.alpha_lin * x1[i] - cfg.beta_cubic * x1[i] ** 3
                m = cfg.index(i, j + 1)
                _upwind(lop, k, m, s * f2 / cfg.h2)
                lop[k, k] -= diff
                lop[k, m] += diff
                lop[m, m] -= diff
                lop[m, k] += diff
    return lop


def gaussian_bumps(cfg):
    """``N x n_bumps`` matrix of unit-mass cell densities."""
    rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
    n_bumps = min(cfg.n_bumps, cfg.n)
    centers = np.sort(rng.choice(cfg.n, size=n_bumps, replace=False))
    ii, jj = np.meshgrid(np.arange(cfg.nx1), np.arange(cfg.nx2))
    ii, jj = ii.ravel(), jj.ravel()
    out = np.empty((cfg.n, n_bumps))
    for col, c in enumerate(centers):
        ci, cj = c % cfg.nx1, c // cfg.nx1
        w = np.exp(-0.5 * ((ii - ci) ** 2 + (jj - cj) ** 2) / cfg.bump_width ** 2)
        out[:, col] = w / (w.sum() * cfg.h1 * cfg.h2)
    return out


def build_duffing_fpk(cfg=None):
    """One-step backward-Euler FPK propagator with bump ensembles as ``B``, ``C'``."""
    cfg = cfg or DuffingFpkConfig()
    lop = fpk_generator(cfg)
    a = solve_linear(np.eye(cfg.n) - cfg.dt * lop, np.eye(cfg.n))
    bumps = gaussian_bumps(cfg)
    return LtiSystem(a, bumps, bumps.T.copy(), cfg.dt)
