"""Two-dimensional pollutant transport (advection-diffusion) benchmark.

Cell-centred finite volumes on a rectangle: central differences for
diffusion, first-order upwind for advection.  Every interior face carries
a flux that leaves one cell and enters its neighbour, so the semi-discrete
operator conserves mass except through the outer boundary:

* walls and obstacle faces carry no diffusive flux (Neumann);
* inflow faces bring in clean fluid (no advective flux);
* outflow faces let the upwind cell value leave with the flow.

Obstacle cells are removed from the dynamics: their rows and columns of
``A`` are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CflError, ConfigError
from ..numerics import solve_linear
from ..snapshots import LtiSystem

SCHEMES = ("implicit", "explicit")


@dataclass(frozen=True)
class GridSpec2D:
    nx: int
    ny: int
    lx: float = 10.0
    ly: float = 10.0
    dt: float = 0.1
    scheme: str = "implicit"

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ConfigError("grid needs at least 3 nodes per axis", field="nx")
        if not (self.lx > 0 and self.ly > 0):
            raise ConfigError("domain lengths must be positive", field="lx")
        if not self.dt > 0:
            raise ConfigError("dt must be positive", field="dt")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}", field="scheme")

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return self.ly / self.ny

    @property
    def n(self):
        return self.nx * self.ny

    def index(self, i, j):
        """Flat index of cell ``(i, j)``; ``i`` runs along x fastest."""
        return j * self.nx + i

    def centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return x, y

    def cell_at(self, x, y):
        if not (0 <= x <= self.lx and 0 <= y <= self.ly):
            raise ConfigError(f"point ({x}, {y}) lies outside the domain", field="sources")
        i = min(int(x / self.hx), self.nx - 1)
        j = min(int(y / self.hy), self.ny - 1)
        return i, j


@dataclass(frozen=True)
class PollutantConfig:
    """Transport coefficients, point sources and rectangular obstacles.

    `sources` holds ``((x, y), strength)``; `obstacles` holds rectangles
    ``(x0, x1, y0, y1)`` in domain coordinates.  `outputs` is ``"full"``
    (``C = I``) or a list of ``(x, y)`` probe points.
    """

    Dx: float = 0.6
    Dy: float = 0.6
    vx: float = 1.0
    vy: float = 0.0
    sources: tuple = (((2.0, 2.5), 1.0), ((2.0, 5.0), 1.0), ((2.0, 7.5), 1.0))
    obstacles: tuple = ((4.0, 5.0, 1.0, 3.0), (5.0, 6.0, 6.5, 8.5), (7.0, 8.0, 4.0, 6.0))
    outputs: object = "full"

    def __post_init__(self):
        if self.Dx < 0 or self.Dy < 0:
            raise ConfigError("dispersion coefficients must be nonnegative", field="Dx")


def obstacle_mask(grid, obstacles):
    """Boolean per-cell mask of cells whose centres fall in any obstacle."""
    xc, yc = grid.centers()
    xx, yy = np.meshgrid(xc, yc)
    mask = np.zeros((grid.ny, grid.nx), dtype=bool)
    for rect in obstacles:
        x0, x1, y0, y1 = rect
        if not (0 <= x0 < x1 <= grid.lx and 0 <= y0 < y1 <= grid.ly):
            raise ConfigError(f"obstacle {rect} lies outside the domain", field="obstacles")
        mask |= (xx >= x0) & (xx <= x1) & (yy >= y0) & (yy <= y1)
    return mask.ravel()


def transport_operator(grid, cfg, mask=None):
    """Semi-discrete generator ``L`` with ``dc/dt = L c``."""
    n = grid.n
    if mask is None:
        mask = np.zeros(n, dtype=bool)
    lop = np.zeros((n, n))
    dxx = cfg.Dx / grid.hx ** 2
    dyy = cfg.Dy / grid.hy ** 2
    ax = cfg.vx / grid.hx
    ay = cfg.vy / grid.hy

    def face(a, b, diff, adv):
        # a -> b is the +axis direction; adv is the signed face velocity / h
        if mask[a] or mask[b]:
            return
        lop[a, a] -= diff
        lop[a, b] += diff
        lop[b, b] -= diff
        lop[b, a] += diff
        if adv > 0:
            lop[a, a] -= adv
            lop[b, a] += adv
        elif adv < 0:
            lop[b, b] += adv
            lop[a, b] -= adv

    for j in range(grid.ny):
        for i in range(grid.nx):
            k = grid.index(i, j)
            if i + 1 < grid.nx:
                face(k, grid.index(i + 1, j), dxx, ax)
            if j + 1 < grid.ny:
                face(k, grid.index(i, j + 1), dyy, ay)
    # outflow through the domain boundary
    for j in range(grid.ny):
        east, west = grid.index(grid.nx - 1, j), grid.index(0, j)
        if ax > 0 and not mask[east]:
            lop[east, east] -= ax
        if ax < 0 and not mask[west]:
            lop[west, west] += ax
    for i in range(grid.nx):
        north, south = grid.index(i, grid.ny - 1), grid.index(i, 0)
        if ay > 0 and not mask[north]:
            lop[north, north] -= ay
        if ay < 0 and not mask[south]:
            lop[south, south] += ay
    return lop


def max_stable_dt(lop):
    """Largest forward-Euler step keeping ``|1 + dt mu| <= 1`` for all modes."""
    mu = np.linalg.eigvals(lop)
    mu = mu[np.abs(mu) > 1e-12]
    if mu.size == 0:
        return np.inf
    return float(np.min(-2.0 * mu.real / np.abs(mu) ** 2))


def _step_matrix(grid, lop, active):
    n = grid.n
    if grid.scheme == "explicit":
        limit = max_stable_dt(lop[np.ix_(active, active)])
        if grid.dt > limit * (1 + 1e-12):
            raise CflError(f"explicit step dt={grid.dt:g} exceeds the stability limit "
                           f"{limit:.6g}", max_stable_dt=limit)
        a = np.eye(n) + grid.dt * lop
    else:
        a = solve_linear(np.eye(n) - grid.dt * lop, np.eye(n))
    return a


def build_pollutant(grid, cfg=None):
    """Discrete-time transport model ``(A, B, C)``.

    ``B`` holds one column per source: a unit load of the given strength
    in the source cell, scaled by ``dt`` and passed through the step
    operator (so an impulse injects ``strength * dt`` per unit area).
    """
    cfg = cfg or PollutantConfig()
    mask = obstacle_mask(grid, cfg.obstacles)
    lop = transport_operator(grid, cfg, mask)
    active = np.flatnonzero(~mask)
    a = _step_matrix(grid, lop, active)
    a[mask] = 0.0
    a[:, mask] = 0.0

    load = np.zeros((grid.n, len(cfg.sources)))
    for col, (pos, strength) in enumerate(cfg.sources):
        k = grid.index(*grid.cell_at(*pos))
        if mask[k]:
            raise ConfigError(f"source at {pos} lies inside an obstacle", field="sources")
        load[k, col] = strength
    b = grid.dt * (a @ load) if grid.scheme == "implicit" else grid.dt * load

    if isinstance(cfg.outputs, str):
        if cfg.outputs != "full":
            raise ConfigError(f"unknown output spec {cfg.outputs!r}", field="outputs")
        c = np.eye(grid.n)
    else:
        c = np.zeros((len(cfg.outputs), grid.n))
        for row, pos in enumerate(cfg.outputs):
            c[row, grid.index(*grid.cell_at(*pos))] = 1.0
    return LtiSystem(a, b, c, grid.dt)
