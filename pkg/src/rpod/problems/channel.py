"""Linearized plane-channel flow in the cross-stream (y, z) plane.

State is the wall-normal velocity ``v`` stacked on the wall-normal
vorticity ``eta`` on an ``ny x nz`` node grid, ``y`` in ``[-1, 1]`` with
no-slip walls and ``z`` periodic over ``[0, 2 pi)``:

    dv/dt   = (1/R) lap v + B f
    deta/dt = (1/R) lap eta - U'(y) dv/dz

with the laminar profile ``U = 1 - y^2``.  Second-order finite
differences in both directions, backward Euler in time.  Wall nodes are
held at zero: their rows and columns of ``A`` vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..numerics import solve_linear
from ..snapshots import LtiSystem

FIELDS = ("v", "eta")


@dataclass(frozen=True)
class ChannelConfig:
    """Channel parameters.

    `forcing_z` are z node indices of the body forces on the centreline
    ``y = 0``.  Measurements are taken at the ``2 ny + 2 nz - 4`` nodes on
    the outer ring of the grid, for each field in `fields`; at a wall
    node the value is the wall-normal gradient, i.e. the adjacent interior
    value over ``dy``.
    """

    R: float = 100.0
    ny: int = 21
    nz: int = 21
    dt: float = 1.0
    forcing_z: tuple = (5, 15)
    fields: tuple = ("eta",)
    coupling: bool = True

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigError("Reynolds number must be positive", field="R")
        if self.ny < 5 or self.nz < 4:
            raise ConfigError("channel grid needs ny >= 5 and nz >= 4", field="ny")
        if self.ny % 2 == 0:
            raise ConfigError("ny must be odd so that y = 0 is a grid line", field="ny")
        if not self.dt > 0:
            raise ConfigError("dt must be positive", field="dt")
        if any(not 0 <= z < self.nz for z in self.forcing_z):
            raise ConfigError("forcing z index out of range", field="forcing_z")
        if not self.fields or any(f not in FIELDS for f in self.fields):
            raise ConfigError(f"fields must be drawn from {FIELDS}", field="fields")

    @property
    def dy(self):
        return 2.0 / (self.ny - 1)

    @property
    def dz(self):
        return 2.0 * np.pi / self.nz

    @property
    def y(self):
        return np.linspace(-1.0, 1.0, self.ny)

    def node(self, iy, iz):
        """Flat index of node ``(iy, iz)`` within one field block."""
        return iy * self.nz + iz

    @property
    def block(self):
        return self.ny * self.nz


def boundary_ring(cfg):
    """Ring nodes ``(iy, iz)``: both walls, then the two z-edge columns."""
    ring = [(0, iz) for iz in range(cfg.nz)]
    ring += [(cfg.ny - 1, iz) for iz in range(cfg.nz)]
    for iy in range(1, cfg.ny - 1):
        ring += [(iy, 0), (iy, cfg.nz - 1)]
    return ring


def _interior(cfg):
    return [cfg.node(iy, iz) for iy in range(1, cfg.ny - 1) for iz in range(cfg.nz)]


def _laplacian(cfg):
    """``(1/R) lap`` on interior nodes with zero wall values."""
    idx = {k: i for i, k in enumerate(_interior(cfg))}
    m = len(idx)
    lap = np.zeros((m, m))
    cy, cz = 1.0 / cfg.dy ** 2, 1.0 / cfg.dz ** 2
    for iy in range(1, cfg.ny - 1):
        for iz in range(cfg.nz):
            i = idx[cfg.node(iy, iz)]
            lap[i, i] = -2.0 * (cy + cz)
            for jy in (iy - 1, iy + 1):
                if 0 < jy < cfg.ny - 1:
                    lap[i, idx[cfg.node(jy, iz)]] += cy
            for jz in ((iz - 1) % cfg.nz, (iz + 1) % cfg.nz):
                lap[i, idx[cfg.node(iy, jz)]] += cz
    return lap / cfg.R


def _dz(cfg):
    """``-U'(y) d/dz`` on interior nodes, central and periodic."""
    idx = {k: i for i, k in enumerate(_interior(cfg))}
    m = len(idx)
    op = np.zeros((m, m))
    y = cfg.y
    for iy in range(1, cfg.ny - 1):
        du = -2.0 * y[iy]
        for iz in range(cfg.nz):
            i = idx[cfg.node(iy, iz)]
            op[i, idx[cfg.node(iy, (iz + 1) % cfg.nz)]] -= du / (2 * cfg.dz)
            op[i, idx[cfg.node(iy, (iz - 1) % cfg.nz)]] += du / (2 * cfg.dz)
    return op


def measurement_matrix(cfg):
    n = 2 * cfg.block
    rows = []
    for name in cfg.fields:
        off = 0 if name == "v" else cfg.block
        for iy, iz in boundary_ring(cfg):
            row = np.zeros(n)
            if iy == 0:
                row[off + cfg.node(1, iz)] = 1.0 / cfg.dy
            elif iy == cfg.ny - 1:
                row[off + cfg.node(cfg.ny - 2, iz)] = 1.0 / cfg.dy
            else:
                row[off + cfg.node(iy, iz)] = 1.0
            rows.append(row)
    return np.array(rows)


def build_channel(cfg=None):
    """Discrete-time channel model with ``N = 2 ny nz``.

    The backward-Euler step of the block lower-triangular generator is
    assembled blockwise, so with ``coupling=False`` the ``eta <- v``
    block is exactly zero.
    """
    cfg = cfg or ChannelConfig()
    interior = np.array(_interior(cfg))
    m = interior.size
    lap = _laplacian(cfg)
    step = solve_linear(np.eye(m) - cfg.dt * lap, np.eye(m))
    nb = cfg.block
    a = np.zeros((2 * nb, 2 * nb))
    vv = np.ix_(interior, interior)
    ev = np.ix_(nb + interior, interior)
    ee = np.ix_(nb + interior, nb + interior)
    a[vv] = step
    a[ee] = step
    if cfg.coupling:
        a[ev] = cfg.dt * (step @ (_dz(cfg) @ step))

    mid = (cfg.ny - 1) // 2
    b = np.zeros((2 * nb, len(cfg.forcing_z)))
    for col, iz in enumerate(cfg.forcing_z):
        load = np.zeros(2 * nb)
        load[cfg.node(mid, iz)] = 1.0
        b[:, col] = cfg.dt * (a @ load)
    return LtiSystem(a, b, measurement_matrix(cfg), cfg.dt)


def mirror_z(cfg, x):
    """Reflect a state in z (``iz -> -iz mod nz``).

    Under the reflection ``v`` maps to itself while ``eta`` changes sign,
    since the coupling carries one z-derivative.
    """
    x = np.asarray(x)
    nb = cfg.block
    perm = np.array([cfg.node(iy, (-iz) % cfg.nz)
                     for iy in range(cfg.ny) for iz in range(cfg.nz)])
    out = np.empty_like(x)
    out[:nb] = x[:nb][perm]
    out[nb:] = -x[nb:][perm]
    return out
