"""Modal reduced-order models: container, simulation, matching, storage."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DimensionError, NumericalError
from ..snapshots import LtiSystem
from ..textio import read_matrix, write_matrix

#: Modes with |lambda| above this are flagged as unstable.
UNSTABLE_MARGIN = 1.0 + 1e-9


@dataclass(eq=False)
class ModalRom:
    """Reduced model in modal coordinates.

    ``psi_k = A_r psi_{k-1} + B_r u_k``, ``y_k = C_r psi_k``, with the full
    state approximated by ``Psi @ psi`` and projected by ``Phi.T @ x``.
    `Phi` holds left and `Psi` right modal vectors, ``Phi.T @ Psi = I``.
    """

    eigenvalues: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    A_r: np.ndarray
    B_r: np.ndarray
    C_r: np.ndarray
    source: str
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dt: float = 1.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self):
        return len(self.eigenvalues)

    @property
    def n_states(self):
        return self.Psi.shape[0]

    @property
    def is_diagonal(self):
        a = self.A_r
        return np.array_equal(a, np.diag(np.diag(a)))

    def unstable_modes(self):
        return np.flatnonzero(np.abs(self.eigenvalues) > UNSTABLE_MARGIN)

    def biorthogonality_error(self):
        return float(np.max(np.abs(self.Phi.T @ self.Psi - np.eye(self.order)),
                            initial=0.0))

    def select(self, idx):
        """ROM restricted to the modes at positions `idx`."""
        idx = np.asarray(idx, dtype=np.int64)
        return ModalRom(self.eigenvalues[idx], self.Phi[:, idx], self.Psi[:, idx],
                        self.A_r[np.ix_(idx, idx)], self.B_r[idx], self.C_r[:, idx],
                        self.source, self.sigma, self.dt, dict(self.diagnostics))


def mode_order(values):
    """Permutation sorting eigenvalues by descending modulus.

    Equal moduli (conjugate pairs) put the positive imaginary part first.
    """
    values = np.asarray(values)
    return np.lexsort((-values.imag, -np.abs(values)))


def match_eigenvalues(a, b, tol=np.inf):
    """Greedy nearest-neighbour matching of two complex point sets.

    All candidate pairs are visited by increasing distance, ties broken
    by smaller index in `a` then in `b`; a pair is accepted when neither
    point is taken yet and the distance is within `tol`.  Returns
    ``(i, j, distance)`` triples sorted by ``i``.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 or b.size == 0:
        return []
    d = np.abs(a[:, None] - b[None, :])
    ii, jj = np.meshgrid(np.arange(a.size), np.arange(b.size), indexing="ij")
    flat = np.lexsort((jj.ravel(), ii.ravel(), d.ravel()))
    used_a = np.zeros(a.size, bool)
    used_b = np.zeros(b.size, bool)
    pairs = []
    for f in flat:
        i, j = int(ii.flat[f]), int(jj.flat[f])
        dist = float(d.flat[f])
        if dist > tol:
            break
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        pairs.append((i, j, dist))
        if used_a.all() or used_b.all():
            break
    return sorted(pairs)


def hausdorff(a, b):
    """Hausdorff distance between two finite sets in the complex plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return np.inf
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def default_match_tol(*value_sets):
    """``1e-6 * max |lambda|`` over the given sets."""
    mags = [np.max(np.abs(v)) for v in value_sets if len(v)]
    return 1e-6 * (max(mags) if mags else 1.0)


@dataclass(eq=False)
class RomTrajectory:
    outputs: np.ndarray
    modal_states: np.ndarray

    def states(self, rom):
        """Lift modal states back to the full state space."""
        return _maybe_real(rom.Psi @ self.modal_states)


def _maybe_real(z, tol=1e-8):
    if not np.iscomplexobj(z):
        return z
    scale = max(1.0, float(np.max(np.abs(z), initial=0.0)))
    if np.max(np.abs(z.imag), initial=0.0) <= tol * scale:
        return np.ascontiguousarray(z.real)
    return z


def rom_simulate(rom, steps, u=None, x0=None):
    """Run the modal recursion for steps ``k = 1..steps``.

    `u` is ``p x steps`` (column ``k-1`` is ``u_k``); `x0` is projected
    with ``Phi.T``.  Outputs are returned real when their imaginary part
    is negligible.
    """
    n = rom.order
    psi = np.zeros(n, dtype=complex)
    if x0 is not None:
        x0 = np.asarray(x0).ravel()
        if x0.shape[0] != rom.n_states:
            raise DimensionError(f"x0 has {x0.shape[0]} entries, ROM lifts to {rom.n_states}")
        psi = rom.Phi.T @ x0
    if u is not None:
        u = np.asarray(u)
        if u.ndim == 1:
            u = u[:, None]
        if u.shape != (rom.B_r.shape[1], steps):
            raise DimensionError(f"u must be {rom.B_r.shape[1]}x{steps}, got {u.shape}")
    diag = np.diag(rom.A_r) if rom.is_diagonal else None
    states = np.empty((n, steps), dtype=complex)
    for k in range(steps):
        psi = diag * psi if diag is not None else rom.A_r @ psi
        if u is not None:
            psi = psi + rom.B_r @ u[:, k]
        states[:, k] = psi
    return RomTrajectory(_maybe_real(rom.C_r @ states), states)


@dataclass(eq=False)
class RealModalForm:
    """Real block-diagonal realization of a conjugate-closed modal ROM."""

    system: LtiSystem
    lift: np.ndarray
    project: np.ndarray


def realify(rom, tol=1e-8):
    """Replace each conjugate pair by a real 2x2 rotation block.

    For a pair ``(lambda, conj(lambda))`` the real coordinates are the
    real and imaginary parts of the first modal coordinate.
    """
    if not rom.is_diagonal:
        raise NumericalError("realify needs a diagonal modal ROM")
    lam = rom.eigenvalues
    n = rom.order
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    a = np.zeros((n, n))
    b = np.zeros((n, rom.B_r.shape[1]))
    c = np.zeros((rom.C_r.shape[0], n))
    lift = np.zeros((rom.n_states, n))
    proj = np.zeros((n, rom.n_states))
    i = 0
    while i < n:
        z = lam[i]
        if abs(z.imag) <= tol * scale:
            a[i, i] = z.real
            b[i] = rom.B_r[i].real
            c[:, i] = rom.C_r[:, i].real
            lift[:, i] = rom.Psi[:, i].real
            proj[i] = rom.Phi[:, i].real
            i += 1
            continue
        if i + 1 >= n or abs(lam[i + 1] - np.conj(z)) > tol * scale:
            raise NumericalError(f"mode {i} has no conjugate partner")
        lr, li = z.real, z.imag
        a[i:i + 2, i:i + 2] = [[lr, -li], [li, lr]]
        b[i], b[i + 1] = rom.B_r[i].real, rom.B_r[i].imag
        c[:, i], c[:, i + 1] = 2 * rom.C_r[:, i].real, -2 * rom.C_r[:, i].imag
        lift[:, i], lift[:, i + 1] = 2 * rom.Psi[:, i].real, -2 * rom.Psi[:, i].imag
        proj[i], proj[i + 1] = rom.Phi[:, i].real, rom.Phi[:, i].imag
        i += 2
    return RealModalForm(LtiSystem(a, b, c, rom.dt), lift, proj)


_MATRICES = ("Phi", "Psi", "A_r", "B_r", "C_r")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def save_rom(rom, directory, plan=None):
    """Write matrices plus ``manifest.json`` into `directory`."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name in _MATRICES:
        write_matrix(d / f"{name}.txt", getattr(rom, name))
    manifest = {
        "order": rom.order,
        "eigenvalues": [[float(z.real), float(z.imag)] for z in rom.eigenvalues],
        "source": rom.source,
        "sigma": [float(s) for s in rom.sigma],
        "dt": rom.dt,
        "plan": _jsonable(plan),
        "diagnostics": _jsonable(rom.diagnostics),
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_rom(directory):
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    mats = {name: read_matrix(d / f"{name}.txt") for name in _MATRICES}
    lam = np.array([complex(re, im) for re, im in manifest["eigenvalues"]])
    return ModalRom(lam, mats["Phi"], mats["Psi"], mats["A_r"], mats["B_r"], mats["C_r"],
                    manifest["source"], np.array(manifest["sigma"]), manifest["dt"],
                    manifest.get("diagnostics", {}))
