"""Synthetic systems and ensembles with known spectral ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericalError
from ..numerics import solve_linear
from ..pod.modal import mode_order
from ..snapshots import LtiSystem

MAX_CONDITION = 1e6
RETRIES = 50
_IMAG_TOL = 1e-14


@dataclass(eq=False)
class SyntheticTruth:
    """Exact eigenpairs of a synthetic ``A``.

    Columns of `right` are unit-norm right eigenvectors; `left` is scaled
    so that ``left.T @ right = I``.  Entries are sorted by descending
    modulus.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    n_dominant: int
    S: np.ndarray

    @property
    def dominant(self):
        return self.eigenvalues[:self.n_dominant]


def _close_conjugates(values):
    out = []
    for z in values:
        z = complex(z)
        if any(abs(z - w) == 0.0 for w in out):
            continue
        out.append(z)
        if abs(z.imag) > _IMAG_TOL and not any(abs(z.conjugate() - w) == 0.0 for w in values):
            out.append(z.conjugate())
    return out


def _block_diagonal(values):
    """Real block form of a conjugate-closed spectrum plus its eigenvectors."""
    n = len(values)
    d = np.zeros((n, n))
    vecs = np.zeros((n, n), dtype=complex)
    lam = np.zeros(n, dtype=complex)
    used = [False] * n
    i = 0
    for k, z in enumerate(values):
        if used[k]:
            continue
        used[k] = True
        if abs(z.imag) <= _IMAG_TOL:
            d[i, i] = z.real
            vecs[i, i] = 1.0
            lam[i] = z.real
            i += 1
            continue
        partner = next(j for j in range(n) if not used[j] and values[j] == z.conjugate())
        used[partner] = True
        a, b = z.real, abs(z.imag)
        d[i:i + 2, i:i + 2] = [[a, b], [-b, a]]
        # [[a, b], [-b, a]] (1, +-i) = (a +- ib) (1, +-i)
        vecs[i, i], vecs[i + 1, i] = 1.0, 1j
        vecs[i, i + 1], vecs[i + 1, i + 1] = 1.0, -1j
        lam[i], lam[i + 1] = complex(a, b), complex(a, -b)
        i += 2
    return d, vecs, lam


def build_synthetic(n, dominant, tail_magnitude, seed, p=10, q=10, tail=None,
                    max_condition=MAX_CONDITION, retries=RETRIES):
    """Random real system ``A = S D S^{-1}`` with a prescribed spectrum.

    Parameters
    ----------
    n : int
        State dimension.
    dominant : sequence of complex
        Leading eigenvalues, ``|lambda| < 1``.  Missing conjugates of
        nonreal entries are added so that ``A`` stays real.
    tail_magnitude : float
        The remaining eigenvalues are real, distinct and spread over
        ``[tail_magnitude / 2, tail_magnitude]``.
    seed : int
        Seeds ``S``, ``B`` and ``C``.
    tail : sequence, optional
        Explicit tail eigenvalues (overrides `tail_magnitude` spreading).

    Returns
    -------
    (LtiSystem, SyntheticTruth)
    """
    dom = _close_conjugates(dominant)
    if len(dom) > n:
        raise ConfigError(f"{len(dom)} dominant eigenvalues do not fit n={n}", field="n")
    if any(abs(z) >= 1 for z in dom):
        raise ConfigError("dominant eigenvalues must satisfy |lambda| < 1", field="dominant")
    n_tail = n - len(dom)
    if tail is None:
        if n_tail and not 0 <= tail_magnitude < min(abs(z) for z in dom):
            raise ConfigError("tail_magnitude must be below min |dominant|",
                              field="tail_magnitude")
        tail = tail_magnitude * np.linspace(1.0, 0.5, n_tail) if n_tail else []
    tail = [complex(t) for t in tail]
    if len(tail) != n_tail:
        raise ConfigError(f"need {n_tail} tail eigenvalues, got {len(tail)}", field="tail")
    spectrum = dom + _close_conjugates(tail)
    d, vd, lam = _block_diagonal(spectrum)

    rng = np.random.Generator(np.random.PCG64(int(seed)))
    for _ in range(retries):
        s = rng.standard_normal((n, n))
        if np.linalg.cond(s) <= max_condition:
            break
    else:
        raise NumericalError(f"no eigenvector matrix with condition <= {max_condition:g} "
                             f"after {retries} draws")
    b = rng.standard_normal((n, p))
    c = rng.standard_normal((q, n))
    a = solve_linear(s.T, (s @ d).T).T

    right = s @ vd
    right = right / np.linalg.norm(right, axis=0)
    left = solve_linear(right.T, np.eye(n, dtype=complex))
    perm = mode_order(lam)
    n_dom = len(dom)
    truth = SyntheticTruth(lam[perm], right[:, perm], left[:, perm], n_dom, s)
    return LtiSystem(a, b, c), truth


def build_presence_ensemble(n_rows, n_cols, fractions, seed):
    """Rank-``l`` ensemble where mode ``i`` appears in a known share of columns.

    Mode ``i`` (an orthonormal direction) is active in exactly
    ``round(fractions[i] * n_cols)`` randomly placed columns, with a
    standard normal coefficient.  Returns ``(X, indicator)`` where
    ``indicator[i, j]`` marks mode ``i`` active in column ``j``.
    """
    fractions = np.asarray(fractions, dtype=float)
    l = fractions.size
    if l > n_rows:
        raise ConfigError(f"rank {l} exceeds {n_rows} rows", field="fractions")
    if np.any(fractions <= 0) or np.any(fractions > 1):
        raise ConfigError("presence fractions must lie in (0, 1]", field="fractions")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    basis, _ = np.linalg.qr(rng.standard_normal((n_rows, l)))
    indicator = np.zeros((l, n_cols), dtype=bool)
    coeff = np.zeros((l, n_cols))
    for i, eps in enumerate(fractions):
        k = max(1, int(round(eps * n_cols)))
        cols = rng.choice(n_cols, size=k, replace=False)
        indicator[i, cols] = True
        coeff[i, cols] = rng.standard_normal(k)
    return basis @ coeff, indicator


def contaminated_snapshots(vectors, coeffs, tail_vectors, delta, eps):
    """``vectors @ coeffs + eps * tail_vectors @ delta``, made real.

    Builds snapshots inside an invariant subspace plus a planted
    contamination of size `eps` along out-of-subspace modes.
    """
    x = vectors @ coeffs + eps * (tail_vectors @ delta)
    if np.iscomplexobj(x):
        if np.max(np.abs(x.imag)) > 1e-10 * max(1.0, np.max(np.abs(x))):
            raise NumericalError("contaminated snapshots are not real; "
                                 "coefficients must respect conjugate pairs")
        x = x.real
    return np.ascontiguousarray(x)
