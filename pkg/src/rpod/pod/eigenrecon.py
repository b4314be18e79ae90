"""POD bases and eigenfunction reconstruction from snapshot data.

Two routes recover eigenpairs of the full operator from snapshots:

* the auto-correlation route diagonalizes the POD-projected operators
  built from ``X'X`` and ``Y'Y`` separately and keeps the eigenvalues the
  two sides agree on;
* the cross-correlation route builds both bases from the SVD of
  ``H = Y'X``, which makes them biorthogonal and cuts the eigenvalue
  error from first to second order in the snapshot contamination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BreakdownError, DimensionError, EmptyIntersectionError, RankShortfallError
from ..hankel import build_hankel
from ..numerics import RANK_TOL, eig, numerical_rank, solve_linear, svd
from ..snapshots import LtiSystem
from .modal import (
    UNSTABLE_MARGIN,
    ModalRom,
    default_match_tol,
    match_eigenvalues,
    mode_order,
)

BREAKDOWN_TOL = 1e-12


@dataclass(eq=False)
class PodBasis:
    """Right basis `T_r`, optional left basis `T_l` and retained values."""

    T_r: np.ndarray
    T_l: np.ndarray | None
    sigma: np.ndarray
    source: str

    @property
    def order(self):
        return self.T_r.shape[1]


def _data(x):
    return np.asarray(getattr(x, "data", x))


def snapshot_pod(x, order=None, rank_tol=RANK_TOL):
    """Orthonormal POD basis ``T_r = X V Sigma^{-1/2}`` from ``X'X``.

    Evaluated through the thin SVD ``X = U S V'`` (so ``T_r = U``), which
    keeps the rank decision at the singular-value level instead of its
    square.  `sigma` holds the retained eigenvalues ``S**2`` of ``X'X``.
    """
    res = svd(_data(x), rank_tol)
    rank = res.truncation_rank
    order = rank if order is None else order
    if order > rank:
        raise RankShortfallError(
            f"POD order {order} exceeds numerical rank {rank} of the snapshots",
            rank=rank, order=order)
    return PodBasis(res.left[:, :order].copy(), None,
                    res.singular_values[:order] ** 2, "auto")


def _hankel_svd(primal, adjoint, hankel, order, rank_tol):
    h = hankel.H if hankel is not None else build_hankel(primal, adjoint).H
    res = svd(h, rank_tol)
    order = res.truncation_rank if order is None else order
    if order > res.truncation_rank:
        raise RankShortfallError(
            f"Hankel matrix {h.shape[0]}x{h.shape[1]} has numerical rank "
            f"{res.truncation_rank} < requested order {order}",
            rank=res.truncation_rank, order=order)
    return res, order


def _balanced_bases(x, y, res, order):
    scale = res.singular_values[:order] ** -0.5
    t_r = x @ (res.right[:, :order] * scale)
    t_l = y @ (res.left[:, :order] * scale)
    return t_r, t_l


def bpod(primal, adjoint, sys, order=None, rank_tol=RANK_TOL, hankel=None):
    """Balanced POD: bases from the SVD of ``H`` and the projected system.

    Returns ``(basis, reduced)`` where `reduced` is an :class:`LtiSystem`
    holding ``(T_l' A T_r, T_l' B, C T_r)``.
    """
    x, y = _data(primal), _data(adjoint)
    res, order = _hankel_svd(primal, adjoint, hankel, order, rank_tol)
    t_r, t_l = _balanced_bases(x, y, res, order)
    basis = PodBasis(t_r, t_l, res.singular_values[:order].copy(), "bpod")
    reduced = LtiSystem(t_l.T @ (sys.A @ t_r), t_l.T @ sys.B, sys.C @ t_r, sys.dt)
    return basis, reduced


def modal_from_bases(t_r, t_l, sys, sigma, source, discard_unstable=False,
                     diagnostics=None):
    """Diagonalize ``T_l' A T_r`` and build the modal ROM.

    ``Phi' = P^{-1} T_l'`` and ``Psi = T_r P``; each `Psi` column is scaled
    to unit norm with the matching `Phi` column scaled inversely, which
    leaves ``Phi' Psi = I`` and the diagonal ``A_r`` untouched.
    """
    a_tilde = t_l.T @ (sys.A @ t_r)
    e = eig(a_tilde)
    p = e.vectors
    phi_t = solve_linear(p, t_l.T.astype(p.dtype))
    psi = t_r @ p
    norms = np.linalg.norm(psi, axis=0)
    psi = psi / norms
    phi_t = phi_t * norms[:, None]
    perm = mode_order(e.values)
    lam = e.values[perm]
    psi = psi[:, perm]
    phi_t = phi_t[perm]
    diag = dict(diagnostics or {})
    unstable = np.flatnonzero(np.abs(lam) > UNSTABLE_MARGIN)
    diag["unstable_modes"] = unstable.tolist()
    if discard_unstable and unstable.size:
        keep = np.flatnonzero(np.abs(lam) <= UNSTABLE_MARGIN)
        lam, psi, phi_t = lam[keep], psi[:, keep], phi_t[keep]
        diag["discarded_unstable"] = int(unstable.size)
    rom = ModalRom(
        eigenvalues=lam,
        Phi=np.ascontiguousarray(phi_t.T),
        Psi=psi,
        A_r=np.diag(lam),
        B_r=phi_t @ sys.B,
        C_r=sys.C @ psi,
        source=source,
        sigma=np.asarray(sigma, dtype=float),
        dt=sys.dt,
        diagnostics=diag,
    )
    rom.diagnostics["biorthogonality_error"] = rom.biorthogonality_error()
    return rom


def bpod_modal(basis, sys, discard_unstable=False):
    """Modal form of a BPOD reduction (diagonalized ``A_r``)."""
    return modal_from_bases(basis.T_r, basis.T_l, sys, basis.sigma, "bpod",
                            discard_unstable)


def eigenrecon_cross(primal, adjoint, sys, order=None, rank_tol=RANK_TOL,
                     hankel=None, discard_unstable=False, source="cross"):
    """Modal ROM from the cross-correlation ``H = Y'X``.

    `order` defaults to the numerical rank of ``H``.
    """
    x, y = _data(primal), _data(adjoint)
    if x.shape[0] != sys.n_states or y.shape[0] != sys.n_states:
        raise DimensionError("snapshot state dimension does not match the system")
    res, order = _hankel_svd(primal, adjoint, hankel, order, rank_tol)
    t_r, t_l = _balanced_bases(x, y, res, order)
    s = res.singular_values
    diag = {"hankel_shape": [int(v) for v in (y.shape[1], x.shape[1])],
            "hankel_rank": res.truncation_rank,
            "sigma_ratio": float(s[order - 1] / s[0]) if order else 0.0,
            "hankel_spectrum": s.tolist()}
    return modal_from_bases(t_r, t_l, sys, s[:order].copy(), source,
                            discard_unstable, diag)


def biorthogonalize(v_l, v_r, passes=2):
    """Two-sided modified Gram-Schmidt so that ``V_l' V_r = I``.

    Column ``j`` of each set is made orthogonal (bilinear, unconjugated
    product) to the earlier columns of the other set, then `V_l[:, j]` is
    rescaled to give a unit cross product; `V_r` keeps its scaling.  Each
    new column stays in the span of the old columns up to index ``j``.
    A second pass cleans up rounding.
    """
    v_l = np.array(v_l, dtype=np.result_type(v_l, v_r, np.float64))
    v_r = np.array(v_r, dtype=v_l.dtype)
    if v_l.shape != v_r.shape:
        raise DimensionError(f"shape mismatch {v_l.shape} vs {v_r.shape}")
    n = v_l.shape[1]
    for _ in range(passes):
        for j in range(n):
            for i in range(j):
                v_l[:, j] -= v_l[:, i] * (v_r[:, i] @ v_l[:, j])
                v_r[:, j] -= v_r[:, i] * (v_l[:, i] @ v_r[:, j])
            d = v_l[:, j] @ v_r[:, j]
            limit = BREAKDOWN_TOL * np.linalg.norm(v_l[:, j]) * np.linalg.norm(v_r[:, j])
            if not abs(d) > limit:
                raise BreakdownError(
                    f"two-sided Gram-Schmidt broke down at column {j} "
                    f"(|v_r' v_l| = {abs(d):.3e})", column=j)
            v_l[:, j] /= d
    return v_l, v_r


def eigenrecon_auto(primal, adjoint, sys, order_r=None, order_l=None,
                    match_tol=None, rank_tol=RANK_TOL, passes=2):
    """Modal ROM from the auto-correlations ``X'X`` and ``Y'Y``.

    Right eigenpairs come from ``T_r' A T_r``, left ones from
    ``T_l' A' T_l``; only eigenvalues present on both sides (greedy
    matching within `match_tol`) are kept, and the surviving vector sets
    are biorthogonalized before projecting.
    """
    x, y = _data(primal), _data(adjoint)
    right = snapshot_pod(x, order_r, rank_tol)
    left = snapshot_pod(y, order_l, rank_tol)
    er = eig(right.T_r.T @ (sys.A @ right.T_r))
    el = eig(left.T_r.T @ (sys.A.T @ left.T_r))
    if match_tol is None:
        match_tol = default_match_tol(er.values, el.values)
    pairs = match_eigenvalues(er.values, el.values, match_tol)
    if not pairs:
        raise EmptyIntersectionError(
            f"no left/right eigenvalues agree within {match_tol:.3e}")
    ri = np.array([i for i, _, _ in pairs])
    li = np.array([j for _, j, _ in pairs])
    lam = er.values[ri]
    perm = mode_order(lam)
    ri, li, lam = ri[perm], li[perm], lam[perm]
    dists = np.array([d for _, _, d in pairs])[perm]
    v_r = right.T_r @ er.vectors[:, ri]
    v_l = left.T_r @ el.vectors[:, li]
    v_l, v_r = biorthogonalize(v_l, v_r, passes)
    rom = ModalRom(
        eigenvalues=lam,
        Phi=v_l,
        Psi=v_r,
        A_r=v_l.T @ (sys.A @ v_r),
        B_r=v_l.T @ sys.B,
        C_r=sys.C @ v_r,
        source="auto",
        sigma=right.sigma,
        dt=sys.dt,
        diagnostics={"left_eigenvalues": el.values[li].tolist(),
                     "match_distances": dists.tolist(),
                     "order_r": right.order, "order_l": left.order},
    )
    rom.diagnostics["biorthogonality_error"] = rom.biorthogonality_error()
    return rom
