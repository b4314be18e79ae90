"""Dense linear-algebra kernels.

SVD, eigendecomposition and linear solves delegate to LAPACK through
scipy; this module adds the input validation, truncation rule and
failure semantics the rest of the package relies on.  It also provides
:func:`ordered_matmul`, a slow-but-reproducible matrix product whose
entries do not depend on the shape of the surrounding operands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConvergenceError,
    DefectiveMatrixError,
    DimensionError,
    SingularMatrixError,
)

#: Default relative threshold below which singular values count as zero.
RANK_TOL = 1e-8
#: Largest condition estimate accepted by :func:`solve_linear`.
MAX_CONDITION = 1e12

_ORDERED_BLOCK = 1 << 17


def as_matrix(a, name="matrix"):
    """Return `a` as a finite 2-D float or complex array.

    1-D input is promoted to a column.  Raises ``ValueError`` when any
    entry is NaN or infinite.
    """
    m = np.asarray(a)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.iscomplexobj(m):
        m = m.astype(np.float64, copy=False)
    else:
        m = m.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def numerical_rank(singular_values, rank_tol=RANK_TOL):
    """Smallest k with sigma[k] <= rank_tol * sigma[0] (0-based)."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = left @ diag(singular_values) @ right.conj().T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    truncation_rank: int

    def truncated(self, k=None):
        """Leading `k` triplets (default: the numerical rank)."""
        k = self.truncation_rank if k is None else k
        return SvdResult(self.left[:, :k], self.singular_values[:k],
                         self.right[:, :k], min(k, self.truncation_rank))

    def reconstruct(self):
        return (self.left * self.singular_values) @ self.right.conj().T


def svd(m, rank_tol=RANK_TOL):
    """Thin SVD with singular values sorted nonincreasing.

    ``gesdd`` is tried first and ``gesvd`` is the fallback; if both fail
    a :class:`ConvergenceError` naming the matrix shape is raised.
    """
    m = as_matrix(m)
    if m.size == 0:
        raise DimensionError("cannot take the SVD of an empty matrix")
    for driver in ("gesdd", "gesvd"):
        try:
            u, s, vh = sla.svd(m, full_matrices=False, lapack_driver=driver,
                               check_finite=False)
            break
        except (np.linalg.LinAlgError, ValueError):
            continue
    else:
        raise ConvergenceError(
            f"SVD did not converge for {m.shape[0]}x{m.shape[1]} matrix")
    return SvdResult(u, s, vh.conj().T, numerical_rank(s, rank_tol))


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray
    vectors: np.ndarray

    def residuals(self, m):
        """Per-pair residual norms ``||M v - lambda v||``."""
        return np.linalg.norm(m @ self.vectors - self.vectors * self.values,
                              axis=0)


def eig(m, residual_tol=1e-8, max_condition=MAX_CONDITION):
    """All eigenpairs of a square matrix, eigenvectors of unit 2-norm.

    A matrix whose eigenvector basis has condition number above
    `max_condition` is treated as defective.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"eig needs a square matrix, got {m.shape}")
    try:
        w, v = sla.eig(m, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"eigenvalue iteration failed for {m.shape[0]}x{m.shape[1]} "
            f"matrix: {exc}") from exc
    v = v / np.linalg.norm(v, axis=0)
    res = EigResult(w, v)
    if m.size == 0:
        return res
    resid = float(np.max(res.residuals(m)))
    scale = max(np.linalg.norm(m), np.finfo(float).tiny)
    if resid > residual_tol * scale:
        raise ConvergenceError(
            f"eigenpair residual {resid:.3e} exceeds {residual_tol:g}*||M||")
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > max_condition:
        raise DefectiveMatrixError(
            f"eigenvector basis is numerically singular (cond={cond:.3e}); "
            f"matrix looks defective, residual {resid:.3e}", residual=resid)
    return res


def solve_linear(a, b, max_condition=MAX_CONDITION):
    """Solve ``A X = B`` by LU with a 1-norm condition estimate guard."""
    a = as_matrix(a, "A")
    b_arr = np.asarray(b)
    vector_rhs = b_arr.ndim == 1
    b = as_matrix(b_arr, "B")
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"A must be square, got {a.shape}")
    if b.shape[0] != n:
        raise DimensionError(f"B has {b.shape[0]} rows, A is {n}x{n}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    anorm = np.linalg.norm(a, 1)
    rcond, _ = gecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not cond <= max_condition:
        raise SingularMatrixError(
            f"matrix is singular to working precision (cond~{cond:.3e})",
            condition=cond)
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    return x[:, 0] if vector_rhs else x


def ordered_matmul(a, b):
    """Matrix product with a fixed summation order per entry.

    Entry ``(i, j)`` is accumulated as ``a[i,0]*b[0,j] + a[i,1]*b[1,j] +
    ...`` strictly left to right, so its value depends only on row ``i``
    of `a` and column ``j`` of `b`.  BLAS gives no such guarantee: the
    same dot product can round differently inside matrices of different
    shape.  Roughly an order of magnitude slower than ``a @ b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b[:, None]
    m, n = a.shape
    if b.shape[0] != n:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    k = b.shape[1]
    dtype = np.result_type(a, b, np.float64)
    out = np.zeros((m, k), dtype=dtype)
    if n == 0 or m == 0 or k == 0:
        return out[:, 0] if vector_rhs else out
    at = np.ascontiguousarray(a.T, dtype=dtype)
    bb = np.ascontiguousarray(b, dtype=dtype)
    rows = max(1, _ORDERED_BLOCK // max(k, 1))
    for r0 in range(0, m, rows):
        r1 = min(m, r0 + rows)
        acc = out[r0:r1]
        np.multiply(at[0, r0:r1, None], bb[0], out=acc)
        tmp = np.empty_like(acc)
        for t in range(1, n):
            np.multiply(at[t, r0:r1, None], bb[t], out=tmp)
            acc += tmp
    return out[:, 0] if vector_rhs else out
