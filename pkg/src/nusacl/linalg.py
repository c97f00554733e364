"""Dense linear algebra substrate: validated matrices and a verified thin SVD.

Matrices are plain 2-D float64 numpy arrays; ``matrix()`` is the validating
constructor every public entry point funnels through.  The thin SVD is a
one-sided Jacobi with cyclic sweeps, chosen for determinism and accuracy at
the sizes this package targets (dimensions up to ~1024).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, DataError, ShapeError

# Jacobi convergence: relative off-diagonal threshold and sweep cap.
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60

_MAGIC = b"NUSA"
_FORMAT_VERSION = 1


def matrix(values) -> np.ndarray:
    """Validate and return a 2-D float64 matrix (C-contiguous copy).

    Raises ShapeError for non-2-D or empty input and DataError for any
    NaN/Inf entry.
    """
    a = np.array(values, dtype=np.float64, order="C")
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError("matrix contains NaN or Inf entries")
    return a


def check_matrix(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    if not isinstance(a, np.ndarray) or a.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D array")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains NaN or Inf entries")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with explicit inner-dimension check."""
    check_matrix(a, "a")
    check_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"inner dimensions disagree: {a.shape} x {b.shape}"
        )
    return a @ b


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius inner product Tr(A^T B) = sum_ij A_ij B_ij."""
    check_matrix(a, "a")
    check_matrix(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD W = U diag(sigma) V^T with sigma sorted non-increasing.

    u is m x d, v is n x d, sigma has length d = min(m, n).
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):  # pragma: no cover - compiled
    m, n = a.shape
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = 0.0
                aqq = 0.0
                apq = 0.0
                for i in range(m):
                    ap = a[i, p]
                    aq = a[i, q]
                    app += ap * ap
                    aqq += aq * aq
                    apq += ap * aq
                if app == 0.0 or aqq == 0.0:
                    continue
                if abs(apq) <= tol * np.sqrt(app * aqq):
                    continue
                rotated = True
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    ap = a[i, p]
                    aq = a[i, q]
                    a[i, p] = c * ap - s * aq
                    a[i, q] = s * ap + c * aq
                for i in range(n):
                    vp = v[i, p]
                    vq = v[i, q]
                    v[i, p] = c * vp - s * vq
                    v[i, q] = s * vp + c * vq
        if not rotated:
            return sweep + 1, True
    return max_sweeps, False


def _max_relative_offdiag(a: np.ndarray) -> float:
    g = a.T @ a
    norms = np.sqrt(np.diag(g))
    denom = np.outer(norms, norms)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(g) / denom
    rel[~np.isfinite(rel)] = 0.0
    np.fill_diagonal(rel, 0.0)
    return float(rel.max()) if rel.size else 0.0


def _complete_orthonormal(u: np.ndarray, missing: np.ndarray) -> None:
    """Fill the columns flagged in ``missing`` with a deterministic
    orthonormal completion (Gram-Schmidt over the standard basis)."""
    m = u.shape[0]
    filled = [j for j in range(u.shape[1]) if not missing[j]]
    for j in np.flatnonzero(missing):
        basis = u[:, filled]
        # residuals of every standard basis vector; argmax is deterministic
        # (first index on ties)
        resid = np.eye(m) - basis @ basis.T
        cand = int(np.argmax(np.sum(resid * resid, axis=0)))
        e = resid[:, cand]
        # second Gram-Schmidt round for numerical safety
        e = e - basis @ (basis.T @ e)
        norm = np.linalg.norm(e)
        if norm < m * np.finfo(np.float64).eps:
            raise ConvergenceError("failed to complete orthonormal basis")
        u[:, j] = e / norm
        filled.append(j)


def svd_thin(
    w: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> SvdFactorization:
    """Thin SVD via one-sided Jacobi with cyclic sweeps.

    Deterministic for a fixed input: fixed sweep order, descending sigma
    with ties broken by original column index, and the sign convention
    that the largest-magnitude entry of each U column is non-negative.

    Raises ConvergenceError (carrying the residual) if the off-diagonal
    relative magnitudes have not fallen below ``tol`` after ``max_sweeps``.
    """
    w = check_matrix(w, "w")
    m, n = w.shape
    transposed = m < n
    a = np.array(w.T if transposed else w, dtype=np.float64, order="C")
    rows, cols = a.shape  # rows >= cols == d

    acc = np.eye(cols)
    _, converged = _jacobi_sweeps(a, acc, tol, max_sweeps)
    if not converged:
        residual = _max_relative_offdiag(a)
        if residual > tol:
            raise ConvergenceError(
                f"Jacobi SVD did not converge in {max_sweeps} sweeps "
                f"(relative off-diagonal residual {residual:.3e})",
                residual=residual,
            )

    sigma = np.sqrt(np.sum(a * a, axis=0))
    # descending order, stable in the original column index on ties
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    a = a[:, order]
    acc = acc[:, order]

    cutoff = max(rows, cols) * np.finfo(np.float64).eps * (
        sigma[0] if sigma.size else 0.0
    )
    missing = sigma <= cutoff
    u = np.zeros_like(a)
    keep = ~missing
    u[:, keep] = a[:, keep] / sigma[keep]
    if missing.any():
        sigma = sigma.copy()
        sigma[missing] = 0.0
        _complete_orthonormal(u, missing)
    v = acc

    if transposed:
        u, v = v, u

    # sign convention: largest-magnitude entry of each U column non-negative
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0.0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]

    return SvdFactorization(u=u, sigma=sigma, v=v)


# --- fixture file formats -------------------------------------------------

def save_matrix(path, a: np.ndarray) -> None:
    """Write the NUSA binary layout: magic, version byte, two u64 LE dims,
    then row-major little-endian float64 values."""
    a = check_matrix(a, "a")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<B", _FORMAT_VERSION))
        fh.write(struct.pack("<QQ", a.shape[0], a.shape[1]))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError(f"bad magic bytes {magic!r}, expected {_MAGIC!r}")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != _FORMAT_VERSION:
            raise DataError(f"unsupported format version {version}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        payload = fh.read(rows * cols * 8)
        if len(payload) != rows * cols * 8:
            raise DataError("truncated matrix payload")
        data = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    return matrix(data)


def load_csv_matrix(path) -> np.ndarray:
    """Load a plain CSV of reals as a matrix."""
    data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return matrix(data)
