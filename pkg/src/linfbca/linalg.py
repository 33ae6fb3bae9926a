"""Dense linear algebra foundation.

Matrix products and covariance, a cyclic Jacobi eigensolver for the small
symmetric matrices that whitening needs, plane-rotation construction, and
seeded random matrix generation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, NumericalError

__all__ = [
    "EigenDecomposition",
    "as_matrix",
    "covariance",
    "givens_matrix",
    "jacobi_eigen",
    "make_rng",
    "matmul",
    "random_gaussian_matrix",
    "random_orthogonal",
]

JACOBI_OFF_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
MAX_EIGEN_DIM = 64


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a nonempty 2-D float64 array and check every entry is finite."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ContractViolationError(
            f"{name} must be a nonempty 2-D array, got shape {m.shape}"
        )
    if not np.isfinite(m).all():
        raise ContractViolationError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product a @ b with dimension and finiteness checks."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ContractViolationError(
            f"dimension mismatch: {a.shape} @ {b.shape}"
        )
    out = a @ b
    if not np.isfinite(out).all():
        raise NumericalError("matrix product produced non-finite entries")
    return out


def covariance(x) -> np.ndarray:
    """Sample covariance (1/T) Xc Xc^T of the rows of x.

    Row means are removed first; the divisor is the sample count T, not
    T - 1. The result is symmetrized to kill floating-point asymmetry.
    """
    x = as_matrix(x, "x")
    if x.shape[1] < 2:
        raise ContractViolationError("covariance needs at least 2 samples per row")
    xc = x - x.mean(axis=1, keepdims=True)
    c = (xc @ xc.T) / x.shape[1]
    return (c + c.T) / 2.0


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Symmetric eigendecomposition with eigenvalues sorted descending.

    ``eigenvectors[:, i]`` is the unit-norm eigenvector paired with
    ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def jacobi_eigen(c) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Every off-diagonal plane is rotated in turn until all off-diagonal
    magnitudes drop below 1e-12, for at most 100 sweeps. Intended for the
    small covariance matrices produced by whitening (dimension <= 64).

    Parameters
    ----------
    c : array_like
        Symmetric matrix (asymmetry up to 1e-10 in max norm is accepted).

    Returns
    -------
    EigenDecomposition
        Eigenvalues descending, orthonormal eigenvector columns.

    Raises
    ------
    ContractViolationError
        If the input is not square, not symmetric, or too large.
    NumericalError
        If the off-diagonal residual does not converge within 100 sweeps.
    """
    a = as_matrix(c, "c").copy()
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"matrix must be square, got {a.shape}")
    if n > MAX_EIGEN_DIM:
        raise ContractViolationError(
            f"jacobi_eigen supports dimension <= {MAX_EIGEN_DIM}, got {n}"
        )
    if n > 1 and np.max(np.abs(a - a.T)) > 1e-10:
        raise ContractViolationError("matrix is not symmetric within 1e-10")

    v = np.eye(n)
    off = 0.0
    for _ in range(JACOBI_MAX_SWEEPS):
        off = _max_offdiag(a)
        if off <= JACOBI_OFF_TOLERANCE:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= JACOBI_OFF_TOLERANCE:
                    continue
                # Symmetric Schur rotation that zeroes a[p, q].
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                cr = 1.0 / np.sqrt(1.0 + t * t)
                sr = t * cr

                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = cr * ap - sr * aq
                a[:, q] = sr * ap + cr * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = cr * ap - sr * aq
                a[q, :] = sr * ap + cr * aq
                # Rounded cross terms are zero by construction.
                a[p, q] = 0.0
                a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = cr * vp - sr * vq
                v[:, q] = sr * vp + cr * vq
    else:
        raise NumericalError(
            f"jacobi_eigen did not converge in {JACOBI_MAX_SWEEPS} sweeps, "
            f"off-diagonal residual {off:.3e}"
        )

    order = np.argsort(-np.diagonal(a), kind="stable")
    return EigenDecomposition(
        eigenvalues=np.diagonal(a)[order].copy(),
        eigenvectors=v[:, order].copy(),
    )


def _max_offdiag(a: np.ndarray) -> float:
    if a.shape[0] == 1:
        return 0.0
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.max(np.abs(a[mask])))


def givens_matrix(n: int, m: int, k: int, theta: float) -> np.ndarray:
    """Plane rotation by ``theta`` in the (m, k) coordinate plane, 0-based.

    Identity everywhere except T[m, m] = T[k, k] = cos(theta),
    T[m, k] = -sin(theta) and T[k, m] = sin(theta). The result is
    orthogonal with determinant +1.
    """
    if not (0 <= m < k < n):
        raise ContractViolationError(
            f"plane indices must satisfy 0 <= m < k < n, got m={m}, k={k}, n={n}"
        )
    t = np.eye(n)
    c = np.cos(theta)
    s = np.sin(theta)
    t[m, m] = c
    t[k, k] = c
    t[m, k] = -s
    t[k, m] = s
    return t


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic 64-bit seeded generator (PCG64).

    Identical seeds reproduce identical streams across runs and platforms
    for a fixed numpy version.
    """
    return np.random.Generator(np.random.PCG64(int(seed)))


def random_gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix of i.i.d. standard normal entries."""
    if rows < 1 or cols < 1:
        raise ContractViolationError(f"invalid shape ({rows}, {cols})")
    return rng.standard_normal((rows, cols))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthogonal matrix from the QR factorization of a Gaussian draw.

    Column signs are fixed to the signs of the R diagonal so the output is
    a deterministic function of the generator state. A draw whose R
    diagonal is numerically rank deficient is rejected and retried, at
    most 10 times.
    """
    if n < 2:
        raise ContractViolationError(f"dimension must be >= 2, got {n}")
    for _ in range(10):
        g = rng.standard_normal((n, n))
        q, r = np.linalg.qr(g)
        d = np.diagonal(r)
        if np.min(np.abs(d)) <= 1e-12 * max(1.0, float(np.max(np.abs(d)))):
            continue
        return q * np.sign(d)[None, :]
    raise NumericalError("10 consecutive rank-deficient Gaussian draws")
