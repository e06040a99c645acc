"""Small dense square-matrix algebra used by every other module."""
from dataclasses import dataclass
from typing import Any, Dict, Union

import numpy as np
from loguru import logger

from utils.errors import MatrixValidationError, SvdConvergenceError

ArrayLike = Union[np.ndarray, list, tuple]

# Jacobi sweeps stop once every column pair is orthogonal to this relative level.
JACOBI_OFF_TOL = 1e-14
JACOBI_SWEEPS_PER_ENTRY = 100


def as_matrix(X: ArrayLike, name: str = "X", stacked: bool = False) -> np.ndarray:
    """
    Validate and convert input to a float64 square matrix.

    Args:
        X: Matrix-like input
        name: Name used in error messages
        stacked: Accept a stack of shape (..., n, n) instead of a single (n, n)

    Returns:
        A float64 ndarray
    """
    try:
        arr = np.asarray(X, dtype=float)
    except (TypeError, ValueError) as e:
        raise MatrixValidationError(f"{name}: not a numeric matrix ({e})") from e

    if stacked:
        if arr.ndim < 2:
            raise MatrixValidationError(f"{name}: expected shape (..., n, n), got {arr.shape}")
    elif arr.ndim != 2:
        raise MatrixValidationError(f"{name}: expected a 2-D matrix, got shape {arr.shape}")
    if arr.shape[-1] != arr.shape[-2]:
        raise MatrixValidationError(f"{name}: matrix is not square, shape {arr.shape}")
    if arr.shape[-1] < 2:
        raise MatrixValidationError(f"{name}: dimension must be at least 2, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise MatrixValidationError(f"{name}: entries must be finite")
    return arr


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def frobenius_norm_sq(X: ArrayLike):
    """Sum of squared entries, |X|^2 = tr X^T X"""
    X = as_matrix(X, stacked=True)
    return _scalar(np.sum(X * X, axis=(-2, -1)))


def frobenius_inner(X: ArrayLike, Y: ArrayLike):
    """Frobenius inner product tr X^T Y"""
    X = as_matrix(X, "X", stacked=True)
    Y = as_matrix(Y, "Y", stacked=True)
    return _scalar(np.sum(X * Y, axis=(-2, -1)))


def trace(X: ArrayLike):
    X = as_matrix(X, stacked=True)
    return _scalar(np.trace(X, axis1=-2, axis2=-1))


def cofactor(X: ArrayLike) -> np.ndarray:
    """
    Cofactor matrix, (cof X)_ij = (-1)^(i+j) det of X without row i and column j.

    Defined for singular X as well; X @ cof(X).T equals det(X) * I.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if n == 2:
        return np.array([[X[1, 1], -X[1, 0]], [-X[0, 1], X[0, 0]]])

    cof = np.empty_like(X)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(X, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return cof


def s2(X: ArrayLike):
    """Sum of all principal 2x2 minors, sum over i<j of X_ii X_jj - X_ij X_ji"""
    X = as_matrix(X, stacked=True)
    i, j = np.triu_indices(X.shape[-1], k=1)
    d = np.diagonal(X, axis1=-2, axis2=-1)
    minors = d[..., i] * d[..., j] - X[..., i, j] * X[..., j, i]
    return _scalar(np.sum(minors, axis=-1))


def sym_part(X: ArrayLike) -> np.ndarray:
    X = as_matrix(X, stacked=True)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def skew_part(X: ArrayLike) -> np.ndarray:
    X = as_matrix(X, stacked=True)
    return 0.5 * (X - np.swapaxes(X, -1, -2))


@dataclass(frozen=True)
class SvdResult:
    """X = U @ diag(sigma) @ V.T with sigma sorted descending"""
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _complete_orthonormal(U: np.ndarray, valid: np.ndarray) -> np.ndarray:
    # Fill invalid columns with unit vectors orthogonal to the valid ones.
    n = U.shape[0]
    basis = [U[:, j] for j in range(n) if valid[j]]
    for j in np.flatnonzero(~valid):
        best, best_norm = None, -1.0
        for k in range(n):
            candidate = np.zeros(n)
            candidate[k] = 1.0
            for _ in range(2):
                for b in basis:
                    candidate -= (b @ candidate) * b
            norm = np.linalg.norm(candidate)
            if norm > best_norm:
                best, best_norm = candidate, norm
        U[:, j] = best / best_norm
        basis.append(U[:, j])
    return U


def svd(X: ArrayLike) -> SvdResult:
    """
    Singular value decomposition by one-sided (Hestenes) Jacobi rotations.

    Columns of W = X V are orthogonalized pairwise until every pair satisfies
    |w_p . w_q| <= JACOBI_OFF_TOL * |w_p| |w_q|. Left singular vectors of zero
    singular values are completed to an orthonormal basis.

    Raises:
        SvdConvergenceError: if 100 n^2 sweeps do not converge
    """
    X = as_matrix(X)
    n = X.shape[0]
    # Sweep on X / max|X_ij| so squared column norms stay representable.
    scale = float(np.max(np.abs(X)))
    if scale == 0.0:
        return SvdResult(U=np.eye(n), sigma=np.zeros(n), V=np.eye(n))
    W = X / scale
    V = np.eye(n)
    abs_floor = (JACOBI_OFF_TOL * np.sqrt(frobenius_norm_sq(W))) ** 2
    max_sweeps = JACOBI_SWEEPS_PER_ENTRY * n * n

    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = W[:, p] @ W[:, p]
                beta = W[:, q] @ W[:, q]
                gamma = W[:, p] @ W[:, q]
                if abs(gamma) <= abs_floor or abs(gamma) <= JACOBI_OFF_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for M in (W, V):
                    mp = M[:, p].copy()
                    M[:, p] = c * mp - s * M[:, q]
                    M[:, q] = s * mp + c * M[:, q]
        if not rotated:
            logger.debug(f"Jacobi SVD converged after {sweep + 1} sweeps (n={n})")
            break
    else:
        logger.error(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
        raise SvdConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")

    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    W = W[:, order]
    V = V[:, order]

    valid = sigma > n * np.finfo(float).eps * sigma[0] if sigma[0] > 0 else np.zeros(n, dtype=bool)
    U = np.zeros((n, n))
    U[:, valid] = W[:, valid] / sigma[valid]
    if not np.all(valid):
        U = _complete_orthonormal(U, valid)
    return SvdResult(U=U, sigma=sigma * scale, V=V)


def derive_rng(seed: int, *counters: int) -> np.random.Generator:
    """Generator for stream ``counters`` of ``seed``; one seed reproduces every stream"""
    if seed < 0 or any(c < 0 for c in counters):
        raise ValueError(f"seed and counters must be non-negative, got {seed}, {counters}")
    return np.random.default_rng([int(seed), *[int(c) for c in counters]])


def random_rotation(n: int, seed: int) -> np.ndarray:
    """Seeded rotation in SO(n) from the QR factorization of a Gaussian matrix"""
    if n < 2:
        raise MatrixValidationError(f"rotation dimension must be at least 2, got {n}")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def matrix_to_json(X: ArrayLike) -> Dict[str, Any]:
    X = as_matrix(X)
    return {"n": int(X.shape[0]), "entries": X.tolist()}


def matrix_from_json(data: Dict[str, Any], field: str = "matrix") -> np.ndarray:
    """Parse ``{"n": ..., "entries": [[...], ...]}``; errors name ``field``"""
    if not isinstance(data, dict):
        raise MatrixValidationError(f"{field}: expected an object with 'n' and 'entries'")
    for key in ("n", "entries"):
        if key not in data:
            raise MatrixValidationError(f"{field}.{key}: missing")
    X = as_matrix(data["entries"], name=f"{field}.entries")
    if int(data["n"]) != X.shape[0]:
        raise MatrixValidationError(f"{field}.n: declared {data['n']} but entries are {X.shape[0]}x{X.shape[1]}")
    return X
