"""Dense numeric linear algebra on complex matrices: rank, kernels, small solves."""

import numpy as np
from scipy.linalg import null_space

DEFAULT_RANK_TOL = 1e-9


def numeric_rank(A: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Rank by row reduction with partial pivoting on modulus.

    A column is skipped when its best remaining pivot falls below
    ``tol`` times the largest initial row max-norm.

    Examples:
        >>> numeric_rank(np.array([[1.0, 2.0], [2.0, 4.0]]))
        1
    """
    A = np.array(A, dtype=complex, copy=True)
    if A.size == 0:
        return 0
    rows, columns = A.shape
    scale = np.max(np.abs(A))
    if scale == 0:
        return 0
    threshold = tol * scale
    rank = 0
    for k in range(columns):
        if rank == rows:
            break
        pivot = rank + int(np.argmax(np.abs(A[rank:, k])))
        if abs(A[pivot, k]) <= threshold:
            continue
        if pivot != rank:
            A[[rank, pivot]] = A[[pivot, rank]]
        factors = A[rank + 1 :, k] / A[rank, k]
        A[rank + 1 :, k:] -= np.outer(factors, A[rank, k:])
        rank += 1
    return rank


def left_null_space(A: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal rows M spanning the left kernel, so that ``M @ A`` vanishes.

    Returns a (q, m) array; q may be zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if not np.any(A):
        return np.eye(A.shape[0], dtype=complex)
    return null_space(A.T, rcond=tol).T


def right_null_space(A: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning {v : A v = 0}."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if not np.any(A):
        return np.eye(A.shape[1], dtype=complex)
    return null_space(A, rcond=tol)


def max_norm(A: np.ndarray) -> float:
    """Infinity norm (maximum absolute row sum)."""
    A = np.atleast_2d(np.asarray(A))
    if A.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(A), axis=1)))
