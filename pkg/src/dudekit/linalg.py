"""Dense LU factorization with partial pivoting for small square systems.

The matrices here are tiny (alphabet-sized), so a plain textbook
implementation is both adequate and easy to audit. Singularity is
detected by a pivot-magnitude threshold and reported as an exception
rather than propagating infs downstream.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, SingularMatrix

PIVOT_EPS = 1e-12


def lu_factor(a: np.ndarray, pivot_eps: float = PIVOT_EPS):
    """Factor P a = L U in place; returns (lu, perm).

    lu stores U on and above the diagonal and the unit-lower-triangular
    multipliers below it. perm[i] gives the source row of row i.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(lu[col:, col])))
        if abs(lu[pivot_row, col]) <= pivot_eps:
            raise SingularMatrix(f"pivot below {pivot_eps:g} in column {col}")
        if pivot_row != col:
            lu[[col, pivot_row]] = lu[[pivot_row, col]]
            perm[[col, pivot_row]] = perm[[pivot_row, col]]
        lu[col + 1 :, col] /= lu[col, col]
        lu[col + 1 :, col + 1 :] -= np.outer(lu[col + 1 :, col], lu[col, col + 1 :])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b given the factorization from lu_factor.

    b may be a vector or a matrix of stacked right-hand-side columns.
    """
    b = np.asarray(b, dtype=np.float64)
    vector = b.ndim == 1
    x = b[perm].reshape(lu.shape[0], -1).copy()
    n = lu.shape[0]
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] -= lu[i, i + 1 :] @ x[i + 1 :]
        x[i] /= lu[i, i]
    return x[:, 0] if vector else x


def invert(a: np.ndarray, pivot_eps: float = PIVOT_EPS) -> np.ndarray:
    lu, perm = lu_factor(a, pivot_eps)
    return lu_solve(lu, perm, np.eye(lu.shape[0]))


def solve(a: np.ndarray, b: np.ndarray, pivot_eps: float = PIVOT_EPS) -> np.ndarray:
    lu, perm = lu_factor(a, pivot_eps)
    return lu_solve(lu, perm, b)
