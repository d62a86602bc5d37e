"""Dense linear algebra helpers shared by the rest of the package.

Matrices and vectors are plain ``numpy`` arrays; the functions here add the
shape and finiteness checks the callers rely on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_RANK_TOL = 1e-9


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Infeasible:
    """Least-squares outcome when no solution reproduces the right-hand side."""

    x: np.ndarray
    residual: float


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_vector(v, name: str = "vector") -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def rank(m, tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank from the diagonal of a column-pivoted QR factorization.

    Diagonal magnitudes are compared against ``tol`` times the largest one.
    An empty matrix has rank 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(m, dtype=float)
    if a.size == 0:
        return 0
    a = as_matrix(a)
    r = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.count_nonzero(diag > tol * diag[0]))


def solve_least_squares(a, b, tol: float = 1e-8):
    """Minimize ``||a x - b||``.

    Returns the minimizer, or :class:`Infeasible` when the residual exceeds
    ``tol * (1 + ||b||)``.
    """
    a = as_matrix(a, "a")
    b = as_vector(b, "b")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"a has {a.shape[0]} rows but b has length {b.shape[0]}")
    if a.shape[1] == 0:
        x = np.zeros(0)
    else:
        x = np.linalg.lstsq(a, b, rcond=None)[0]
    res = float(np.linalg.norm(a @ x - b)) if a.shape[1] else float(np.linalg.norm(b))
    if res > tol * (1.0 + float(np.linalg.norm(b))):
        return Infeasible(x=x, residual=res)
    return x
