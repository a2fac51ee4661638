"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0

Small dense symmetric-matrix kernel used by the knockoff construction and OLS inference.
Every matrix handled here has at most a few dozen rows.
"""

import math
from collections import namedtuple

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DimensionMismatch, NoConvergence, NotPositiveDefinite

PIVOT_TOL = 1e-12
MAX_SWEEPS = 100

CholFactor = namedtuple("CholFactor", "lower")


def sym_matrix(entries):
    """Return entries as a float array that is exactly symmetric.

    Asymmetry beyond rounding noise is rejected rather than averaged away.
    """
    m = np.array(entries, dtype=float, ndmin=2)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch("expected a non-empty square matrix, got shape %s" % (m.shape,))
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > 1e-8 * scale:
        raise DimensionMismatch("matrix is not symmetric")
    return (m + m.T) / 2.0


def cholesky(m):
    """Factor a symmetric positive definite matrix as lower · lowerᵀ.

    :raises NotPositiveDefinite: if a pivot is at or below PIVOT_TOL
    """
    a = sym_matrix(m)
    dim = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(dim):
        row = lower[j, :j]
        pivot = a[j, j] - row @ row
        if not pivot > PIVOT_TOL:
            raise NotPositiveDefinite("pivot %d is %.3g (tolerance %g)" % (j, pivot, PIVOT_TOL))
        lower[j, j] = math.sqrt(pivot)
        if j + 1 < dim:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ row) / lower[j, j]
    return CholFactor(lower)


def _rotate(a, p, q):
    """Apply one Jacobi rotation that annihilates a[p, q] in place."""
    theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = a[q, p] = 0.0


def eigenvalues(m, max_sweeps=MAX_SWEEPS):
    """Return all eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).

    :raises NoConvergence: if the off-diagonal mass has not vanished after max_sweeps sweeps
    """
    a = sym_matrix(m).copy()
    dim = a.shape[0]
    scale = float(np.sqrt(np.sum(a * a)))
    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-13 * scale or off < 1e-300:
            return np.sort(np.diag(a))
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                if a[p, q] != 0.0:
                    _rotate(a, p, q)
    raise NoConvergence("Jacobi iteration did not converge in %d sweeps" % max_sweeps)


def min_eigenvalue(m, max_sweeps=MAX_SWEEPS):
    return float(eigenvalues(m, max_sweeps)[0])


def solve_spd(m, rhs):
    """Solve m · result = rhs for symmetric positive definite m via its Cholesky factor.

    rhs may be a vector or a matrix with dim rows; the result has the same shape.
    """
    lower = cholesky(m).lower
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != lower.shape[0]:
        raise DimensionMismatch("rhs has %d rows, matrix has dimension %d" % (b.shape[0], lower.shape[0]))
    half = solve_triangular(lower, b, lower=True)
    return solve_triangular(lower.T, half, lower=False)
