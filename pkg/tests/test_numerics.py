"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import numpy as np
import pytest

from src.vi_sim_cli.exceptions import DimensionMismatch, NoConvergence, NotPositiveDefinite
from src.vi_sim_cli.numerics import cholesky, eigenvalues, min_eigenvalue, solve_spd, sym_matrix
from .utils import random_spd


def _grid_min_quadratic_form(m, points=200001):
    """min of u'Mu over unit vectors u = (cos t, sin t) on a fine grid (2 x 2 only)."""
    theta = np.linspace(0.0, np.pi, points)
    u = np.stack([np.cos(theta), np.sin(theta)])
    return float(np.min(np.sum(u * (m @ u), axis=0)))


def _rel_frobenius(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky(np.eye(3)).lower, np.eye(3))

    def test_reconstructs_correlation_matrix(self):
        m = np.array([[1.0, 0.75], [0.75, 1.0]])
        lower = cholesky(m).lower
        assert _rel_frobenius(lower @ lower.T, m) < 1e-10
        assert np.all(np.diag(lower) > 0)
        assert lower[0, 1] == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_reconstructs_random_spd(self, seed):
        m = random_spd(6, seed)
        lower = cholesky(m).lower
        assert _rel_frobenius(lower @ lower.T, m) < 1e-10

    def test_rank_deficient(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky([[1.0, 1.0], [1.0, 1.0]])

    def test_near_singular_still_factors(self):
        m = np.array([[1.0, 0.999], [0.999, 1.0]])
        lower = cholesky(m).lower
        assert _rel_frobenius(lower @ lower.T, m) < 1e-10

    def test_rejects_asymmetric(self):
        with pytest.raises(DimensionMismatch):
            sym_matrix([[1.0, 0.5], [0.2, 1.0]])


class TestEigenvalues:
    def test_identity(self):
        assert min_eigenvalue(np.eye(2)) == 1.0

    def test_two_by_two_correlation(self):
        assert min_eigenvalue([[1.0, 0.6], [0.6, 1.0]]) == pytest.approx(0.4, abs=1e-9)

    @pytest.mark.parametrize("b", np.round(np.arange(-0.95, 0.951, 0.05), 2))
    def test_closed_form_grid(self, b):
        assert min_eigenvalue([[1.0, b], [b, 1.0]]) == pytest.approx(1.0 - abs(b), abs=1e-9)

    def test_matches_unit_vector_grid_search(self):
        m = np.array([[2.0, -0.7], [-0.7, 0.9]])
        assert min_eigenvalue(m) == pytest.approx(_grid_min_quadratic_form(m), abs=1e-8)

    @pytest.mark.parametrize("dim", [3, 4, 5])
    def test_lower_bounds_random_quadratic_forms(self, dim):
        m = random_spd(dim, seed=dim)
        gen = np.random.default_rng(dim)
        u = gen.standard_normal((dim, 10000))
        u /= np.linalg.norm(u, axis=0)
        forms = np.sum(u * (m @ u), axis=0)
        lam = min_eigenvalue(m)
        assert lam <= forms.min() + 1e-12
        assert lam == pytest.approx(np.linalg.eigvalsh(m)[0], abs=1e-9)

    def test_full_spectrum(self):
        m = random_spd(5, seed=3)
        assert np.allclose(eigenvalues(m), np.linalg.eigvalsh(m), atol=1e-9)

    def test_indefinite(self):
        assert min_eigenvalue([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(-1.0, abs=1e-12)

    def test_no_convergence(self):
        with pytest.raises(NoConvergence):
            eigenvalues([[1.0, 0.5], [0.5, 1.0]], max_sweeps=0)


class TestSolveSpd:
    def test_identity(self):
        assert np.allclose(solve_spd(np.eye(2), [[3.0], [4.0]]), [[3.0], [4.0]])

    def test_diagonal(self):
        assert np.allclose(solve_spd([[2.0, 0.0], [0.0, 4.0]], [[2.0], [4.0]]), [[1.0], [1.0]])

    def test_vector_rhs(self):
        assert solve_spd(np.eye(3), np.ones(3)).shape == (3,)

    @pytest.mark.parametrize("seed", range(3))
    def test_self_solve_is_identity(self, seed):
        m = random_spd(5, seed)
        assert np.allclose(solve_spd(m, m), np.eye(5), atol=1e-9)

    def test_propagates_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            solve_spd([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])

    def test_rhs_rows_must_match(self):
        with pytest.raises(DimensionMismatch):
            solve_spd(np.eye(2), np.ones(3))
