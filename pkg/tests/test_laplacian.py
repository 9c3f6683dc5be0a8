import math

import numpy as np
import pytest
from scipy import linalg as dense_linalg

from core import shapes
from core.analysis import principal_angles
from core.curvature import gaussian_curvature, metric_weights
from core.errors import ConvergenceFailure, DimensionMismatchError, InvalidAlphaError, InvalidCountError
from core.laplacian import (
    OperatorKind,
    assemble_mass,
    assemble_stiffness,
    dense_eigenpairs,
    laplace_beltrami,
    smallest_eigenpairs,
)


def test_stiffness_structure(sphere2):
    L = assemble_stiffness(sphere2)
    assert L.kind is OperatorKind.STIFFNESS
    M = L.matrix.toarray()
    np.testing.assert_allclose(M, M.T, atol=1e-14)
    row_norm = np.abs(M).sum(axis=1)
    assert np.all(np.abs(M.sum(axis=1)) <= 1e-10 * row_norm)
    assert dense_linalg.eigvalsh(M)[0] > -1e-10
    # near-equilateral triangles: every edge weight is positive
    coo = L.matrix.tocoo()
    assert np.all(coo.data[coo.row != coo.col] < 0)


def test_dirichlet_energy_of_a_linear_function():
    grid = shapes.square_grid(16)
    L = assemble_stiffness(grid)
    x = np.array(grid.vertices[:, 0])
    assert float(L.quadratic(x)) == pytest.approx(1.0, abs=1e-10)


def test_regular_mass_sums_to_area():
    grid = shapes.square_grid(16)
    A = assemble_mass(grid)
    assert A.kind is OperatorKind.MASS
    assert float(A.diagonal().sum()) == pytest.approx(1.0, abs=1e-10)


def test_scale_invariant_mass(sphere1):
    def mass(mesh):
        return assemble_mass(mesh, metric_weights(gaussian_curvature(mesh), alpha=1.0)).diagonal()

    np.testing.assert_allclose(mass(sphere1.scaled(5.0)), mass(sphere1), rtol=1e-10)


def test_mass_weights_must_match(sphere1, icosahedron):
    weights = metric_weights(gaussian_curvature(icosahedron), 0.5)
    with pytest.raises(DimensionMismatchError):
        assemble_mass(sphere1, weights)


def test_basis_is_mass_orthonormal(sphere2_basis):
    phi = sphere2_basis.eigenvectors
    gram = phi.T @ (sphere2_basis.mass @ phi)
    np.testing.assert_allclose(gram, np.eye(sphere2_basis.k), atol=1e-8)
    assert np.all(np.diff(sphere2_basis.eigenvalues) >= 0)
    assert float(sphere2_basis.residuals.max()) < 1e-6


def test_constant_mode_and_signs(sphere2_basis):
    assert sphere2_basis.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
    first = sphere2_basis.eigenvectors[:, 0]
    assert np.allclose(first, first.mean(), rtol=1e-8)
    assert first.mean() > 0
    phi = sphere2_basis.eigenvectors
    pivots = phi[np.argmax(np.abs(phi), axis=0), np.arange(phi.shape[1])]
    assert np.all(pivots > 0)


def test_sparse_solver_matches_dense_oracle(sphere2):
    L = assemble_stiffness(sphere2)
    A = assemble_mass(sphere2)
    sparse_basis = smallest_eigenpairs(L, A, 10, method="sparse")
    values, vectors = dense_eigenpairs(L, A)
    np.testing.assert_allclose(sparse_basis.eigenvalues, np.maximum(values[:10], 0.0), rtol=1e-8, atol=1e-8)
    # constant, l=1 and l=2 clusters: nine modes closed under the symmetry
    angles = principal_angles(sparse_basis.eigenvectors[:, :9], vectors[:, :9], A)
    assert float(angles.max()) < 1e-6


def test_sparse_solver_keeps_every_member_of_a_cluster(sphere2):
    L, A = assemble_stiffness(sphere2), assemble_mass(sphere2)
    values = smallest_eigenpairs(L, A, 10, method="sparse").eigenvalues
    # 1 + 3 + 5 modes below the l=3 cluster
    gaps = np.flatnonzero(np.diff(values) > 0.5) + 1
    np.testing.assert_array_equal(gaps, [1, 4, 9])


@pytest.mark.parametrize("k", [20, pytest.param(100, marks=pytest.mark.slow)])
def test_default_solver_matches_dense_oracle_above_the_dense_threshold(k):
    mesh = shapes.icosphere(3)
    L, A = assemble_stiffness(mesh), assemble_mass(mesh)
    basis = smallest_eigenpairs(L, A, k)
    values, _ = dense_eigenpairs(L, A, k)
    np.testing.assert_allclose(basis.eigenvalues, np.maximum(values, 0.0), rtol=1e-8, atol=1e-8)


def test_block_solver_reports_an_exhausted_budget(sphere2):
    L, A = assemble_stiffness(sphere2), assemble_mass(sphere2)
    with pytest.raises(ConvergenceFailure):
        smallest_eigenpairs(L, A, 10, method="sparse", max_iter=1)


def test_sparse_request_near_full_rank_falls_back_to_dense(icosahedron):
    L, A = assemble_stiffness(icosahedron), assemble_mass(icosahedron)
    basis = smallest_eigenpairs(L, A, 12, method="sparse")
    assert basis.k == 12


def test_tetrahedron_spectrum():
    basis = laplace_beltrami(shapes.tetrahedron(), k=4)
    assert basis.eigenvalues[0] < 1e-10
    # the three non-constant modes share one eigenvalue by symmetry
    np.testing.assert_allclose(basis.eigenvalues[1:], basis.eigenvalues[1], rtol=1e-10)


def test_eigensolver_argument_checks(sphere1, icosahedron):
    L, A = assemble_stiffness(sphere1), assemble_mass(sphere1)
    with pytest.raises(InvalidCountError):
        smallest_eigenpairs(L, A, 0)
    with pytest.raises(InvalidCountError):
        smallest_eigenpairs(L, A, sphere1.n_vertices + 1)
    with pytest.raises(DimensionMismatchError):
        smallest_eigenpairs(L, assemble_mass(icosahedron), 3)
    with pytest.raises(InvalidAlphaError):
        laplace_beltrami(sphere1, 3, alpha=2.0)


def test_truncated_basis(sphere2_basis):
    small = sphere2_basis.truncated(5)
    assert small.k == 5
    np.testing.assert_array_equal(small.eigenvalues, sphere2_basis.eigenvalues[:5])
    with pytest.raises(InvalidCountError):
        sphere2_basis.truncated(0)


def test_scale_invariance_at_alpha_one():
    mesh = shapes.icosphere(3)
    base = laplace_beltrami(mesh, 50, alpha=1.0, method="dense").eigenvalues
    scaled = laplace_beltrami(mesh.scaled(3.7), 50, alpha=1.0, method="dense").eigenvalues
    np.testing.assert_allclose(scaled, base, rtol=1e-9, atol=1e-9 * base[-1])


def test_regular_spectrum_scales_with_area():
    mesh = shapes.icosphere(3)
    base = laplace_beltrami(mesh, 50, method="dense").eigenvalues
    scaled = laplace_beltrami(mesh.scaled(3.7), 50, method="dense").eigenvalues
    np.testing.assert_allclose(scaled, base / 3.7**2, rtol=1e-9, atol=1e-9 * base[-1])


@pytest.mark.slow
def test_unit_sphere_spectrum():
    basis = laplace_beltrami(shapes.icosphere(4), 13)
    expected = np.array([0.0] + [2.0] * 3 + [6.0] * 5 + [12.0] * 4)
    assert basis.eigenvalues[0] < 1e-8
    np.testing.assert_allclose(basis.eigenvalues[1:], expected[1:], rtol=0.02)


@pytest.mark.slow
def test_unit_square_neumann_spectrum():
    basis = laplace_beltrami(shapes.square_grid(64), 6)
    pi2 = math.pi**2
    expected = np.array([0.0, pi2, pi2, 2 * pi2, 4 * pi2, 4 * pi2])
    assert basis.eigenvalues[0] < 1e-8
    np.testing.assert_allclose(basis.eigenvalues[1:], expected[1:], rtol=0.01)
