import numpy as np
import pytest
from scipy import linalg as dense_linalg

from core.analysis import a_orthonormalize, principal_angles
from core.errors import DimensionMismatchError, InvalidCountError, NegativeMuError
from core.laplacian import assemble_mass, assemble_stiffness
from core.rpca import (
    calibrate_mu,
    calibrated_mu,
    compare_bases,
    mu_sweep,
    objective,
    reconstruct,
    regularized_basis,
    weighted_pca,
)


@pytest.fixture(scope="module")
def operators(sphere2):
    return assemble_stiffness(sphere2), assemble_mass(sphere2)


@pytest.fixture(scope="module")
def data(sphere2):
    rng = np.random.default_rng(0)
    return np.column_stack([np.array(sphere2.vertices), 0.1 * rng.standard_normal((sphere2.n_vertices, 3))])


def _mass_gram(P, A):
    return P.T @ (A @ P)


def test_orthonormal_frames(data, operators):
    L, A = operators
    for mu in (0.0, 0.5, 50.0):
        basis = regularized_basis(data, L, A, mu, 4)
        np.testing.assert_allclose(_mass_gram(basis.P, A), np.eye(4), atol=1e-8)
        assert np.all(np.diff(basis.theta) <= 0)
        assert basis.m == 4


def test_data_spanned_by_eigenfunctions_is_recovered(sphere2_basis):
    L, A = sphere2_basis.stiffness, sphere2_basis.mass
    X = sphere2_basis.eigenvectors[:, [1, 4]]
    basis = regularized_basis(X, L, A, 0.0, 2)
    assert float(principal_angles(basis.P, X, A).max()) < 1e-8


def test_weighted_pca_matches_dense_pencil(data, operators):
    L, A = operators
    pca = weighted_pca(data, A, 3, L)
    AX = A @ data
    theta, vectors = dense_linalg.eigh(AX @ AX.T, A.matrix.toarray())
    np.testing.assert_allclose(pca.theta, theta[::-1][:3], rtol=1e-8)
    assert float(principal_angles(pca.P, vectors[:, ::-1][:, :3], A).max()) < 1e-6


def test_zero_mu_is_weighted_pca(data, operators):
    L, A = operators
    reg = regularized_basis(data, L, A, 0.0, 3)
    pca = weighted_pca(data, A, 3, L)
    assert float(principal_angles(reg.P, pca.P, A).max()) < 1e-8
    assert reg.dirichlet_energy == pytest.approx(pca.dirichlet_energy)


def test_iterative_pencil_matches_dense(data, operators):
    L, A = operators
    dense = regularized_basis(data, L, A, 0.5, 3)
    iterative = regularized_basis(data, L, A, 0.5, 3, dense_threshold=0)
    np.testing.assert_allclose(iterative.theta, dense.theta, rtol=1e-8)
    assert float(principal_angles(iterative.P, dense.P, A).max()) < 1e-6


def test_large_mu_recovers_the_eigenbasis(sphere2_basis, data):
    L, A = sphere2_basis.stiffness, sphere2_basis.mass
    X = data[:, :3]
    mu = calibrate_mu(X, L, A, 1e6)
    basis = regularized_basis(X, L, A, mu, 4)
    # constant plus the degree-one triple
    assert float(principal_angles(basis.P, sphere2_basis.eigenvectors[:, :4], A).max()) < 1e-3


def test_sweep_trades_projection_error_for_smoothness(data, operators):
    L, A = operators
    mus = [calibrate_mu(data, L, A, h) for h in np.logspace(-3, 3, 20)]
    bases = mu_sweep(data, L, A, mus, 3)
    dirichlet = np.array([b.dirichlet_energy for b in bases])
    projection = np.array([b.projection_error for b in bases])
    assert np.all(np.diff(dirichlet) <= 1e-9 * dirichlet.max())
    assert np.all(np.diff(projection) >= -1e-9 * projection.max())


def test_sweep_keeps_input_order_across_threads(data, operators):
    L, A = operators
    mus = [5.0, 0.0, 1.0]
    one = mu_sweep(data, L, A, mus, 2, threads=1)
    many = mu_sweep(data, L, A, mus, 2, threads=3)
    assert [b.mu for b in one] == mus
    for a, b in zip(one, many):
        np.testing.assert_allclose(a.P, b.P, rtol=1e-12, atol=1e-14)
    with pytest.raises(NegativeMuError):
        mu_sweep(data, L, A, [1.0, -1.0], 2)


def test_objective_terms(data, operators):
    L, A = operators
    basis = regularized_basis(data, L, A, 3.0, 3)
    assert objective(basis.P, data, L, A, 3.0) == pytest.approx(basis.objective, rel=1e-12)
    assert basis.objective_terms == (basis.projection_error, basis.dirichlet_energy)


@pytest.mark.parametrize("mu", [0.0, 0.3, 5.0])
def test_regularized_frame_beats_random_rivals(data, operators, mu):
    L, A = operators
    best = regularized_basis(data, L, A, mu, 3)
    rng = np.random.default_rng(7)
    for trial in range(100):
        # half are unrelated frames, half are small perturbations of the optimum
        noise = rng.standard_normal(best.P.shape)
        guess = noise if trial % 2 else best.P + 1e-2 * np.abs(best.P).max() * noise
        rival = a_orthonormalize(guess, A)
        assert objective(rival, data, L, A, mu) >= best.objective - 1e-9 * abs(best.objective)


def test_reconstruction_is_a_projection(data, operators):
    L, A = operators
    basis = regularized_basis(data, L, A, 1.0, 3)
    f = data[:, 0]
    once = reconstruct(f, basis, A)
    np.testing.assert_allclose(reconstruct(once, basis, A), once, atol=1e-9)
    inside = basis.P @ np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(reconstruct(inside, basis, A), inside, atol=1e-9)
    g = np.random.default_rng(1).standard_normal(A.dimension)
    outside = g - basis.P @ (basis.P.T @ (A @ g))
    np.testing.assert_allclose(reconstruct(outside, basis, A), 0.0, atol=1e-9)
    with pytest.raises(DimensionMismatchError):
        reconstruct(np.ones(3), basis, A)


def test_full_rank_pca_reproduces_training_data(data, operators):
    L, A = operators
    basis = regularized_basis(data, L, A, 0.0, data.shape[1])
    np.testing.assert_allclose(reconstruct(data[:, 0], basis, A), data[:, 0], atol=1e-8)


def test_calibration_inverts(data, operators):
    L, A = operators
    assert calibrate_mu(data, L, A, calibrated_mu(data, L, A, 7.5)) == pytest.approx(7.5, rel=1e-12)
    assert calibrated_mu(data, L, A, 0.0) == 0.0


def test_argument_checks(data, operators):
    L, A = operators
    with pytest.raises(NegativeMuError):
        regularized_basis(data, L, A, -1.0, 2)
    with pytest.raises(InvalidCountError):
        regularized_basis(data, L, A, 1.0, 0)
    with pytest.raises(InvalidCountError):
        weighted_pca(data, A, data.shape[1] + 1)
    with pytest.raises(DimensionMismatchError):
        regularized_basis(data[:10], L, A, 1.0, 2)


def test_compare_bases_on_held_out_data(sphere2_basis, data):
    L, A = sphere2_basis.stiffness, sphere2_basis.mass
    result = compare_bases(data, data[:, :3], L, A, sphere2_basis, 3, 0.0)
    assert result.m == 3
    assert result.pca_error < result.lbo_error
    assert result.regularized_error == pytest.approx(result.pca_error, abs=1e-9)
    for value in (result.pca_error, result.lbo_error, result.regularized_error):
        assert 0.0 <= value <= 1.0
