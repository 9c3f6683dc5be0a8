import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core import shapes
from core.analysis import (
    a_orthonormalize,
    bound_check,
    courant_fischer_check,
    dirichlet_energy,
    optimality_audit,
    principal_angles,
    project,
    project_coordinates,
    random_rival_audit,
)
from core.errors import (
    ConstantFunctionError,
    DimensionMismatchError,
    InvalidCountError,
    RankDeficientRivalError,
)
from core.laplacian import laplace_beltrami


def test_projection_parseval_at_full_order(sphere1):
    basis = laplace_beltrami(sphere1, sphere1.n_vertices)
    f = np.random.default_rng(0).standard_normal(sphere1.n_vertices)
    proj = project(f, basis, basis.k)
    energy = float(basis.mass.quadratic(f))
    assert float(np.sum(proj.coefficients.values**2)) == pytest.approx(energy, rel=1e-9)
    np.testing.assert_allclose(proj.reconstruction, f, atol=1e-9 * np.abs(f).max())


def test_residual_is_orthogonal_to_the_span(sphere2_basis):
    f = np.random.default_rng(1).standard_normal(sphere2_basis.n)
    proj = project(f, sphere2_basis, 12)
    inner = sphere2_basis.eigenvectors[:, :12].T @ (sphere2_basis.mass @ proj.residual)
    assert np.abs(inner).max() < 1e-9 * np.sqrt(float(sphere2_basis.mass.quadratic(f)))


def test_project_rejects_bad_input(sphere2_basis):
    with pytest.raises(DimensionMismatchError):
        project(np.ones(5), sphere2_basis, 2)
    with pytest.raises(InvalidCountError):
        project(np.ones(sphere2_basis.n), sphere2_basis, sphere2_basis.k + 1)


def test_bound_holds_for_random_fields(sphere2_basis):
    rng = np.random.default_rng(2)
    for _ in range(20):
        f = rng.standard_normal(sphere2_basis.n)
        previous = np.inf
        for n in (1, 4, 9, 20, 39):
            rep = bound_check(f, sphere2_basis, n)
            assert rep.ratio <= 1.0 + 1e-9
            assert rep.residual_sq <= previous
            previous = rep.residual_sq


def test_bound_holds_on_open_meshes(grid8):
    basis = laplace_beltrami(grid8, 30)
    rng = np.random.default_rng(3)
    for n in (1, 5, 29):
        assert bound_check(rng.standard_normal(grid8.n_vertices), basis, n).ratio <= 1.0 + 1e-9


@pytest.mark.slow
@pytest.mark.parametrize("spec", ["icosphere:4", "grid:64"])
def test_bound_holds_at_desk_scale(spec):
    mesh = shapes.resolve_mesh(spec).mesh
    basis = laplace_beltrami(mesh, 51)
    rng = np.random.default_rng(5)
    for _ in range(100):
        f = rng.standard_normal(mesh.n_vertices)
        for n in (5, 20, 50):
            assert bound_check(f, basis, n).ratio <= 1.0 + 1e-9


def test_bound_is_tight_for_the_next_eigenfunction(sphere2_basis):
    rep = bound_check(sphere2_basis.eigenvectors[:, 9], sphere2_basis, 9)
    assert rep.ratio == pytest.approx(1.0, abs=1e-9)


def test_bound_check_errors(sphere2_basis):
    with pytest.raises(ConstantFunctionError):
        bound_check(np.ones(sphere2_basis.n), sphere2_basis, 3)
    with pytest.raises(InvalidCountError):
        bound_check(np.arange(sphere2_basis.n, dtype=float), sphere2_basis, sphere2_basis.k)


def test_eigenbasis_attains_ratio_one(sphere2_basis):
    for n in (1, 4, 9):
        audit = optimality_audit(sphere2_basis, sphere2_basis.eigenvectors[:, :n])
        assert audit.worst_ratio == pytest.approx(1.0, abs=1e-8)
        assert audit.rival_rank == n


def test_random_rivals_never_beat_the_eigenbasis(sphere2_basis):
    trials = random_rival_audit(sphere2_basis, 6, 30, np.random.default_rng(4))
    assert trials.unbounded == 0
    assert trials.min_ratio >= 1.0 - 1e-6
    assert len(trials.worst_ratios) == 30


def test_rivals_without_the_constant_are_unbounded(sphere2_basis):
    trials = random_rival_audit(sphere2_basis, 3, 5, np.random.default_rng(5), include_constant=False)
    assert trials.unbounded == 5
    with pytest.raises(ConstantFunctionError):
        optimality_audit(sphere2_basis, sphere2_basis.eigenvectors[:, 1:4])


def test_rival_audit_does_not_depend_on_threads(sphere2_basis):
    one = random_rival_audit(sphere2_basis, 4, 8, np.random.default_rng(6), threads=1)
    many = random_rival_audit(sphere2_basis, 4, 8, np.random.default_rng(6), threads=4)
    assert one.worst_ratios == many.worst_ratios


def test_rank_deficient_rival(sphere2_basis):
    col = np.random.default_rng(7).standard_normal(sphere2_basis.n)
    with pytest.raises(RankDeficientRivalError):
        optimality_audit(sphere2_basis, np.column_stack([col, 2.0 * col]))


def test_a_orthonormalize(sphere2_basis):
    F = np.random.default_rng(8).standard_normal((sphere2_basis.n, 5))
    Q = a_orthonormalize(F, sphere2_basis.mass)
    np.testing.assert_allclose(Q.T @ (sphere2_basis.mass @ Q), np.eye(5), atol=1e-10)
    assert float(principal_angles(Q, F, sphere2_basis.mass).max()) < 1e-8


def test_courant_fischer_min_max(sphere2_basis):
    rng = np.random.default_rng(9)
    for n in (2, 6):
        fields = rng.standard_normal((sphere2_basis.n, n))
        quotient = courant_fischer_check(sphere2_basis.stiffness, sphere2_basis.mass, fields)
        assert quotient <= sphere2_basis.eigenvalues[n] * (1.0 + 1e-8)
    eig = courant_fischer_check(sphere2_basis.stiffness, sphere2_basis.mass, sphere2_basis.eigenvectors[:, :4])
    assert eig == pytest.approx(sphere2_basis.eigenvalues[4], rel=1e-8)


def test_dirichlet_energy_of_eigenvectors(sphere2_basis):
    phi = sphere2_basis.eigenvectors[:, :6]
    assert dirichlet_energy(phi, sphere2_basis.stiffness) == pytest.approx(
        float(sphere2_basis.eigenvalues[:6].sum()), rel=1e-9, abs=1e-12
    )


def test_coordinate_projection(sphere2, sphere2_basis):
    assert project_coordinates(sphere2, sphere2_basis, 1).relative_error == pytest.approx(1.0, abs=1e-9)
    coarse = project_coordinates(sphere2, sphere2_basis, 4)
    assert coarse.relative_error < 0.1
    assert coarse.vertices.shape == (sphere2.n_vertices, 3)
    with pytest.raises(DimensionMismatchError):
        project_coordinates(shapes.icosahedron(), sphere2_basis, 4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=1, max_value=38))
def test_bound_holds_for_arbitrary_fields(sphere2_basis, seed, n):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(sphere2_basis.eigenvectors.shape[0]) * rng.uniform(0.01, 100.0)
    assert bound_check(f, sphere2_basis, n).ratio <= 1.0 + 1e-9
