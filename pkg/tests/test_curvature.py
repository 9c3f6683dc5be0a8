import math

import numpy as np
import pytest

from core import shapes
from core.curvature import (
    corner_angles,
    gauss_bonnet_defect,
    gaussian_curvature,
    metric_weights,
    total_curvature,
)
from core.errors import InvalidAlphaError, InvalidEpsilonError


@pytest.mark.parametrize(
    "factory",
    [shapes.tetrahedron, shapes.icosahedron, lambda: shapes.icosphere(2), lambda: shapes.icosphere(3)],
)
def test_gauss_bonnet_on_closed_fixtures(factory):
    mesh = factory()
    curv = gaussian_curvature(mesh)
    assert total_curvature(curv) == pytest.approx(4.0 * math.pi, rel=1e-8)
    assert gauss_bonnet_defect(mesh, curv) < 1e-8


def test_boundary_defects_close_the_disk():
    # boundary vertices use pi - angle sum, so open disks also sum to 2 pi chi
    for mesh in (shapes.square_grid(8), shapes.right_triangle()):
        assert total_curvature(gaussian_curvature(mesh)) == pytest.approx(2.0 * math.pi, rel=1e-8)


def test_flat_grid_has_zero_interior_curvature(grid8):
    curv = gaussian_curvature(grid8)
    interior = ~grid8.boundary_flags
    assert np.max(np.abs(curv.values[interior])) < 1e-9


def test_corner_angles_sum_to_pi(sphere1):
    assert np.allclose(corner_angles(sphere1).sum(axis=1), math.pi, atol=1e-12)


def test_tetrahedron_defects():
    curv = gaussian_curvature(shapes.tetrahedron())
    assert np.allclose(curv.angle_defects, math.pi, atol=1e-12)


@pytest.mark.slow
def test_unit_sphere_curvature_is_one():
    mesh = shapes.icosphere(4)
    curv = gaussian_curvature(mesh)
    mean = total_curvature(curv) / float(curv.vertex_areas.sum())
    assert mean == pytest.approx(1.0, rel=0.01)
    assert float(np.median(np.abs(curv.values - 1.0))) < 0.02


def test_curvature_scales_inversely_with_area(sphere1):
    base = gaussian_curvature(sphere1)
    big = gaussian_curvature(sphere1.scaled(2.0))
    np.testing.assert_allclose(big.values, base.values / 4.0, rtol=1e-10)
    np.testing.assert_allclose(big.vertex_areas, base.vertex_areas * 4.0, rtol=1e-12)


def test_regular_metric_has_unit_weights(sphere1):
    w = metric_weights(gaussian_curvature(sphere1), alpha=0.0)
    assert np.all(w.weights == 1.0)
    assert w.scale == pytest.approx(sphere1.total_area / (4.0 * math.pi))


def test_scale_invariant_weights(sphere1):
    base = metric_weights(gaussian_curvature(sphere1), alpha=1.0)
    scaled = metric_weights(gaussian_curvature(sphere1.scaled(3.7)), alpha=1.0)
    np.testing.assert_allclose(scaled.weights, base.weights, rtol=1e-10)
    # the dimensional factor is |K|, which does scale
    np.testing.assert_allclose(scaled.conformal, base.conformal / 3.7**2, rtol=1e-10)


def test_epsilon_floor_on_flat_regions(grid8):
    w = metric_weights(gaussian_curvature(grid8), alpha=1.0, epsilon=1e-3)
    interior = ~grid8.boundary_flags
    np.testing.assert_allclose(w.weights[interior], 1e-3)


@pytest.mark.parametrize("alpha", [-0.1, 1.5, float("nan")])
def test_alpha_out_of_range(sphere1, alpha):
    with pytest.raises(InvalidAlphaError):
        metric_weights(gaussian_curvature(sphere1), alpha)


@pytest.mark.parametrize("epsilon", [0.0, -1e-3])
def test_epsilon_must_be_positive(sphere1, epsilon):
    with pytest.raises(InvalidEpsilonError):
        metric_weights(gaussian_curvature(sphere1), 0.5, epsilon)
