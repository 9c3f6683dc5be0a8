import math

import numpy as np
import pytest

from core import shapes
from core.errors import DisconnectedMeshError, InvalidVertexError
from core.geodesics import covering_radius, distance_field, distance_rows, refine_distances, sample_block
from core.mesh import Mesh, SampleSet, farthest_point_sample


def test_grid_distances_along_edges_and_diagonal():
    grid = shapes.square_grid(4)
    d = distance_field(grid, 0)
    assert d[0] == 0.0
    assert d[20] == pytest.approx(1.0, abs=1e-12)
    # four diagonal edges lead straight to the opposite corner
    assert d[24] == pytest.approx(math.sqrt(2.0), abs=1e-12)


@pytest.mark.slow
def test_fine_grid_corner_to_corner():
    grid = shapes.square_grid(64)
    d = distance_field(grid, 0)
    assert d[grid.n_vertices - 1] == pytest.approx(math.sqrt(2.0), rel=0.08)


def test_all_pairs_distances_are_a_metric(sphere1):
    fields = distance_rows(sphere1, SampleSet.explicit(sphere1, range(sphere1.n_vertices)))
    D = fields.fields
    np.testing.assert_allclose(D, D.T, atol=1e-10)
    assert np.all(np.diag(D) == 0.0)
    # triangle inequality through every intermediate vertex
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :] + 1e-12)


def test_graph_distance_dominates_euclidean(sphere2):
    d = distance_field(sphere2, 7)
    chord = np.linalg.norm(sphere2.vertices - sphere2.vertices[7], axis=1)
    assert np.all(d >= chord - 1e-12)


def test_refinement_never_increases_distances():
    grid = shapes.square_grid(8)
    graph = distance_field(grid, 0)
    refined = distance_field(grid, 0, refine=True)
    assert np.all(refined <= graph)
    assert refined[0] == 0.0
    euclid = np.linalg.norm(grid.vertices - grid.vertices[0], axis=1)
    # (1, 0.25) is badly served by the graph metric
    target = 8 * 9 + 2
    assert abs(refined[target] - euclid[target]) < abs(graph[target] - euclid[target])


def test_refine_rows_matches_single_fields(sphere1):
    rows = np.vstack([distance_field(sphere1, s) for s in (0, 5)])
    refined = refine_distances(sphere1, rows)
    np.testing.assert_allclose(refined[1], refine_distances(sphere1, rows[1]), atol=1e-12)


def test_distance_rows_independent_of_threads(sphere2):
    samples = farthest_point_sample(sphere2, 40)
    one = distance_rows(sphere2, samples, threads=1)
    many = distance_rows(sphere2, samples, threads=3)
    np.testing.assert_array_equal(one.fields, many.fields)
    assert (one.p, one.n) == (40, sphere2.n_vertices)


def test_sample_block_and_covering_radius(icosahedron):
    samples = farthest_point_sample(icosahedron, 4)
    fields = distance_rows(icosahedron, samples)
    block = sample_block(fields)
    assert block.shape == (4, 4)
    np.testing.assert_allclose(block, block.T, atol=1e-12)
    assert covering_radius(fields) > 0.0
    everything = distance_rows(icosahedron, SampleSet.explicit(icosahedron, range(12)))
    assert covering_radius(everything) == 0.0


def test_disconnected_mesh_is_rejected():
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 0, 0], [6, 0, 0], [5, 1, 0]]
    mesh, _ = Mesh.from_arrays(v, [[0, 1, 2], [3, 4, 5]])
    with pytest.raises(DisconnectedMeshError):
        distance_field(mesh, 0)


def test_source_out_of_range(icosahedron):
    with pytest.raises(InvalidVertexError):
        distance_field(icosahedron, 12)
