"""Analytic fixture meshes and the ``--mesh`` argument resolver."""

from __future__ import annotations

import itertools
import logging
import math
from pathlib import Path
from typing import Callable, Dict, Tuple

import numpy as np

from core.errors import ParseError
from core.mesh import LoadedMesh, Mesh, load_mesh


def tetrahedron(edge: float = 1.0) -> Mesh:
    """Regular tetrahedron with the given edge length, centred at the origin."""
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64)
    v *= edge / (2.0 * math.sqrt(2.0))
    faces = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    return Mesh.from_arrays(v, faces)[0]


def icosahedron(radius: float = 1.0) -> Mesh:
    """Regular icosahedron inscribed in a sphere of the given radius."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = []
    for a, b in itertools.product((-1.0, 1.0), repeat=2):
        v.extend([[0.0, a, b * phi], [a, b * phi, 0.0], [b * phi, 0.0, a]])
    verts = np.array(v)
    # Edges of the unnormalized icosahedron have length 2.
    d = np.linalg.norm(verts[:, None, :] - verts[None, :, :], axis=2)
    adj = np.isclose(d, 2.0)
    faces = [
        [i, j, k]
        for i, j, k in itertools.combinations(range(12), 3)
        if adj[i, j] and adj[j, k] and adj[i, k]
    ]
    verts = radius * verts / np.linalg.norm(verts, axis=1, keepdims=True)
    return Mesh.from_arrays(verts, _orient_outward(verts, np.array(faces)))[0]


def icosphere(subdiv: int = 3, radius: float = 1.0) -> Mesh:
    """Loop-style midpoint subdivision of the icosahedron projected on the sphere."""
    base = icosahedron(1.0)
    v = np.array(base.vertices)
    f = np.array(base.faces)
    for _ in range(max(0, int(subdiv))):
        v, f = _subdivide(v, f)
    v = radius * v / np.linalg.norm(v, axis=1, keepdims=True)
    mesh = Mesh.from_arrays(v, f)[0]
    logging.debug("[shapes] icosphere subdiv=%d -> %d vertices", subdiv, mesh.n_vertices)
    return mesh


def square_grid(cells: int = 64, size: float = 1.0) -> Mesh:
    """Flat ``size`` x ``size`` square with ``cells`` x ``cells`` quads split along (i,j)-(i+1,j+1)."""
    if cells < 1:
        raise ParseError("Grid needs at least one cell")
    ticks = np.linspace(0.0, size, cells + 1)
    xs, ys = np.meshgrid(ticks, ticks, indexing="ij")
    v = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)])

    def idx(i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return i * (cells + 1) + j

    i, j = np.meshgrid(np.arange(cells), np.arange(cells), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
    faces = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    return Mesh.from_arrays(v, faces)[0]


def right_triangle() -> Mesh:
    """Unit right triangle (0,0), (1,0), (0,1)."""
    return Mesh.from_arrays([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])[0]


def _subdivide(v: np.ndarray, f: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pairs = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    mid = inverse.reshape(-1).reshape(3, -1).T + v.shape[0]
    v_new = np.concatenate([v, 0.5 * (v[edges[:, 0]] + v[edges[:, 1]])])
    v_new /= np.linalg.norm(v_new, axis=1, keepdims=True)
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    m01, m12, m20 = mid[:, 0], mid[:, 1], mid[:, 2]
    f_new = np.concatenate(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([b, m12, m01]),
            np.column_stack([c, m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return v_new, f_new


def _orient_outward(v: np.ndarray, f: np.ndarray) -> np.ndarray:
    f = f.copy()
    normals = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    inward = np.einsum("ij,ij->i", normals, v[f].mean(axis=1)) < 0
    f[inward] = f[inward][:, [0, 2, 1]]
    return f


FIXTURES: Dict[str, Callable[..., Mesh]] = {
    "tetrahedron": lambda arg: tetrahedron(),
    "icosahedron": lambda arg: icosahedron(),
    "icosphere": lambda arg: icosphere(int(arg) if arg else 3),
    "grid": lambda arg: square_grid(int(arg) if arg else 64),
    "triangle": lambda arg: right_triangle(),
}


def resolve_mesh(spec: str) -> LoadedMesh:
    """
    Resolve a ``--mesh`` argument.

    Existing files are loaded as OFF/OBJ; otherwise ``name[:arg][@scale]`` selects an
    analytic fixture, e.g. ``icosphere:4`` or ``grid:32@2.5``.
    """
    path = Path(spec)
    if path.exists():
        return load_mesh(path)
    body, _, scale = spec.partition("@")
    name, _, arg = body.partition(":")
    factory = FIXTURES.get(name.strip().lower())
    if factory is None:
        raise ParseError(f"Mesh '{spec}' is neither a file nor a known fixture ({', '.join(FIXTURES)})")
    try:
        mesh = factory(arg.strip())
        if scale:
            mesh = mesh.scaled(float(scale))
    except ValueError as e:
        raise ParseError(f"Invalid fixture spec '{spec}': {e}") from e
    logging.debug("[shapes] resolved fixture %s (%d vertices)", spec, mesh.n_vertices)
    return LoadedMesh(mesh, 0)
