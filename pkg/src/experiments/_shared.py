"""Parameter blocks and helpers shared by several experiments."""

from pathlib import Path
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from core.curvature import DEFAULT_EPSILON, gaussian_curvature, metric_weights
from core.errors import DimensionMismatchError
from core.laplacian import (
    SparseSymmetricOperator,
    SpectralBasis,
    assemble_mass,
    assemble_stiffness,
    smallest_eigenpairs,
)
from core.matrix_io import read_matrix
from core.mesh import Mesh
from core.shapes import resolve_mesh

from .base import ExperimentParams, RunContext

MATRIX_SUFFIXES = {".csv", ".spmx"}


class OperatorParams(ExperimentParams):
    """Metric and solver settings of the Laplace-Beltrami operator."""

    alpha: float = Field(default=0.0, ge=0.0, le=1.0)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)
    solver: Literal["auto", "sparse", "dense"] = "auto"
    tol: float = Field(default=1e-9, gt=0.0)
    max_iter: Optional[int] = Field(default=None, ge=1)


def assemble_operators(
    mesh: Mesh, alpha: float, epsilon: float, ctx: RunContext
) -> Tuple[SparseSymmetricOperator, SparseSymmetricOperator]:
    with ctx.timer.stage("assemble"):
        weights = metric_weights(gaussian_curvature(mesh), alpha, epsilon)
        return assemble_stiffness(mesh), assemble_mass(mesh, weights)


def solve_basis(mesh: Mesh, k: int, params: OperatorParams, ctx: RunContext) -> SpectralBasis:
    """Assemble L and A for ``params.alpha`` and solve for ``k`` eigenpairs."""
    L, A = assemble_operators(mesh, params.alpha, params.epsilon, ctx)
    with ctx.timer.stage("eigensolve"):
        return smallest_eigenpairs(L, A, k, tol=params.tol, max_iter=params.max_iter, method=params.solver)


def mesh_summary(mesh: Mesh, dropped: int) -> dict:
    return {"n_vertices": mesh.n_vertices, "n_faces": mesh.n_faces, "dropped_faces": dropped}


def load_columns(sources: Sequence[str], n_vertices: int) -> np.ndarray:
    """
    Stack per-vertex data columns from matrix files (``.csv``/``.spmx``) or meshes.

    A mesh contributes its three coordinate functions. Matrices stored one field per
    row are transposed.
    """
    blocks = []
    for src in sources:
        if Path(src).suffix.lower() in MATRIX_SUFFIXES:
            block = read_matrix(src)
            if block.shape[0] != n_vertices and block.shape[1] == n_vertices:
                block = block.T
        else:
            block = np.array(resolve_mesh(src).mesh.vertices)
        if block.shape[0] != n_vertices:
            raise DimensionMismatchError(f"{src}: {block.shape[0]} rows for a mesh with {n_vertices} vertices")
        blocks.append(block)
    return np.hstack(blocks)
