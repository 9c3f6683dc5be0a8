"""Cotangent stiffness, lumped mass and the generalized eigensolver ``L phi = lambda A phi``."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Literal, Optional

import numpy as np
from scipy import linalg as dense_linalg
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

from core.curvature import DEFAULT_EPSILON, MetricWeights, gaussian_curvature, metric_weights
from core.errors import ConvergenceFailure, DimensionMismatchError, InvalidCountError
from core.mesh import Mesh

DENSE_ORACLE_MAX = 2000
BLOCK_PAD = 8
ROUND_ITERATIONS = 50
SolverMethod = Literal["auto", "sparse", "dense"]


class OperatorKind(str, Enum):
    STIFFNESS = "stiffness"
    MASS = "mass"


@dataclass(frozen=True, eq=False)
class SparseSymmetricOperator:
    """Symmetric sparse matrix tagged as stiffness (Dirichlet form) or lumped mass."""

    matrix: sparse.csr_matrix
    kind: OperatorKind

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.matrix.diagonal())

    def quadratic(self, f: np.ndarray) -> np.ndarray:
        """``f^T M f`` for a vector, or per column for a matrix."""
        mf = self.matrix @ f
        return np.einsum("i...,i...->...", f, mf)

    def __matmul__(self, other: np.ndarray) -> np.ndarray:
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    The ``k`` smallest eigenpairs of ``L phi = lambda A phi``.

    Columns of ``eigenvectors`` are A-orthonormal, eigenvalues ascend and are
    clipped at zero; each column's largest-magnitude entry is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stiffness: SparseSymmetricOperator
    mass: SparseSymmetricOperator
    residuals: np.ndarray

    @property
    def k(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def n(self) -> int:
        return int(self.eigenvectors.shape[0])

    def truncated(self, k: int) -> "SpectralBasis":
        if not 1 <= k <= self.k:
            raise InvalidCountError(f"Cannot truncate a {self.k}-mode basis to {k} modes")
        return SpectralBasis(
            eigenvalues=self.eigenvalues[:k],
            eigenvectors=self.eigenvectors[:, :k],
            stiffness=self.stiffness,
            mass=self.mass,
            residuals=self.residuals[:k],
        )


def assemble_stiffness(mesh: Mesh) -> SparseSymmetricOperator:
    """Cotangent matrix: ``L_uv = -(cot a + cot b) / 2`` off the diagonal, zero row sums."""
    v = mesh.vertices[mesh.faces]
    rows, cols, vals = [], [], []
    for c in range(3):
        i = mesh.faces[:, (c + 1) % 3]
        j = mesh.faces[:, (c + 2) % 3]
        e1 = v[:, (c + 1) % 3] - v[:, c]
        e2 = v[:, (c + 2) % 3] - v[:, c]
        cot = np.einsum("ij,ij->i", e1, e2) / np.linalg.norm(np.cross(e1, e2), axis=1)
        half = -0.5 * cot
        rows.extend([i, j])
        cols.extend([j, i])
        vals.extend([half, half])
    n = mesh.n_vertices
    off = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    off.sum_duplicates()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    matrix = (off + sparse.diags(diag)).tocsr()
    logging.debug("[lbo] assembled stiffness (n=%d, nnz=%d)", n, matrix.nnz)
    return SparseSymmetricOperator(matrix=matrix, kind=OperatorKind.STIFFNESS)


def assemble_mass(mesh: Mesh, weights: Optional[MetricWeights] = None) -> SparseSymmetricOperator:
    """Lumped mass ``A_vv = area_v * max(|K_v|, epsilon / s^2) ** alpha``; no weights means the regular metric."""
    w = np.ones(mesh.n_vertices) if weights is None else np.asarray(weights.conformal)
    if w.shape[0] != mesh.n_vertices:
        raise DimensionMismatchError(f"{w.shape[0]} weights for {mesh.n_vertices} vertices")
    matrix = sparse.diags(w * mesh.vertex_areas).tocsr()
    return SparseSymmetricOperator(matrix=matrix, kind=OperatorKind.MASS)


def _reduced(L: SparseSymmetricOperator, A: SparseSymmetricOperator) -> tuple[sparse.csr_matrix, np.ndarray]:
    if L.dimension != A.dimension:
        raise DimensionMismatchError(f"Stiffness is {L.dimension}x{L.dimension}, mass is {A.dimension}x{A.dimension}")
    inv_sqrt = 1.0 / np.sqrt(A.diagonal())
    scaling = sparse.diags(inv_sqrt)
    reduced = (scaling @ L.matrix @ scaling).tocsr()
    # Symmetrize away the rounding of the triple product.
    return ((reduced + reduced.T) * 0.5).tocsr(), inv_sqrt


def _normalize_signs(vectors: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def dense_eigenpairs(
    L: SparseSymmetricOperator, A: SparseSymmetricOperator, k: Optional[int] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Dense oracle through ``A^{-1/2} L A^{-1/2}``; returns ascending eigenvalues and A-orthonormal vectors."""
    reduced, inv_sqrt = _reduced(L, A)
    n = reduced.shape[0]
    if n > DENSE_ORACLE_MAX:
        logging.warning("[lbo] dense eigensolve on n=%d exceeds the oracle size %d", n, DENSE_ORACLE_MAX)
    subset = None if k is None else (0, min(k, n) - 1)
    values, vectors = dense_linalg.eigh(reduced.toarray(), subset_by_index=subset)
    return values, vectors * inv_sqrt[:, None]


def _block_eigenpairs(
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    k: int,
    *,
    tol: float,
    max_iter: Optional[int],
) -> tuple[np.ndarray, np.ndarray]:
    """
    LOBPCG on the reduced operator with a block of ``k + BLOCK_PAD`` vectors.

    The block holds every member of a degenerate cluster at once, so none is skipped.
    The preconditioner is an LU factorization of the reduced operator shifted by
    ``1e-8 * trace / n``. Runs in rounds of ``ROUND_ITERATIONS`` from a seeded start
    until the first ``k`` residuals drop below ``tol * trace / n``.
    """
    reduced, inv_sqrt = _reduced(L, A)
    n = reduced.shape[0]
    scale = float(reduced.diagonal().sum()) / n
    shifted = (reduced + 1e-8 * scale * sparse.identity(n, format="csr")).tocsc()
    try:
        factor = splu(shifted)
    except RuntimeError as e:
        raise ConvergenceFailure(f"Preconditioner factorization failed: {e}") from e
    precond = LinearOperator((n, n), matvec=factor.solve, matmat=factor.solve, dtype=np.float64)

    block = np.random.default_rng(0).standard_normal((n, k + BLOCK_PAD))
    budget = max_iter if max_iter is not None else 20 * ROUND_ITERATIONS
    threshold = tol * scale
    done = 0
    while True:
        rounds = max(1, min(ROUND_ITERATIONS, budget - done))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                values, block = lobpcg(reduced, block, M=precond, tol=threshold, maxiter=rounds, largest=False)
            except np.linalg.LinAlgError as e:
                raise ConvergenceFailure(f"Block eigensolver broke down: {e}") from e
        for w in caught:
            logging.debug("[lbo] lobpcg: %s", w.message)
        done += rounds
        order = np.argsort(values)
        values, block = values[order], block[:, order]
        head = block[:, :k]
        worst = float(np.max(np.linalg.norm(reduced @ head - head * values[:k], axis=0)))
        logging.debug("[lbo] lobpcg k=%d block=%d iterations=%d residual=%.3e", k, block.shape[1], done, worst)
        if worst <= threshold:
            break
        if done >= budget:
            raise ConvergenceFailure(
                f"Block eigensolver reached residual {worst:.3e} > {threshold:.3e} after {done} iterations"
            )
    return values[:k], head * inv_sqrt[:, None]


def smallest_eigenpairs(
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    k: int,
    *,
    tol: float = 1e-9,
    max_iter: Optional[int] = None,
    method: SolverMethod = "auto",
    dense_threshold: int = 500,
    residual_tol: float = 1e-6,
) -> SpectralBasis:
    """
    Solve for the ``k`` algebraically smallest eigenpairs.

    ``method="sparse"`` runs preconditioned LOBPCG with a block of ``k + BLOCK_PAD`` vectors;
    ``"dense"`` is the full decomposition oracle; ``"auto"`` picks dense for
    ``n <= dense_threshold`` or when the block would not fit in ``n``.
    Raises ConvergenceFailure when the block solver runs out of iterations or a pair's relative residual
    ``||L phi - lambda A phi|| / (||A phi|| * max(lambda_k, 1e-6 * rho))`` exceeds
    ``residual_tol``, ``rho`` being the largest ``L_vv / A_vv``.
    """
    n = L.dimension
    if A.dimension != n:
        raise DimensionMismatchError(f"Stiffness is {n}x{n}, mass is {A.dimension}x{A.dimension}")
    if not 1 <= k <= n:
        raise InvalidCountError(f"k={k} must lie in [1, {n}]")
    too_close = k + BLOCK_PAD > n
    use_dense = method == "dense" or (method == "auto" and (n <= dense_threshold or too_close))
    if method == "sparse" and too_close:
        logging.debug("[lbo] k=%d too close to n=%d for a block of k+%d, using the dense solver", k, n, BLOCK_PAD)
        use_dense = True

    if use_dense:
        values, vectors = dense_eigenpairs(L, A, k)
    else:
        values, vectors = _block_eigenpairs(L, A, k, tol=tol, max_iter=max_iter)

    vectors = _normalize_signs(vectors)
    values = np.maximum(values, 0.0)
    residuals = _relative_residuals(L, A, values, vectors)
    if residuals.size and float(residuals.max()) > residual_tol:
        raise ConvergenceFailure(
            f"Eigenpair residual {float(residuals.max()):.3e} exceeds tolerance {residual_tol:.1e}"
        )
    logging.info("[lbo] solved %d eigenpairs (n=%d, lambda_k=%.6g)", k, n, float(values[-1]))
    return SpectralBasis(eigenvalues=values, eigenvectors=vectors, stiffness=L, mass=A, residuals=residuals)


def _relative_residuals(
    L: SparseSymmetricOperator, A: SparseSymmetricOperator, values: np.ndarray, vectors: np.ndarray
) -> np.ndarray:
    a_phi = A.matrix @ vectors
    res = np.linalg.norm(L.matrix @ vectors - a_phi * values, axis=0)
    # Floor the scale at a millionth of the spectral-radius estimate so null modes stay measurable.
    radius = float(np.max(L.diagonal() / A.diagonal()))
    scale = max(float(np.max(np.abs(values))), 1e-6 * radius, np.finfo(float).tiny)
    return res / (np.linalg.norm(a_phi, axis=0) * scale)


def laplace_beltrami(
    mesh: Mesh,
    k: int,
    alpha: float = 0.0,
    epsilon: float = DEFAULT_EPSILON,
    **solver: object,
) -> SpectralBasis:
    """Curvature, weights, stiffness, mass and eigenpairs in one call."""
    weights = metric_weights(gaussian_curvature(mesh), alpha, epsilon)
    L = assemble_stiffness(mesh)
    A = assemble_mass(mesh, weights)
    return smallest_eigenpairs(L, A, k, **solver)  # type: ignore[arg-type]
