"""Classical scaling and its spectral counterpart on a truncated eigenbasis."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy import linalg as dense_linalg
from scipy.sparse.linalg import LinearOperator, cg
from scipy.spatial.distance import cdist

from core.errors import (
    AsymmetricInputError,
    ConvergenceFailure,
    DegenerateSamplingError,
    DimensionMismatchError,
    InvalidCountError,
    InvalidParameterError,
    TooLargeError,
)
from core.geodesics import DistanceFieldSet, sample_block
from core.laplacian import SpectralBasis

DENSE_MDS_MAX = 4000
Weighting = Literal["euclidean", "mass"]


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Symmetric ``C`` with ``D2 ~ Phi C Phi^T``."""

    C: np.ndarray
    eta: float
    iterations: int = 0

    @property
    def k(self) -> int:
        return int(self.C.shape[0])


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    X: np.ndarray
    stress: Optional[float]
    elapsed: float
    eigenvalues: np.ndarray
    method: str
    beta: Optional[np.ndarray] = None
    degenerate: bool = False


def embedding_stress(X: np.ndarray, D: np.ndarray, rows: Optional[np.ndarray] = None) -> float:
    """
    ``sum (|x_i - x_j| - D_ij)^2 / sum D_ij^2``.

    ``D`` is ``n x n``, or ``p x n`` together with the vertex index of each row.
    """
    D = np.asarray(D, dtype=np.float64)
    left = X if rows is None else X[np.asarray(rows)]
    if left.shape[0] != D.shape[0] or X.shape[0] != D.shape[1]:
        raise DimensionMismatchError(f"Distances of shape {D.shape} do not match embedding {X.shape}")
    denom = float(np.sum(D**2))
    if denom == 0.0:
        return 0.0
    return float(np.sum((cdist(left, X) - D) ** 2) / denom)


def _top_scaled(H: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``m`` eigenvectors of symmetric ``H`` scaled by sqrt of the clipped eigenvalues."""
    size = H.shape[0]
    vals, vecs = dense_linalg.eigh(0.5 * (H + H.T), subset_by_index=(size - m, size - 1))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    vals = np.maximum(vals, 0.0)
    return vecs * np.sqrt(vals), vals


def classical_mds(D: np.ndarray, m: int, max_n: int = DENSE_MDS_MAX) -> EmbeddingResult:
    """Dense classical scaling of a full distance matrix; negative eigenvalues truncate to zero."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionMismatchError(f"Distance matrix must be square, got {D.shape}")
    n = D.shape[0]
    if n > max_n:
        raise TooLargeError(f"Dense classical scaling is capped at {max_n} points, got {n}")
    if not 1 <= m <= n:
        raise InvalidCountError(f"Embedding dimension m={m} must lie in [1, {n}]")
    scale = max(float(np.abs(D).max()), np.finfo(float).tiny)
    if float(np.abs(D - D.T).max()) > 1e-9 * scale:
        raise AsymmetricInputError("Distance matrix is not symmetric")
    if float(np.abs(np.diag(D)).max()) > 1e-9 * scale:
        raise AsymmetricInputError("Distance matrix must have a zero diagonal")

    start = time.perf_counter()
    D2 = (0.5 * (D + D.T)) ** 2
    rows = D2.mean(axis=1)
    B = -0.5 * (D2 - rows[:, None] - rows[None, :] + rows.mean())
    X, vals = _top_scaled(B, m)
    X = X - X.mean(axis=0)
    elapsed = time.perf_counter() - start
    stress = embedding_stress(X, D)
    logging.info("[smds] classical scaling n=%d m=%d stress=%.6g (%.3fs)", n, m, stress, elapsed)
    return EmbeddingResult(X=X, stress=stress, elapsed=elapsed, eigenvalues=vals, method="classical")


def fit_coefficients(
    fields: DistanceFieldSet,
    basis: SpectralBasis,
    eta: Optional[float] = None,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> CoefficientMatrix:
    """
    Fit ``C`` to the squared sample block under a biharmonic penalty.

    Minimizes ``||S Phi C Phi^T S^T - D2_pp||_F^2 + eta sum (lambda_i + lambda_j)^2 C_ij^2``.
    ``eta`` defaults to ``1e-6 * mean(D2_pp)``. With ``eta == 0`` the minimum-norm
    least-squares solution is returned in closed form; otherwise preconditioned conjugate
    gradients run on the normal equations in the eigenbasis of ``(S Phi)^T S Phi``.
    """
    if eta is not None and eta < 0:
        raise InvalidParameterError(f"eta must be non-negative, got {eta}")
    if fields.n != basis.n:
        raise DimensionMismatchError(f"Distance rows cover {fields.n} vertices, basis {basis.n}")
    rows = fields.sources.as_array()
    p, k = rows.size, basis.k
    psi = basis.eigenvectors[rows]
    rank = int(np.linalg.matrix_rank(psi))
    if rank < min(p, k):
        raise DegenerateSamplingError(f"Sampled eigenvectors have rank {rank} < min(p, k) = {min(p, k)}")
    if k * (k + 1) // 2 > p * (p + 1) // 2:
        logging.warning(
            "[smds] %d coefficients from %d sample pairs: fit relies on the regularizer",
            k * (k + 1) // 2,
            p * (p + 1) // 2,
        )
    block = sample_block(fields)
    target = (0.5 * (block + block.T)) ** 2
    if not np.any(target):
        return CoefficientMatrix(C=np.zeros((k, k)), eta=0.0 if eta is None else float(eta))
    eta = 1e-6 * float(target.mean()) if eta is None else float(eta)

    if eta == 0.0:
        pinv = np.linalg.pinv(psi)
        C = pinv @ target @ pinv.T
        return CoefficientMatrix(C=0.5 * (C + C.T), eta=0.0)

    gram = psi.T @ psi
    s, V = dense_linalg.eigh(0.5 * (gram + gram.T))
    s = np.maximum(s, 0.0)
    lam = basis.eigenvalues
    W = (lam[:, None] + lam[None, :]) ** 2
    rhs = V.T @ (psi.T @ target @ psi) @ V
    pen_diag = (V**2).T @ W @ (V**2)
    precond = np.outer(s, s) + eta * pen_diag
    precond[precond <= 0] = 1.0
    count = {"iterations": 0}

    def _apply(x: np.ndarray) -> np.ndarray:
        chat = x.reshape(k, k)
        full = V @ chat @ V.T
        return (s[:, None] * chat * s[None, :] + eta * (V.T @ (W * full) @ V)).ravel()

    def _count(_: np.ndarray) -> None:
        count["iterations"] += 1

    op = LinearOperator((k * k, k * k), matvec=_apply, dtype=np.float64)
    prec = LinearOperator((k * k, k * k), matvec=lambda x: x / precond.ravel(), dtype=np.float64)
    solution, info = cg(op, rhs.ravel(), rtol=tol, maxiter=max_iter, M=prec, callback=_count)
    if info > 0:
        raise ConvergenceFailure(f"Coefficient fit did not reach tolerance {tol:.1e} in {max_iter} iterations")
    C = V @ solution.reshape(k, k) @ V.T
    logging.debug("[smds] coefficient fit p=%d k=%d eta=%.3e iterations=%d", p, k, eta, count["iterations"])
    return CoefficientMatrix(C=0.5 * (C + C.T), eta=eta, iterations=count["iterations"])


def reconstruct_squared_distances(
    coeffs: CoefficientMatrix, basis: SpectralBasis, rows: Optional[np.ndarray] = None
) -> np.ndarray:
    """``Phi[rows] C Phi^T``: interpolated squared distances (all rows by default)."""
    phi = basis.eigenvectors
    left = phi if rows is None else phi[np.asarray(rows)]
    return left @ coeffs.C @ phi.T


def spectral_mds(
    coeffs: CoefficientMatrix,
    basis: SpectralBasis,
    m: int,
    weighting: Weighting = "euclidean",
    reference: Optional[np.ndarray] = None,
    reference_rows: Optional[np.ndarray] = None,
) -> EmbeddingResult:
    """
    Embed ``X = Phi beta`` from the spectral representation of ``D2``.

    ``weighting="euclidean"`` minimizes ``||Phi beta beta^T Phi^T + J Phi C Phi^T J / 2||_F``
    exactly through ``Phi = QR``; ``"mass"`` diagonalizes ``-P C P^T / 2`` with
    ``P = Phi^T A J Phi``. Stress is measured against ``reference`` (full matrix, or
    rows given by ``reference_rows``) when supplied.
    """
    C = np.asarray(coeffs.C, dtype=np.float64)
    k = basis.k
    if C.shape != (k, k):
        raise DimensionMismatchError(f"Coefficient matrix {C.shape} does not match a {k}-mode basis")
    if not 1 <= m <= k:
        raise InvalidCountError(f"Embedding dimension m={m} must lie in [1, {k}]")

    start = time.perf_counter()
    phi = basis.eigenvectors
    if weighting == "euclidean":
        Q, R = np.linalg.qr(phi)
        P = (Q.T @ (Q - Q.mean(axis=0))) @ R
        gamma, vals = _top_scaled(-0.5 * P @ C @ P.T, m)
        X = Q @ gamma
        X = X - X.mean(axis=0)
        beta = dense_linalg.solve_triangular(R, Q.T @ X)
    elif weighting == "mass":
        area = basis.mass.diagonal()
        P = phi.T @ (area[:, None] * (phi - phi.mean(axis=0)))
        beta, vals = _top_scaled(-0.5 * P @ C @ P.T, m)
        X = phi @ beta
        X = X - X.mean(axis=0)
        beta = phi.T @ (area[:, None] * X)
    else:
        raise InvalidCountError(f"Unknown weighting '{weighting}'")
    elapsed = time.perf_counter() - start

    degenerate = not bool(np.any(vals > 0))
    stress: Optional[float] = None
    if reference is not None:
        stress = embedding_stress(X, reference, reference_rows)
    if degenerate:
        logging.warning("[smds] spectral embedding is degenerate (no positive eigenvalue)")
        stress = 1.0
    logging.info("[smds] spectral scaling k=%d m=%d (%.3fs)", k, m, elapsed)
    return EmbeddingResult(
        X=X,
        stress=stress,
        elapsed=elapsed,
        eigenvalues=vals,
        method=f"spectral-{weighting}",
        beta=beta,
        degenerate=degenerate,
    )
