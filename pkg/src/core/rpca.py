"""
Regularized PCA: data-projection error traded against Dirichlet smoothness.

For an A-orthonormal frame ``P`` the objective
``sum_i ||P P^T A x_i - x_i||_A^2 + mu trace(P^T L P)`` equals a constant minus
``trace(P^T (A X X^T A - mu L) P)``, so the minimizer spans the top generalized
eigenvectors of the pencil ``(A X X^T A - mu L, A)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import linalg as dense_linalg
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh

from core.errors import ConvergenceFailure, DimensionMismatchError, InvalidCountError, NegativeMuError
from core.laplacian import OperatorKind, SparseSymmetricOperator, SpectralBasis
from core.parallel import gather_threads

DENSE_PENCIL_MAX = 3000
NORM_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class RegularizedBasis:
    """An A-orthonormal ``n x m`` frame with the two objective terms it achieves."""

    P: np.ndarray
    mu: float
    theta: np.ndarray
    projection_error: float
    dirichlet_energy: float

    @property
    def m(self) -> int:
        return int(self.P.shape[1])

    @property
    def objective_terms(self) -> Tuple[float, float]:
        return (self.projection_error, self.dirichlet_energy)

    @property
    def objective(self) -> float:
        return self.projection_error + self.mu * self.dirichlet_energy


class BasisComparison(BaseModel):
    """Relative A-norm reconstruction errors of held-out data under three bases."""

    m: int
    mu: float
    pca_error: float
    lbo_error: float
    regularized_error: float


def _data(X: np.ndarray, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n:
        raise DimensionMismatchError(f"Data of shape {X.shape} does not match {n} vertices")
    return X


def _terms(P: np.ndarray, X: np.ndarray, L: SparseSymmetricOperator, A: SparseSymmetricOperator) -> Tuple[float, float]:
    resid = P @ (P.T @ (A @ X)) - X
    return float(np.sum(A.quadratic(resid))), float(np.sum(L.quadratic(P)))


def objective(
    P: np.ndarray,
    X: np.ndarray,
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    mu: float,
) -> float:
    """Projection error plus ``mu`` times the Dirichlet energy of the frame."""
    X = _data(X, A.dimension)
    proj, dirichlet = _terms(np.asarray(P, dtype=np.float64), X, L, A)
    return proj + mu * dirichlet


def _finish(U: np.ndarray, theta: np.ndarray, root: np.ndarray, X, L, A, mu: float) -> RegularizedBasis:
    P = U / root[:, None]
    # deterministic sign: largest-magnitude entry positive
    flip = np.sign(P[np.argmax(np.abs(P), axis=0), np.arange(P.shape[1])])
    flip[flip == 0] = 1.0
    P = P * flip
    proj, dirichlet = _terms(P, X, L, A)
    return RegularizedBasis(P=P, mu=float(mu), theta=theta, projection_error=proj, dirichlet_energy=dirichlet)


def weighted_pca(X: np.ndarray, A: SparseSymmetricOperator, m: int, L: Optional[SparseSymmetricOperator] = None) -> RegularizedBasis:
    """
    PCA under the A-inner product.

    Top ``m`` generalized eigenvectors of ``(A X X^T A) p = theta A p``, obtained from the
    thin SVD of ``A^{1/2} X``. ``L`` only feeds the reported Dirichlet term.
    """
    n = A.dimension
    X = _data(X, n)
    if not 1 <= m <= min(X.shape):
        raise InvalidCountError(f"m={m} must lie in [1, min(n, d) = {min(X.shape)}]")
    root = np.sqrt(A.diagonal())
    U, s, _ = np.linalg.svd(X * root[:, None], full_matrices=False)
    stiffness = L if L is not None else SparseSymmetricOperator(A.matrix * 0.0, OperatorKind.STIFFNESS)
    logging.debug("[rpca] weighted PCA n=%d d=%d m=%d", n, X.shape[1], m)
    return _finish(U[:, :m], s[:m] ** 2, root, X, stiffness, A, 0.0)


def regularized_basis(
    X: np.ndarray,
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    mu: float,
    m: int,
    dense_threshold: int = DENSE_PENCIL_MAX,
) -> RegularizedBasis:
    """
    Top ``m`` eigenvectors of ``(A X X^T A - mu L) p = theta A p``, theta descending.

    The pencil may be indefinite; the ``m`` algebraically largest theta are kept
    regardless of sign. ``mu = 0`` reduces to :func:`weighted_pca`.
    """
    if mu < 0:
        raise NegativeMuError(f"mu must be non-negative, got {mu}")
    n = A.dimension
    if L.dimension != n:
        raise DimensionMismatchError(f"Stiffness is {L.dimension}x{L.dimension}, mass {n}x{n}")
    X = _data(X, n)
    if not 1 <= m <= n:
        raise InvalidCountError(f"m={m} must lie in [1, {n}]")
    if mu == 0.0 and m <= min(X.shape):
        return weighted_pca(X, A, m, L)

    root = np.sqrt(A.diagonal())
    Z = X * root[:, None]
    if n <= dense_threshold:
        reduced = (L.matrix.toarray() / root[:, None]) / root[None, :]
        M = Z @ Z.T - mu * reduced
        theta, U = dense_linalg.eigh(0.5 * (M + M.T), subset_by_index=(n - m, n - 1))
    else:
        inv_root = 1.0 / root
        Lmat = L.matrix

        def _matvec(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v).ravel()
            return Z @ (Z.T @ v) - mu * inv_root * (Lmat @ (inv_root * v))

        op = LinearOperator((n, n), matvec=_matvec, dtype=np.float64)
        try:
            theta, U = eigsh(op, k=m, which="LA", v0=np.random.default_rng(0).standard_normal(n))
        except (ArpackNoConvergence, ArpackError) as exc:
            raise ConvergenceFailure(f"Regularized PCA eigensolve failed: {exc}") from exc
    order = np.argsort(theta)[::-1]
    logging.debug("[rpca] regularized basis mu=%.6g m=%d", mu, m)
    return _finish(U[:, order], theta[order], root, X, L, A, mu)


def reconstruct(f: np.ndarray, basis: RegularizedBasis, A: SparseSymmetricOperator) -> np.ndarray:
    """``P P^T A f`` (per column for a matrix)."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != basis.P.shape[0] or A.dimension != basis.P.shape[0]:
        raise DimensionMismatchError(f"Field of shape {f.shape} does not match a basis on {basis.P.shape[0]} vertices")
    return basis.P @ (basis.P.T @ (A @ f))


def _norm1_data(X: np.ndarray, A: SparseSymmetricOperator) -> float:
    """Max absolute column sum of ``A X X^T A`` without materializing all of it."""
    AX = A @ X
    best = 0.0
    for start in range(0, AX.shape[0], NORM_CHUNK):
        block = AX @ AX[start : start + NORM_CHUNK].T
        best = max(best, float(np.abs(block).sum(axis=0).max()))
    return best


def _norm1_stiffness(L: SparseSymmetricOperator) -> float:
    return float(abs(L.matrix).sum(axis=0).max())


def calibrated_mu(X: np.ndarray, L: SparseSymmetricOperator, A: SparseSymmetricOperator, mu: float) -> float:
    """Resolution-comparable ``mu_hat = mu ||L||_1 / ||A X X^T A||_1``."""
    X = _data(X, A.dimension)
    return float(mu) * _norm1_stiffness(L) / max(_norm1_data(X, A), np.finfo(float).tiny)


def calibrate_mu(X: np.ndarray, L: SparseSymmetricOperator, A: SparseSymmetricOperator, mu_hat: float) -> float:
    """Raw ``mu`` for a calibrated ``mu_hat``."""
    X = _data(X, A.dimension)
    return float(mu_hat) * _norm1_data(X, A) / max(_norm1_stiffness(L), np.finfo(float).tiny)


def mu_sweep(
    X: np.ndarray,
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    mus: Sequence[float],
    m: int,
    threads: Optional[int] = None,
) -> List[RegularizedBasis]:
    """One regularized basis per ``mu``, in input order."""
    for mu in mus:
        if mu < 0:
            raise NegativeMuError(f"mu must be non-negative, got {mu}")
    tasks = [lambda mu=float(mu): regularized_basis(X, L, A, mu, m) for mu in mus]
    bases = gather_threads(tasks, threads)
    logging.info("[rpca] swept %d mu values (m=%d)", len(bases), m)
    return bases


def _relative_error(f: np.ndarray, recon: np.ndarray, A: SparseSymmetricOperator) -> float:
    num = float(np.sum(A.quadratic(f - recon)))
    den = float(np.sum(A.quadratic(f)))
    return float(np.sqrt(num / max(den, np.finfo(float).tiny)))


def compare_bases(
    X_train: np.ndarray,
    f_test: np.ndarray,
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    basis: SpectralBasis,
    m: int,
    mu: float,
) -> BasisComparison:
    """
    Reconstruct held-out data with PCA, the first ``m`` eigenfunctions and regularized PCA.

    PCA rank is capped by the number of training columns.
    """
    X_train = _data(X_train, A.dimension)
    f_test = _data(f_test, A.dimension)
    if m > basis.k:
        raise InvalidCountError(f"m={m} exceeds the {basis.k} available eigenfunctions")
    pca = weighted_pca(X_train, A, min(m, min(X_train.shape)), L)
    reg = regularized_basis(X_train, L, A, mu, m)
    phi = basis.eigenvectors[:, :m]
    lbo = phi @ (phi.T @ (A @ f_test))
    result = BasisComparison(
        m=m,
        mu=float(mu),
        pca_error=_relative_error(f_test, reconstruct(f_test, pca, A), A),
        lbo_error=_relative_error(f_test, lbo, A),
        regularized_error=_relative_error(f_test, reconstruct(f_test, reg, A), A),
    )
    logging.info(
        "[rpca] held-out errors pca=%.4g lbo=%.4g regularized=%.4g",
        result.pca_error,
        result.lbo_error,
        result.regularized_error,
    )
    return result
