"""
Truncated eigenbasis projection, the representation-error bound and the optimality audit.

All inner products are the discrete ``<f, g> = f^T A g``; the Dirichlet energy of a
field is ``f^T L f``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel
from scipy import linalg as dense_linalg

from core.errors import (
    ConstantFunctionError,
    DimensionMismatchError,
    InvalidCountError,
    RankDeficientRivalError,
    TooLargeError,
)
from core.laplacian import SparseSymmetricOperator, SpectralBasis
from core.mesh import Mesh
from core.parallel import gather_threads

CONSTANT_RTOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """``beta_i = phi_i^T A f``."""

    values: np.ndarray


class Projection(NamedTuple):
    coefficients: SpectralCoefficients
    reconstruction: np.ndarray
    residual: np.ndarray


class BoundReport(BaseModel):
    """One evaluation of ``||r_n||^2 <= f^T L f / lambda_{n+1}``."""

    n: int
    residual_sq: float
    dirichlet: float
    lambda_next: float
    ratio: float


class AuditResult(BaseModel):
    n: int
    worst_ratio: float
    rival_rank: int


class AuditTrials(BaseModel):
    n: int
    trials: int
    worst_ratios: List[float]
    min_ratio: float
    mean_ratio: float
    max_ratio: float
    unbounded: int = 0


def _as_field(f: np.ndarray, n_vertices: int) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != n_vertices:
        raise DimensionMismatchError(f"Field of shape {f.shape} does not match {n_vertices} vertices")
    return f


def project(f: np.ndarray, basis: SpectralBasis, n: int) -> Projection:
    """Project ``f`` onto the first ``n`` eigenfunctions."""
    f = _as_field(f, basis.n)
    if not 0 <= n <= basis.k:
        raise InvalidCountError(f"Truncation order n={n} must lie in [0, {basis.k}]")
    phi = basis.eigenvectors[:, :n]
    beta = phi.T @ (basis.mass @ f)
    recon = phi @ beta
    return Projection(SpectralCoefficients(beta), recon, f - recon)


def bound_check(f: np.ndarray, basis: SpectralBasis, n: int) -> BoundReport:
    """
    Evaluate the truncation residual against the Dirichlet energy bound.

    Raises ConstantFunctionError when ``f^T L f < 1e-12 f^T A f``.
    """
    if not 0 <= n < basis.k:
        raise InvalidCountError(f"bound_check needs n + 1 <= k (n={n}, k={basis.k})")
    proj = project(f, basis, n)
    f = _as_field(f, basis.n)
    energy = float(basis.mass.quadratic(f))
    dirichlet = float(basis.stiffness.quadratic(f))
    if dirichlet < CONSTANT_RTOL * energy or energy == 0.0:
        raise ConstantFunctionError("Field has zero Dirichlet energy; the bound is trivial")
    residual_sq = float(basis.mass.quadratic(proj.residual))
    lam = float(basis.eigenvalues[n])
    return BoundReport(
        n=n,
        residual_sq=residual_sq,
        dirichlet=dirichlet,
        lambda_next=lam,
        ratio=residual_sq * lam / dirichlet,
    )


def a_orthonormalize(fields: np.ndarray, mass: SparseSymmetricOperator, tol: float = RANK_TOL) -> np.ndarray:
    """Gram-Schmidt in the A-inner product (through a QR of ``A^{1/2} F``)."""
    fields = np.atleast_2d(np.asarray(fields, dtype=np.float64))
    if fields.shape[0] != mass.dimension:
        fields = fields.T
    if fields.shape[0] != mass.dimension:
        raise DimensionMismatchError(f"Fields of shape {fields.shape} do not match {mass.dimension} vertices")
    root = np.sqrt(mass.diagonal())
    q, r = np.linalg.qr(fields * root[:, None])
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= tol * max(diag.max(), np.finfo(float).tiny):
        raise RankDeficientRivalError(
            f"Rival fields are (numerically) dependent: min/max pivot {diag.min() if diag.size else 0.0:.3e}"
        )
    return q / root[:, None]


def optimality_audit(basis: SpectralBasis, rival: np.ndarray) -> AuditResult:
    """
    Worst representation ratio a rival n-frame achieves on ``span{phi_1..phi_{n+1}}``.

    The supremum of ``||f - Pi f||^2 lambda_{n+1} / f^T L f`` over that span is the top
    eigenvalue of a small pencil built from the restricted residual Gram matrix and
    ``diag(lambda_1..lambda_{n+1})``. A value below one would mean the rival beats the
    eigenbasis. Raises ConstantFunctionError when a zero-energy mode escapes the rival
    span (the ratio is unbounded).
    """
    psi = a_orthonormalize(rival, basis.mass)
    n = psi.shape[1]
    if n + 1 > basis.k:
        raise InvalidCountError(f"Audit of a {n}-frame needs k >= {n + 1}, basis has {basis.k}")
    phi = basis.eigenvectors[:, : n + 1]
    lam = basis.eigenvalues[: n + 1]
    cross = psi.T @ (basis.mass @ phi)
    residual_gram = np.eye(n + 1) - cross.T @ cross
    residual_gram = 0.5 * (residual_gram + residual_gram.T)

    null = lam < CONSTANT_RTOL * max(float(lam[-1]), np.finfo(float).tiny)
    if np.any(null):
        escaped = np.diag(residual_gram)[null]
        if np.any(escaped > 1e-9):
            raise ConstantFunctionError(
                "A zero-energy mode lies outside the rival span; the worst ratio is unbounded"
            )
    keep = ~null
    top = dense_linalg.eigh(
        residual_gram[np.ix_(keep, keep)], np.diag(lam[keep]), eigvals_only=True
    )[-1]
    worst = float(top * lam[-1])
    logging.debug("[analysis] audit n=%d worst_ratio=%.12g", n, worst)
    return AuditResult(n=n, worst_ratio=worst, rival_rank=n)


def random_rival_audit(
    basis: SpectralBasis,
    n: int,
    trials: int,
    rng: np.random.Generator,
    include_constant: bool = True,
    threads: Optional[int] = None,
) -> AuditTrials:
    """
    Audit ``trials`` random Gaussian rival n-frames.

    With ``include_constant`` the first rival field is the constant function, so the
    zero-energy mode is represented and every ratio is finite; otherwise frames that
    miss it count as unbounded (``inf``). Rivals are drawn up front so results do not
    depend on ``threads``.
    """
    if trials < 1:
        raise InvalidCountError(f"trials must be >= 1, got {trials}")
    if n < 1:
        raise InvalidCountError(f"Rival frames need n >= 1, got {n}")
    rivals = [rng.standard_normal((basis.n, n)) for _ in range(trials)]
    if include_constant:
        for rival in rivals:
            rival[:, 0] = 1.0

    def _trial(rival: np.ndarray) -> float:
        try:
            return optimality_audit(basis, rival).worst_ratio
        except ConstantFunctionError:
            return float("inf")

    ratios: List[float] = gather_threads([lambda r=r: _trial(r) for r in rivals], threads)
    arr = np.array(ratios)
    return AuditTrials(
        n=n,
        trials=trials,
        worst_ratios=ratios,
        min_ratio=float(arr.min()),
        mean_ratio=float(arr.mean()),
        max_ratio=float(arr.max()),
        unbounded=int(np.count_nonzero(np.isinf(arr))),
    )


def courant_fischer_check(
    L: SparseSymmetricOperator,
    A: SparseSymmetricOperator,
    fields: np.ndarray,
    max_vertices: int = 2000,
) -> float:
    """
    Minimum Rayleigh quotient ``f^T L f / f^T A f`` over the A-orthogonal complement of ``fields``.

    By the min-max principle this never exceeds ``lambda_{n+1}`` for ``n`` fields.
    """
    nv = L.dimension
    if nv > max_vertices:
        raise TooLargeError(f"Dense Courant-Fischer check limited to {max_vertices} vertices, got {nv}")
    psi = a_orthonormalize(fields, A)
    root = np.sqrt(A.diagonal())
    q, _ = np.linalg.qr(psi * root[:, None], mode="complete")
    complement = q[:, psi.shape[1] :]
    reduced = (L.matrix.toarray() / root[:, None]) / root[None, :]
    restricted = complement.T @ reduced @ complement
    return float(dense_linalg.eigh(0.5 * (restricted + restricted.T), eigvals_only=True, subset_by_index=(0, 0))[0])


def principal_angles(P: np.ndarray, Q: np.ndarray, mass: Optional[SparseSymmetricOperator] = None) -> np.ndarray:
    """Canonical angles between ``span(P)`` and ``span(Q)``, in the A-inner product when given."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if P.shape[0] != Q.shape[0]:
        raise DimensionMismatchError(f"Frames of {P.shape[0]} and {Q.shape[0]} rows")
    if mass is not None:
        root = np.sqrt(mass.diagonal())[:, None]
        P, Q = P * root, Q * root
    return dense_linalg.subspace_angles(P, Q)


def dirichlet_energy(frame: np.ndarray, L: SparseSymmetricOperator) -> float:
    """``sum_j P_j^T L P_j``."""
    frame = np.asarray(frame, dtype=np.float64).reshape(L.dimension, -1)
    return float(np.sum(L.quadratic(frame)))


class CoordinateProjection(NamedTuple):
    vertices: np.ndarray
    relative_error: float


def project_coordinates(mesh: Mesh, basis: SpectralBasis, n: int) -> CoordinateProjection:
    """
    Project the x, y, z coordinate functions on the first ``n`` eigenfunctions.

    The error is ``sqrt(sum_c ||r_c||_A^2 / sum_c ||x_c - mean||_A^2)`` using the
    basis' own mass matrix.
    """
    if mesh.n_vertices != basis.n:
        raise DimensionMismatchError(f"Mesh has {mesh.n_vertices} vertices, basis {basis.n}")
    if not 1 <= n <= basis.k:
        raise InvalidCountError(f"n={n} must lie in [1, {basis.k}]")
    coords = np.array(mesh.vertices)
    phi = basis.eigenvectors[:, :n]
    recon = phi @ (phi.T @ (basis.mass @ coords))
    resid = float(np.sum(basis.mass.quadratic(coords - recon)))
    area = float(basis.mass.diagonal().sum())
    centred = coords - (basis.mass.diagonal() @ coords) / area
    spread = float(np.sum(basis.mass.quadratic(centred)))
    return CoordinateProjection(recon, float(np.sqrt(resid / max(spread, np.finfo(float).tiny))))
