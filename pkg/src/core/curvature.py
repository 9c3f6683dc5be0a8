"""Angle-defect Gaussian curvature and the curvature-scaled metric weights."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.errors import InvalidAlphaError, InvalidEpsilonError
from core.mesh import Mesh

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-vertex Gaussian curvature ``values`` (1/length^2) and barycentric ``vertex_areas``."""

    values: np.ndarray
    vertex_areas: np.ndarray
    angle_defects: np.ndarray


@dataclass(frozen=True, eq=False)
class MetricWeights:
    """
    Conformal factors ``w_v = max(|K_v| s^2, epsilon) ** alpha`` of the interpolated metric.

    ``scale`` is the nondimensionalization area ``s^2 = total_area / (4 pi)``.
    """

    alpha: float
    epsilon: float
    scale: float
    weights: np.ndarray

    @classmethod
    def regular(cls, n: int) -> "MetricWeights":
        return cls(alpha=0.0, epsilon=DEFAULT_EPSILON, scale=1.0, weights=np.ones(n))

    @property
    def conformal(self) -> np.ndarray:
        """Dimensional factor ``w_v / s^(2 alpha)``, i.e. ``max(|K_v|, epsilon / s^2) ** alpha``."""
        return self.weights / self.scale**self.alpha


def corner_angles(mesh: Mesh) -> np.ndarray:
    """Interior angles of every face, shape ``(n_faces, 3)``, column ``c`` at corner ``c``."""
    v = mesh.vertices[mesh.faces]
    angles = np.empty((mesh.n_faces, 3))
    for c in range(3):
        e1 = v[:, (c + 1) % 3] - v[:, c]
        e2 = v[:, (c + 2) % 3] - v[:, c]
        cross = np.linalg.norm(np.cross(e1, e2), axis=1)
        angles[:, c] = np.arctan2(cross, np.einsum("ij,ij->i", e1, e2))
    return angles


def gaussian_curvature(mesh: Mesh) -> CurvatureField:
    """
    Angle defect over barycentric area.

    Interior vertices use ``2 pi - sum(angles)``, boundary vertices ``pi - sum(angles)``.
    """
    angle_sum = np.bincount(mesh.faces.reshape(-1), weights=corner_angles(mesh).reshape(-1), minlength=mesh.n_vertices)
    full = np.where(mesh.boundary_flags, math.pi, 2.0 * math.pi)
    defects = full - angle_sum
    areas = np.array(mesh.vertex_areas)
    values = defects / areas
    logging.debug(
        "[curvature] total angle defect %.12g (2*pi*chi=%.12g)",
        float(defects.sum()),
        2.0 * math.pi * mesh.euler_characteristic,
    )
    return CurvatureField(values=values, vertex_areas=areas, angle_defects=defects)


def total_curvature(curv: CurvatureField) -> float:
    """Sum of ``K_v * area_v`` over all vertices."""
    return float(np.sum(curv.values * curv.vertex_areas))


def gauss_bonnet_defect(mesh: Mesh, curv: CurvatureField) -> float:
    """Relative deviation of the total curvature from ``2 pi chi``."""
    target = 2.0 * math.pi * mesh.euler_characteristic
    total = total_curvature(curv)
    return abs(total - target) / max(abs(target), 1.0)


def metric_weights(curv: CurvatureField, alpha: float, epsilon: float = DEFAULT_EPSILON) -> MetricWeights:
    """Weights of ``|K|^alpha g`` after nondimensionalizing ``|K|`` by ``s^2``."""
    if not 0.0 <= alpha <= 1.0 or math.isnan(alpha):
        raise InvalidAlphaError(f"alpha must lie in [0, 1], got {alpha}")
    if not epsilon > 0.0:
        raise InvalidEpsilonError(f"epsilon must be positive, got {epsilon}")
    scale = float(curv.vertex_areas.sum()) / (4.0 * math.pi)
    base = np.maximum(np.abs(curv.values) * scale, epsilon)
    weights = np.power(base, alpha)
    floored = int(np.count_nonzero(np.abs(curv.values) * scale < epsilon))
    if floored and alpha > 0:
        logging.debug("[curvature] %d vertex(es) hit the epsilon floor", floored)
    return MetricWeights(alpha=float(alpha), epsilon=float(epsilon), scale=scale, weights=weights)
