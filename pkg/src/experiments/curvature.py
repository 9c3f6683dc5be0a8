import math
from typing import Any, Dict

import numpy as np
from pydantic import Field

from core.curvature import DEFAULT_EPSILON, gauss_bonnet_defect, gaussian_curvature, metric_weights, total_curvature
from core.matrix_io import write_csv

from ._shared import mesh_summary
from .base import Experiment, ExperimentParams, RunContext


class CurvatureParams(ExperimentParams):
    alpha: float = Field(default=1.0, ge=0.0, le=1.0)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)


class CurvatureExperiment(Experiment):
    """
    Angle-defect Gaussian curvature and metric weights per vertex.

    Writes ``curvature.csv`` (vertex_index, K, area, weight) and reports the
    Gauss-Bonnet check for closed meshes.
    """

    name = "curvature"
    params_model = CurvatureParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: CurvatureParams = self.params  # type: ignore[assignment]
        with ctx.timer.stage("curvature"):
            curv = gaussian_curvature(mesh)
            weights = metric_weights(curv, p.alpha, p.epsilon)
        table = np.column_stack([np.arange(mesh.n_vertices), curv.values, curv.vertex_areas, weights.weights])
        write_csv(table, ctx.artifact("curvature.csv"), header=["vertex_index", "K", "area", "weight"])
        total = total_curvature(curv)
        results: Dict[str, Any] = {
            **mesh_summary(mesh, dropped),
            "alpha": p.alpha,
            "euler_characteristic": mesh.euler_characteristic,
            "total_curvature": total,
            "expected_total": 2.0 * math.pi * mesh.euler_characteristic,
            "area_scale": weights.scale,
            "K_min": float(curv.values.min()),
            "K_max": float(curv.values.max()),
            "weight_min": float(weights.weights.min()),
            "weight_max": float(weights.weights.max()),
        }
        if mesh.is_closed:
            results["gauss_bonnet_defect"] = gauss_bonnet_defect(mesh, curv)
        return results
