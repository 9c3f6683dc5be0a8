from typing import Any, Dict

import numpy as np

from .base import Experiment, ExperimentParams, RunContext


class InfoExperiment(Experiment):
    """Mesh statistics: counts, Euler characteristic, boundary and area."""

    name = "info"
    params_model = ExperimentParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        with ctx.timer.stage("summary"):
            lo = np.asarray(mesh.vertices).min(axis=0)
            hi = np.asarray(mesh.vertices).max(axis=0)
            return {
                "n_vertices": mesh.n_vertices,
                "n_faces": mesh.n_faces,
                "n_edges": mesh.n_edges,
                "dropped_faces": dropped,
                "euler_characteristic": mesh.euler_characteristic,
                "is_closed": mesh.is_closed,
                "boundary_vertices": int(np.count_nonzero(mesh.boundary_flags)),
                "total_area": mesh.total_area,
                "bbox_min": [float(x) for x in lo],
                "bbox_max": [float(x) for x in hi],
            }
