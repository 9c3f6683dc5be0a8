from typing import Any, Dict, List

import numpy as np
from pydantic import Field, field_validator

from core.analysis import project_coordinates
from core.matrix_io import write_csv
from core.mesh import save_mesh, with_vertices

from ._shared import OperatorParams, mesh_summary, solve_basis
from .base import Experiment, RunContext


class ProjectParams(OperatorParams):
    k: int = Field(default=100, ge=1)
    n: List[int] = Field(default_factory=lambda: [5, 20, 50], min_length=1)
    alphas: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0], min_length=1)

    @field_validator("alphas")
    @classmethod
    def _alphas_in_range(cls, values: List[float]) -> List[float]:
        for a in values:
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha must lie in [0, 1], got {a}")
        return values


class ProjectExperiment(Experiment):
    """Reconstruct the mesh from its first n eigenfunctions under several metrics."""

    name = "project"
    params_model = ProjectParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: ProjectParams = self.params  # type: ignore[assignment]
        k = min(p.k, mesh.n_vertices)
        orders = sorted({n for n in p.n if 1 <= n <= k})
        rows = []
        errors: Dict[str, Dict[str, float]] = {}
        for alpha in p.alphas:
            basis = solve_basis(mesh, k, p.model_copy(update={"alpha": alpha}), ctx)
            errors[repr(alpha)] = {}
            with ctx.timer.stage(f"project_alpha_{alpha!r}"):
                for n in orders:
                    proj = project_coordinates(mesh, basis, n)
                    save_mesh(with_vertices(mesh, proj.vertices), ctx.artifact(f"reconstruction_a{alpha!r}_n{n}.off"))
                    rows.append([alpha, n, proj.relative_error])
                    errors[repr(alpha)][str(n)] = proj.relative_error
        write_csv(np.array(rows, dtype=np.float64), ctx.artifact("errors.csv"), header=["alpha", "n", "relative_error"])
        return {**mesh_summary(mesh, dropped), "k": k, "orders": orders, "relative_error": errors}
