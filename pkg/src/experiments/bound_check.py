from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import Field

from core.analysis import bound_check
from core.errors import DimensionMismatchError
from core.matrix_io import read_matrix, write_csv

from ._shared import OperatorParams, mesh_summary, solve_basis
from .base import Experiment, RunContext


class BoundCheckParams(OperatorParams):
    n: List[int] = Field(default_factory=lambda: [5, 20, 50], min_length=1)
    k: Optional[int] = Field(default=None, ge=2)
    fields: int = Field(default=100, ge=1)
    field: Optional[str] = None


class BoundCheckExperiment(Experiment):
    """
    Representation-error bound ``||f - P_n f||^2 <= f^T L f / lambda_{n+1}``.

    Checked for seeded random fields (or the columns of ``field``) at every truncation
    order in ``n``; ``ratios.csv`` holds one row per (field, n).
    """

    name = "bound-check"
    params_model = BoundCheckParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: BoundCheckParams = self.params  # type: ignore[assignment]
        orders = sorted(set(p.n))
        k = p.k if p.k is not None else max(orders) + 1
        basis = solve_basis(mesh, k, p, ctx)

        if p.field:
            F = read_matrix(p.field)
            if F.shape[0] != mesh.n_vertices and F.shape[1] == mesh.n_vertices:
                F = F.T
            if F.shape[0] != mesh.n_vertices:
                raise DimensionMismatchError(f"Field file {p.field} has shape {F.shape}, mesh {mesh.n_vertices} vertices")
        else:
            F = ctx.rng.standard_normal((mesh.n_vertices, p.fields))

        rows = []
        per_order: Dict[str, Dict[str, float]] = {}
        monotone = True
        with ctx.timer.stage("bound_check"):
            for j in range(F.shape[1]):
                previous = np.inf
                for n in orders:
                    rep = bound_check(F[:, j], basis, n)
                    rows.append([j, n, rep.residual_sq, rep.dirichlet, rep.lambda_next, rep.ratio])
                    monotone = monotone and rep.residual_sq <= previous * (1 + 1e-12) + 1e-300
                    previous = rep.residual_sq
        table = np.array(rows, dtype=np.float64)
        write_csv(
            table,
            ctx.artifact("ratios.csv"),
            header=["field", "n", "residual_sq", "dirichlet", "lambda_next", "ratio"],
        )
        for n in orders:
            sel = table[table[:, 1] == n, 5]
            per_order[str(n)] = {"min_ratio": float(sel.min()), "max_ratio": float(sel.max())}
        max_ratio = float(table[:, 5].max())
        return {
            **mesh_summary(mesh, dropped),
            "k": k,
            "fields": int(F.shape[1]),
            "orders": per_order,
            "ratio": max_ratio,
            "bound_holds": max_ratio <= 1.0 + 1e-9,
            "residual_monotone": monotone,
        }
