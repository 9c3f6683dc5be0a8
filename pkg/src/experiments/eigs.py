from typing import Any, Dict, Literal

import numpy as np
from pydantic import Field

from core.matrix_io import write_csv, write_spmx

from ._shared import OperatorParams, mesh_summary, solve_basis
from .base import Experiment, RunContext


class EigsParams(OperatorParams):
    k: int = Field(default=10, ge=1)
    format: Literal["spmx", "csv"] = "spmx"


class EigsExperiment(Experiment):
    """
    The k smallest Laplace-Beltrami eigenpairs.

    Writes ``eigenvalues.csv`` and ``eigenvectors.spmx`` (or ``.csv``), one row per
    vertex and one column per mode.
    """

    name = "eigs"
    params_model = EigsParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: EigsParams = self.params  # type: ignore[assignment]
        basis = solve_basis(mesh, p.k, p, ctx)
        table = np.column_stack([np.arange(basis.k), basis.eigenvalues, basis.residuals])
        write_csv(table, ctx.artifact("eigenvalues.csv"), header=["index", "eigenvalue", "residual"])
        if p.format == "spmx":
            write_spmx(basis.eigenvectors, ctx.artifact("eigenvectors.spmx"))
        else:
            write_csv(
                basis.eigenvectors,
                ctx.artifact("eigenvectors.csv"),
                header=[f"phi_{i + 1}" for i in range(basis.k)],
            )
        return {
            **mesh_summary(mesh, dropped),
            "k": basis.k,
            "alpha": p.alpha,
            "eigenvalues": [float(x) for x in basis.eigenvalues],
            "max_residual": float(basis.residuals.max()),
        }
