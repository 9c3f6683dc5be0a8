import math
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import Field, field_validator

from core.curvature import DEFAULT_EPSILON
from core.errors import InvalidCountError, NegativeMuError
from core.laplacian import smallest_eigenpairs
from core.matrix_io import write_csv, write_spmx
from core.mesh import save_mesh, with_vertices
from core.rpca import calibrate_mu, calibrated_mu, compare_bases, mu_sweep, reconstruct

from ._shared import assemble_operators, load_columns, mesh_summary
from .base import Experiment, ExperimentParams, RunContext


def parse_mu_spec(spec: str) -> List[float]:
    """
    ``"0.5"`` -> one value; ``"1e-3:1e3:20"`` -> 20 log-spaced values; ``"0,1,10"`` -> a list.
    """
    text = str(spec).strip()
    try:
        if ":" in text:
            lo, hi, steps = text.split(":")
            bounds, count = (float(lo), float(hi)), int(steps)
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise InvalidCountError(f"Invalid mu spec '{spec}': {e}") from e
    if ":" in text:
        if min(bounds) <= 0:
            raise NegativeMuError(f"Logarithmic sweep bounds must be positive: {spec}")
        if count < 1:
            raise InvalidCountError(f"Sweep needs at least one step: {spec}")
        values = [float(x) for x in np.logspace(math.log10(bounds[0]), math.log10(bounds[1]), count)]
    if not values:
        raise InvalidCountError(f"Empty mu spec '{spec}'")
    if any(v < 0 for v in values):
        raise NegativeMuError(f"mu must be non-negative: {spec}")
    return values


class RpcaParams(ExperimentParams):
    data: List[str] = Field(default_factory=list)
    test: Optional[str] = None
    mu: str = "0"
    calibrated: bool = False
    m: int = Field(default=3, ge=1)
    alpha: float = Field(default=0.0, ge=0.0, le=1.0)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)

    @field_validator("mu", mode="before")
    @classmethod
    def _mu_as_text(cls, value: Any) -> str:
        return str(value)


class RpcaExperiment(Experiment):
    """
    Regularized PCA over a mu sweep.

    Training columns come from ``data`` (matrices or meshes; defaults to the mesh's
    own coordinates). Per mu: ``basis_XX.spmx`` and ``reconstruction_XX.off`` (the mesh
    coordinates projected on the basis); ``objective_terms.csv`` collects the terms.
    With ``calibrated`` the mu values are read as resolution-independent mu-hat.
    """

    name = "rpca"
    params_model = RpcaParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: RpcaParams = self.params  # type: ignore[assignment]
        mus_in = parse_mu_spec(p.mu)
        coords = np.array(mesh.vertices)
        X = load_columns(p.data, mesh.n_vertices) if p.data else coords
        L, A = assemble_operators(mesh, p.alpha, p.epsilon, ctx)

        with ctx.timer.stage("calibration"):
            if p.calibrated:
                mus = [calibrate_mu(X, L, A, v) for v in mus_in]
                hats = list(mus_in)
            else:
                mus = list(mus_in)
                hats = [calibrated_mu(X, L, A, v) for v in mus]
        with ctx.timer.stage("sweep"):
            bases = mu_sweep(X, L, A, mus, p.m, threads=ctx.threads)

        rows = []
        for i, basis in enumerate(bases):
            write_spmx(basis.P, ctx.artifact(f"basis_{i:02d}.spmx"))
            save_mesh(with_vertices(mesh, reconstruct(coords, basis, A)), ctx.artifact(f"reconstruction_{i:02d}.off"))
            rows.append([basis.mu, hats[i], basis.projection_error, basis.dirichlet_energy, basis.objective])
        table = np.array(rows, dtype=np.float64)
        ordered = table[np.argsort(table[:, 0], kind="stable")]
        write_csv(
            table,
            ctx.artifact("objective_terms.csv"),
            header=["mu", "mu_hat", "projection_error", "dirichlet_energy", "objective"],
        )

        results: Dict[str, Any] = {
            **mesh_summary(mesh, dropped),
            "m": p.m,
            "d": int(X.shape[1]),
            "mu": [float(x) for x in table[:, 0]],
            "mu_hat": [float(x) for x in table[:, 1]],
            "projection_error": [float(x) for x in table[:, 2]],
            "dirichlet_energy": [float(x) for x in table[:, 3]],
            "dirichlet_nonincreasing": bool(np.all(np.diff(ordered[:, 3]) <= 1e-9 * max(1.0, ordered[:, 3].max()))),
            "projection_nondecreasing": bool(np.all(np.diff(ordered[:, 2]) >= -1e-9 * max(1.0, ordered[:, 2].max()))),
        }
        if p.test:
            f_test = load_columns([p.test], mesh.n_vertices)
            with ctx.timer.stage("compare"):
                lbo = smallest_eigenpairs(L, A, min(p.m, mesh.n_vertices))
                results["comparison"] = [
                    compare_bases(X, f_test, L, A, lbo, p.m, mu).model_dump() for mu in mus
                ]
        return results
