from typing import Any, Dict, Literal, Optional

from pydantic import Field

from core.errors import TooLargeError
from core.geodesics import distance_rows
from core.matrix_io import write_csv
from core.mesh import SampleSet, farthest_point_sample, save_mesh, with_vertices
from core.smds import DENSE_MDS_MAX, classical_mds, embedding_stress, fit_coefficients, spectral_mds

from ._shared import OperatorParams, mesh_summary, solve_basis
from .base import Experiment, RunContext


class CanonicalParams(OperatorParams):
    samples: int = Field(default=50, ge=1)
    k: int = Field(default=100, ge=1)
    m: int = Field(default=3, ge=1)
    eta: Optional[float] = Field(default=None, ge=0.0)
    method: Literal["classical", "spectral"] = "spectral"
    weighting: Literal["euclidean", "mass"] = "euclidean"
    refine: bool = False
    start: int = Field(default=0, ge=0)


class CanonicalExperiment(Experiment):
    """
    Flat canonical form by classical or spectral scaling of geodesic distances.

    Both methods report stress against the same farthest-point sample rows; the
    embedding is written as ``embedding.off`` (original connectivity) and
    ``embedding.csv``.
    """

    name = "canonical"
    params_model = CanonicalParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: CanonicalParams = self.params  # type: ignore[assignment]
        n = mesh.n_vertices
        with ctx.timer.stage("sampling"):
            samples = farthest_point_sample(mesh, min(p.samples, n), seed=p.start)
            rows = samples.as_array()

        results: Dict[str, Any] = {**mesh_summary(mesh, dropped), "method": p.method, "p": samples.size, "m": p.m}
        if p.method == "classical":
            if n > DENSE_MDS_MAX:
                raise TooLargeError(f"Dense classical scaling is capped at {DENSE_MDS_MAX} points, got {n}")
            with ctx.timer.stage("distances"):
                full = distance_rows(mesh, SampleSet.explicit(mesh, range(n)), refine=p.refine, threads=ctx.threads)
            with ctx.timer.stage("embedding"):
                emb = classical_mds(full.fields, p.m)
            results["stress"] = embedding_stress(emb.X, full.fields[rows], rows)
            results["stress_full"] = emb.stress
            results["k"] = None
        else:
            with ctx.timer.stage("distances"):
                fields = distance_rows(mesh, samples, refine=p.refine, threads=ctx.threads)
            basis = solve_basis(mesh, min(p.k, n), p, ctx)
            with ctx.timer.stage("embedding"):
                coeffs = fit_coefficients(fields, basis, eta=p.eta)
                emb = spectral_mds(
                    coeffs, basis, min(p.m, basis.k), weighting=p.weighting, reference=fields.fields, reference_rows=rows
                )
            results.update(
                {
                    "stress": emb.stress,
                    "k": basis.k,
                    "eta": coeffs.eta,
                    "cg_iterations": coeffs.iterations,
                    "weighting": p.weighting,
                    "degenerate": emb.degenerate,
                }
            )
        results["elapsed"] = emb.elapsed if ctx.timer.enabled else None
        results["embedding_eigenvalues"] = [float(x) for x in emb.eigenvalues]

        save_mesh(with_vertices(mesh, emb.X), ctx.artifact("embedding.off"))
        write_csv(emb.X, ctx.artifact("embedding.csv"), header=[f"x{j + 1}" for j in range(emb.X.shape[1])])
        return results
