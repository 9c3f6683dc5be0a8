from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import Field

from core.geodesics import covering_radius, distance_rows, sample_block
from core.matrix_io import write_csv, write_spmx
from core.mesh import SampleSet, farthest_point_sample

from ._shared import mesh_summary
from .base import Experiment, ExperimentParams, RunContext


class GeodesicParams(ExperimentParams):
    samples: int = Field(default=50, ge=1)
    sources: Optional[List[int]] = None
    start: int = Field(default=0, ge=0)
    refine: bool = False
    format: Literal["csv", "spmx"] = "csv"


class GeodesicExperiment(Experiment):
    """
    Geodesic distance rows from farthest-point samples (or explicit ``sources``).

    Writes the ``p x n`` matrix as ``distances.csv`` or ``distances.spmx`` and the
    sample indices as ``samples.csv``.
    """

    name = "geodesic"
    params_model = GeodesicParams

    def run(self, ctx: RunContext) -> Dict[str, Any]:
        mesh, dropped = ctx.load_mesh()
        p: GeodesicParams = self.params  # type: ignore[assignment]
        with ctx.timer.stage("sampling"):
            if p.sources:
                samples = SampleSet.explicit(mesh, p.sources)
            else:
                samples = farthest_point_sample(mesh, p.samples, seed=p.start)
        with ctx.timer.stage("distances"):
            fields = distance_rows(mesh, samples, refine=p.refine, threads=ctx.threads)
        if p.format == "spmx":
            write_spmx(fields.fields, ctx.artifact("distances.spmx"))
        else:
            write_csv(fields.fields, ctx.artifact("distances.csv"), header=[f"v{j}" for j in range(fields.n)])
        write_csv(samples.as_array(), ctx.artifact("samples.csv"), header=["vertex_index"])
        block = sample_block(fields)
        return {
            **mesh_summary(mesh, dropped),
            "p": fields.p,
            "method": samples.method.value,
            "refine": p.refine,
            "samples": list(samples.indices),
            "max_distance": float(fields.fields.max()),
            "covering_radius": covering_radius(fields),
            "block_asymmetry": float(np.abs(block - block.T).max()),
        }
