"""Geodesic distance fields: Dijkstra on the edge graph, optional one-ring unfolding."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import dijkstra

from core.errors import DisconnectedMeshError, InvalidVertexError
from core.mesh import Mesh, SampleSet
from core.parallel import gather_threads

REFINE_SWEEPS = 8
ROWS_PER_TASK = 16


@dataclass(frozen=True, eq=False)
class DistanceFieldSet:
    """Distances from each sample (row) to every vertex (column)."""

    sources: SampleSet
    fields: np.ndarray

    @property
    def p(self) -> int:
        return int(self.fields.shape[0])

    @property
    def n(self) -> int:
        return int(self.fields.shape[1])


def _check_reachable(dist: np.ndarray, sources: np.ndarray) -> None:
    if not np.all(np.isfinite(dist)):
        row, col = np.argwhere(~np.isfinite(np.atleast_2d(dist)))[0]
        raise DisconnectedMeshError(
            f"Vertex {int(col)} is unreachable from source {int(np.atleast_1d(sources)[row])}"
        )


def _graph_distances(mesh: Mesh, sources: np.ndarray) -> np.ndarray:
    dist = dijkstra(mesh.edge_graph, directed=False, indices=sources)
    _check_reachable(dist, sources)
    return np.atleast_2d(dist)


def refine_distances(mesh: Mesh, dist: np.ndarray, sweeps: int = REFINE_SWEEPS) -> np.ndarray:
    """
    Lower distances through planar unfolding of each triangle.

    For a face ``(i, j, k)`` the source is placed in the plane of the face so that it is
    ``d_i`` from ``i`` and ``d_j`` from ``j`` on the far side of edge ``ij``; when the
    straight segment to ``k`` crosses that edge its length is a candidate for ``d_k``.
    Every update takes the minimum with the current value.
    """
    out = np.array(dist, dtype=np.float64)
    v = mesh.vertices
    f = mesh.faces
    for sweep in range(sweeps):
        before = out.copy()
        for c in range(3):
            i, j, k = f[:, (c + 1) % 3], f[:, (c + 2) % 3], f[:, c]
            lc = np.linalg.norm(v[j] - v[i], axis=1)
            lb = np.linalg.norm(v[k] - v[i], axis=1)
            la = np.linalg.norm(v[k] - v[j], axis=1)
            xk = (lb**2 + lc**2 - la**2) / (2.0 * lc)
            yk = np.sqrt(np.maximum(lb**2 - xk**2, 0.0))
            di, dj = out[..., i], out[..., j]
            xs = (di**2 + lc**2 - dj**2) / (2.0 * lc)
            ys2 = di**2 - xs**2
            ys = -np.sqrt(np.maximum(ys2, 0.0))
            t = -ys / np.maximum(yk - ys, np.finfo(float).tiny)
            xcross = xs + t * (xk - xs)
            ok = (ys2 > 0.0) & (xcross >= 0.0) & (xcross <= lc)
            cand = np.where(ok, np.hypot(xk - xs, yk - ys), np.inf)
            if out.ndim == 1:
                np.minimum.at(out, k, cand)
            else:
                for r in range(out.shape[0]):
                    np.minimum.at(out[r], k, cand[r])
        if np.array_equal(before, out):
            logging.debug("[geodesics] refinement settled after %d sweep(s)", sweep + 1)
            break
    return out


def distance_field(mesh: Mesh, source: int, refine: bool = False) -> np.ndarray:
    """Shortest-path distances from ``source`` to every vertex."""
    if not 0 <= int(source) < mesh.n_vertices:
        raise InvalidVertexError(f"Source vertex {source} out of range")
    dist = _graph_distances(mesh, np.array([int(source)]))[0]
    if refine:
        dist = refine_distances(mesh, dist)
        dist[int(source)] = 0.0
    return dist


def distance_rows(
    mesh: Mesh,
    samples: SampleSet,
    refine: bool = False,
    threads: Optional[int] = None,
) -> DistanceFieldSet:
    """One distance field per sample, computed in chunks across threads."""
    idx = samples.as_array()
    chunks = [idx[s : s + ROWS_PER_TASK] for s in range(0, idx.size, ROWS_PER_TASK)]

    def _task(chunk: np.ndarray):
        def _run() -> np.ndarray:
            block = _graph_distances(mesh, chunk)
            if refine:
                block = refine_distances(mesh, block)
                block[np.arange(chunk.size), chunk] = 0.0
            return block

        return _run

    blocks = gather_threads([_task(c) for c in chunks], threads)
    fields = np.vstack(blocks)
    logging.info("[geodesics] computed %d distance rows over %d vertices", fields.shape[0], fields.shape[1])
    return DistanceFieldSet(sources=samples, fields=fields)


def sample_block(fields: DistanceFieldSet) -> np.ndarray:
    """The ``p x p`` sample-to-sample distance block."""
    return fields.fields[:, fields.sources.as_array()]


def covering_radius(fields: DistanceFieldSet) -> float:
    """Largest distance from any vertex to its nearest sample."""
    return float(fields.fields.min(axis=0).max())
