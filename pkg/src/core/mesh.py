"""Triangle mesh container, OFF/OBJ readers and writers, farthest point sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from core.errors import (
    EmptyMeshError,
    InvalidCountError,
    InvalidVertexError,
    NonManifoldError,
    ParseError,
)

# Faces whose area falls below this fraction of their squared longest edge are slivers.
DEGENERATE_AREA_RTOL = 1e-12

DistanceOracle = Callable[["Mesh", int], np.ndarray]


class MeshFormat(str, Enum):
    OFF = "off"
    OBJ = "obj"

    @classmethod
    def from_path(cls, path: Path) -> "MeshFormat":
        """Infer the format from the file suffix."""
        suffix = path.suffix.lower().lstrip(".")
        try:
            return cls(suffix)
        except ValueError as e:
            raise ParseError(f"Unsupported mesh format '{path.suffix}' for {path}") from e


class SampleMethod(str, Enum):
    FARTHEST_POINT = "farthest_point"
    EXPLICIT = "explicit"


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Indexed, edge-manifold triangle mesh.

    Instances are immutable (arrays are flagged read-only) and are safe to share
    between threads. Build them through :meth:`from_arrays` or :func:`load_mesh`,
    which enforce the invariants: in-range indices, no degenerate faces, every edge
    bordering one or two faces, and no isolated vertices.
    """

    vertices: np.ndarray
    faces: np.ndarray
    boundary_flags: np.ndarray

    @classmethod
    def from_arrays(
        cls,
        vertices: Union[np.ndarray, Sequence[Sequence[float]]],
        faces: Union[np.ndarray, Sequence[Sequence[int]]],
    ) -> Tuple["Mesh", int]:
        """
        Validate raw arrays and build a mesh.

        Returns the mesh and the number of degenerate faces that were dropped.
        """
        v = np.array(vertices, dtype=np.float64).reshape(-1, 3) if len(vertices) else np.zeros((0, 3))
        f = np.array(faces, dtype=np.int64).reshape(-1, 3) if len(faces) else np.zeros((0, 3), np.int64)
        if v.shape[0] == 0:
            raise EmptyMeshError("Mesh has no vertices")
        if not np.all(np.isfinite(v)):
            raise ParseError("Vertex coordinates must be finite")
        if f.size and (f.min() < 0 or f.max() >= v.shape[0]):
            bad = int(f.max()) if f.max() >= v.shape[0] else int(f.min())
            raise ParseError(f"Face index {bad} out of range for {v.shape[0]} vertices")

        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        keep = ~repeated
        if np.any(keep):
            areas = _face_areas(v, f)
            e = np.stack(
                [
                    np.sum((v[f[:, 1]] - v[f[:, 0]]) ** 2, axis=1),
                    np.sum((v[f[:, 2]] - v[f[:, 1]]) ** 2, axis=1),
                    np.sum((v[f[:, 0]] - v[f[:, 2]]) ** 2, axis=1),
                ],
                axis=1,
            ).max(axis=1)
            keep &= areas > DEGENERATE_AREA_RTOL * e
        dropped = int(f.shape[0] - np.count_nonzero(keep))
        f = f[keep]
        if dropped:
            logging.warning("[mesh] dropped %d degenerate face(s)", dropped)
        if f.shape[0] == 0:
            raise EmptyMeshError("Mesh has no non-degenerate faces")

        used = np.zeros(v.shape[0], dtype=bool)
        used[f.reshape(-1)] = True
        if not np.all(used):
            raise ParseError(
                f"Mesh has {int(np.count_nonzero(~used))} isolated vertex(es) (first: {int(np.argmin(used))})"
            )

        edges, counts = _edge_counts(f)
        if np.any(counts > 2):
            u, w = edges[np.argmax(counts)]
            raise NonManifoldError(f"Edge ({u}, {w}) borders {int(counts.max())} faces")
        boundary = np.zeros(v.shape[0], dtype=bool)
        boundary[edges[counts == 1].reshape(-1)] = True

        mesh = cls(vertices=_readonly(v), faces=_readonly(f), boundary_flags=_readonly(boundary))
        logging.debug(
            "[mesh] built mesh (vertices=%d, faces=%d, boundary=%d)",
            mesh.n_vertices,
            mesh.n_faces,
            int(boundary.sum()),
        )
        return mesh, dropped

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted ``(u, v)`` rows."""
        return _readonly(_edge_counts(self.faces)[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return _readonly(_face_areas(self.vertices, self.faces))

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Barycentric vertex areas: one third of the incident face areas."""
        third = np.repeat(self.face_areas / 3.0, 3)
        return _readonly(np.bincount(self.faces.reshape(-1), weights=third, minlength=self.n_vertices))

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def is_closed(self) -> bool:
        return not bool(self.boundary_flags.any())

    @cached_property
    def edge_graph(self) -> sparse.csr_matrix:
        """Symmetric sparse matrix of Euclidean edge lengths."""
        u, w = self.edges[:, 0], self.edges[:, 1]
        lengths = np.linalg.norm(self.vertices[u] - self.vertices[w], axis=1)
        n = self.n_vertices
        graph = sparse.coo_matrix(
            (np.concatenate([lengths, lengths]), (np.concatenate([u, w]), np.concatenate([w, u]))),
            shape=(n, n),
        )
        return graph.tocsr()

    def scaled(self, factor: float) -> "Mesh":
        """Uniformly scaled copy with identical connectivity."""
        mesh, _ = Mesh.from_arrays(self.vertices * float(factor), self.faces)
        return mesh

    def permuted(self, order: Sequence[int]) -> "Mesh":
        """Copy whose vertex ``i`` is this mesh's vertex ``order[i]``."""
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(self.n_vertices)):
            raise InvalidVertexError("Permutation must list every vertex exactly once")
        inverse = np.empty_like(order)
        inverse[order] = np.arange(order.size)
        mesh, _ = Mesh.from_arrays(self.vertices[order], inverse[self.faces])
        return mesh


def _edge_counts(faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0)
    pairs.sort(axis=1)
    edges, counts = np.unique(pairs, axis=0, return_counts=True)
    return edges, counts


@dataclass(frozen=True)
class SampleSet:
    """Distinct vertex indices chosen as distance sources."""

    indices: Tuple[int, ...]
    method: SampleMethod = SampleMethod.EXPLICIT

    @classmethod
    def explicit(cls, mesh: Mesh, indices: Sequence[int]) -> "SampleSet":
        idx = tuple(int(i) for i in indices)
        if not idx:
            raise InvalidCountError("Sample set must not be empty")
        if len(set(idx)) != len(idx):
            raise InvalidCountError("Sample indices must be distinct")
        if len(idx) > mesh.n_vertices:
            raise InvalidCountError(f"{len(idx)} samples exceed vertex count {mesh.n_vertices}")
        bad = [i for i in idx if i < 0 or i >= mesh.n_vertices]
        if bad:
            raise InvalidVertexError(f"Sample vertex {bad[0]} out of range")
        return cls(indices=idx, method=SampleMethod.EXPLICIT)

    @property
    def size(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)


class LoadedMesh(NamedTuple):
    mesh: Mesh
    dropped_faces: int


def load_mesh(path: Union[str, Path], format: Optional[MeshFormat] = None) -> LoadedMesh:
    """
    Read an OFF or OBJ file.

    Degenerate faces are dropped (their count is returned); malformed input raises
    ParseError, edges with more than two faces raise NonManifoldError and files without
    usable faces raise EmptyMeshError.
    """
    path = Path(path)
    fmt = MeshFormat(format) if format is not None else MeshFormat.from_path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ParseError(f"Mesh file not found: {path}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"Mesh file {path} is not ASCII text: {e}") from e
    logging.debug("[mesh] loading %s (format=%s)", path, fmt.value)
    if fmt is MeshFormat.OFF:
        vertices, faces = _parse_off(text, path)
    else:
        vertices, faces = _parse_obj(text, path)
    mesh, dropped = Mesh.from_arrays(vertices, faces)
    logging.info("[mesh] loaded %s: %d vertices, %d faces", path.name, mesh.n_vertices, mesh.n_faces)
    return LoadedMesh(mesh, dropped)


def _data_lines(text: str) -> List[List[str]]:
    out: List[List[str]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line.split())
    return out


def _parse_off(text: str, path: Path) -> Tuple[List[List[float]], List[List[int]]]:
    lines = _data_lines(text)
    if not lines or not lines[0][0].upper() == "OFF":
        raise ParseError(f"{path}: missing 'OFF' header")
    header = lines[0][1:]
    body = lines[1:]
    if not header:
        if not body:
            raise ParseError(f"{path}: missing counts line")
        header, body = body[0], body[1:]
    try:
        nv, nf = int(header[0]), int(header[1])
    except (IndexError, ValueError) as e:
        raise ParseError(f"{path}: invalid counts line {' '.join(header)!r}") from e
    if nv < 0 or nf < 0 or len(body) < nv + nf:
        raise ParseError(f"{path}: expected {nv} vertex and {nf} face lines, found {len(body)} lines")
    vertices: List[List[float]] = []
    for tokens in body[:nv]:
        try:
            vertices.append([float(t) for t in tokens[:3]])
        except ValueError as e:
            raise ParseError(f"{path}: invalid vertex line {' '.join(tokens)!r}") from e
        if len(tokens) < 3:
            raise ParseError(f"{path}: vertex line needs 3 coordinates: {' '.join(tokens)!r}")
    faces: List[List[int]] = []
    for tokens in body[nv : nv + nf]:
        try:
            count = int(tokens[0])
            idx = [int(t) for t in tokens[1 : 1 + count]]
        except ValueError as e:
            raise ParseError(f"{path}: invalid face line {' '.join(tokens)!r}") from e
        if count != 3 or len(idx) != 3:
            raise ParseError(f"{path}: only triangles are supported, got {' '.join(tokens)!r}")
        if min(idx) < 0 or max(idx) >= nv:
            raise ParseError(f"{path}: face index out of range in {' '.join(tokens)!r} ({nv} vertices)")
        faces.append(idx)
    return vertices, faces


def _parse_obj(text: str, path: Path) -> Tuple[List[List[float]], List[List[int]]]:
    vertices: List[List[float]] = []
    raw_faces: List[List[int]] = []
    for tokens in _data_lines(text):
        tag = tokens[0]
        if tag == "v":
            try:
                vertices.append([float(t) for t in tokens[1:4]])
            except ValueError as e:
                raise ParseError(f"{path}: invalid vertex line {' '.join(tokens)!r}") from e
            if len(tokens) < 4:
                raise ParseError(f"{path}: vertex line needs 3 coordinates: {' '.join(tokens)!r}")
        elif tag == "f":
            refs = tokens[1:]
            if len(refs) != 3:
                raise ParseError(f"{path}: only triangles are supported, got {' '.join(tokens)!r}")
            try:
                idx = [int(r.split("/", 1)[0]) for r in refs]
            except ValueError as e:
                raise ParseError(f"{path}: invalid face line {' '.join(tokens)!r}") from e
            if min(idx) < 1:
                raise ParseError(f"{path}: non-positive face index in {' '.join(tokens)!r}")
            raw_faces.append([i - 1 for i in idx])
        # vt, vn, groups, materials and the rest carry no geometry we use
    if raw_faces and max(max(f) for f in raw_faces) >= len(vertices):
        raise ParseError(f"{path}: face index out of range ({len(vertices)} vertices)")
    return vertices, raw_faces


def save_mesh(mesh: Mesh, path: Union[str, Path], format: Optional[MeshFormat] = None) -> Path:
    """Write OFF or OBJ with shortest round-trip float formatting."""
    path = Path(path)
    fmt = MeshFormat(format) if format is not None else MeshFormat.from_path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines: List[str] = []
    if fmt is MeshFormat.OFF:
        lines.append("OFF")
        lines.append(f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}")
        lines.extend(" ".join(repr(float(c)) for c in row) for row in mesh.vertices)
        lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.faces.tolist())
    else:
        lines.extend("v " + " ".join(repr(float(c)) for c in row) for row in mesh.vertices)
        lines.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist())
    lines.append("")
    path.write_text("\n".join(lines), encoding="utf-8")
    logging.debug("[mesh] wrote %s (%s)", path, fmt.value)
    return path


def with_vertices(mesh: Mesh, vertices: np.ndarray) -> Mesh:
    """Same connectivity, new positions (e.g. a reconstruction or a flat embedding)."""
    v = np.zeros((mesh.n_vertices, 3))
    cols = min(3, vertices.shape[1])
    v[:, :cols] = vertices[:, :cols]
    return Mesh(vertices=_readonly(v), faces=mesh.faces, boundary_flags=mesh.boundary_flags)


def farthest_point_sample(
    mesh: Mesh,
    p: int,
    seed: int = 0,
    dist: Optional[DistanceOracle] = None,
) -> SampleSet:
    """
    Greedy max-min sampling.

    ``indices[0]`` is ``seed``; each next sample maximizes the distance to the nearest
    already chosen sample, ties going to the lowest vertex index. ``dist`` maps
    ``(mesh, source)`` to a per-vertex distance array and defaults to the geodesic
    distance field.
    """
    if not 1 <= p <= mesh.n_vertices:
        raise InvalidCountError(f"Sample count p={p} must lie in [1, {mesh.n_vertices}]")
    if not 0 <= seed < mesh.n_vertices:
        raise InvalidVertexError(f"Seed vertex {seed} out of range")
    if dist is None:
        from core.geodesics import distance_field

        dist = distance_field

    chosen = [int(seed)]
    nearest = np.array(dist(mesh, seed), dtype=np.float64)
    nearest[seed] = -np.inf
    for _ in range(1, p):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, dist(mesh, nxt))
        nearest[chosen] = -np.inf
    logging.debug("[mesh] farthest point sampling chose %d vertices (seed=%d)", p, seed)
    return SampleSet(indices=tuple(chosen), method=SampleMethod.FARTHEST_POINT)
