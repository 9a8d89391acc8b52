"""Metric-measure spaces and the local-distance-distribution embedding.

A finite metric-measure space (pairwise distance matrix with uniform mass)
maps to a 1D meta-measure by sending each point to the empirical
distribution of its distances to all points, self-distance included.  This
embedding is invariant to isometries and feeds the SQW shape pipeline.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .gp_slicer import sample_paths
from .measures import MetaMeasure, build_meta, uniform_measure
from .rng import substream
from .sqw_dsw import DistanceEstimate, SlicingConfig, sqw


@dataclass(frozen=True)
class MMSpace:
    """Finite metric-measure space with uniform mass."""

    distances: np.ndarray
    label: str = None

    def __post_init__(self):
        dmat = np.asarray(self.distances, dtype=float)
        if dmat.ndim != 2 or dmat.shape[0] != dmat.shape[1] or dmat.shape[0] < 1:
            raise ValueError(f"distance matrix must be square, got shape {dmat.shape}")
        if np.any(dmat < 0) or not np.all(np.isfinite(dmat)):
            raise ValueError("distances must be finite and nonnegative")
        if np.max(np.abs(np.diag(dmat))) != 0.0:
            raise ValueError("diagonal must be zero")
        if np.max(np.abs(dmat - dmat.T)) > 1e-9:
            raise ValueError("distance matrix must be symmetric")
        dmat = dmat.copy()
        dmat.flags.writeable = False
        object.__setattr__(self, "distances", dmat)

    @property
    def size(self) -> int:
        return self.distances.shape[0]


def euclidean_mmspace(points, label: str = None) -> MMSpace:
    """Pairwise Euclidean distances of a point cloud."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts[:, None, :] - pts[None, :, :]
    dmat = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dmat, 0.0)
    return MMSpace((dmat + dmat.T) * 0.5, label)


def geodesic_mmspace(points, edges, label: str = None) -> MMSpace:
    """All-pairs shortest-path distances over an undirected edge graph.

    `edges` is a list of (i, j, length) with positive lengths.  Raises on a
    disconnected graph, naming an unreachable pair.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    rows, cols, vals = [], [], []
    for i, j, length in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for {n} points")
        if not length > 0:
            raise ValueError(f"edge ({i}, {j}) has nonpositive length {length}")
        rows += [i, j]
        cols += [j, i]
        vals += [length, length]
    graph = coo_matrix((vals, (rows, cols)), shape=(n, n))
    dmat = dijkstra(graph.tocsr(), directed=False)
    if np.any(np.isinf(dmat)):
        i, j = np.argwhere(np.isinf(dmat))[0]
        raise ValueError(f"graph is disconnected: no path between points {i} and {j}")
    np.fill_diagonal(dmat, 0.0)
    return MMSpace((dmat + dmat.T) * 0.5, label)


def mesh_to_edges(vertices, triangles):
    """Undirected edge list (i, j, Euclidean length) of a triangle mesh."""
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    seen = set()
    edges = []
    for tri in triangles:
        a, b, c = (int(v) for v in tri)
        for i, j in ((a, b), (b, c), (a, c)):
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                edges.append((key[0], key[1], float(np.linalg.norm(verts[key[0]] - verts[key[1]]))))
    return edges


def read_off(path):
    """Parse an OFF mesh file into (vertices, triangles)."""
    tokens = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ValueError(f"not an OFF file: {path}")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # skip edge count
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        tris = []
        for _ in range(nf):
            arity = int(tokens[pos])
            if arity != 3:
                raise ValueError(f"non-triangular face in {path}")
            tris.append([int(t) for t in tokens[pos + 1:pos + 4]])
            pos += 1 + arity
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed OFF file {path}: {exc}") from None
    return verts, tris


@dataclass(frozen=True)
class ShapeInput:
    """Shape described by points, points + edges, or a precomputed matrix."""

    points: np.ndarray = None
    edges: tuple = None
    matrix: np.ndarray = None
    label: str = None

    @classmethod
    def from_points(cls, points, label=None):
        return cls(points=np.atleast_2d(np.asarray(points, dtype=float)), label=label)

    @classmethod
    def from_edges(cls, points, edges, label=None):
        return cls(points=np.atleast_2d(np.asarray(points, dtype=float)),
                   edges=tuple(edges), label=label)

    @classmethod
    def from_matrix(cls, matrix, label=None):
        return cls(matrix=np.asarray(matrix, dtype=float), label=label)

    def to_mmspace(self) -> MMSpace:
        if self.matrix is not None:
            return MMSpace(self.matrix, self.label)
        if self.edges is not None:
            return geodesic_mmspace(self.points, self.edges, self.label)
        if self.points is not None:
            return euclidean_mmspace(self.points, self.label)
        raise ValueError("empty shape input")


def local_distance_distribution(space: MMSpace) -> MetaMeasure:
    """1D meta-measure of per-point distance rows, self-distance included."""
    rows = [uniform_measure(space.distances[i][:, None]) for i in range(space.size)]
    return build_meta(rows)


def sqw_shape_distance(x: ShapeInput, y: ShapeInput, config: SlicingConfig) -> DistanceEstimate:
    """SQW distance between the local distance distributions of two shapes.

    Both shapes are compared under one shared block of GP paths drawn from
    the config seed, so identical distance matrices give exactly zero.
    """
    meta_x = local_distance_distribution(x.to_mmspace())
    meta_y = local_distance_distribution(y.to_mmspace())
    paths = sample_paths(config.kernel, config.grid, config.total_projections,
                         substream(config.seed, "sqw-paths", 0))
    return sqw(meta_x, meta_y, paths, config.grid, config.interpolation)
