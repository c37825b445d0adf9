"""Two-hemisphere triangulated source spaces and graph geodesics.

The source space is a pair of icospheres (one per hemisphere) whose
vertices are the candidate source locations.  Distances are graph
geodesics over the mesh edges (Dijkstra); vertices in different
hemispheres are at infinite distance from each other.  The spatial
smoothness basis is a sparse Gaussian kernel over geodesic
neighborhoods.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LEFT, RIGHT = 0, 1
HEMISPHERE_NAMES = ("left", "right")

_PHI = (1.0 + math.sqrt(5.0)) / 2.0

_ICO_VERTICES = np.array(
    [
        (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
        (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
        (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
    ],
    dtype=float,
)

_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


@dataclass
class TriangleMesh:
    """Triangulated two-hemisphere source space.

    vertices are in millimeters; hemisphere holds LEFT/RIGHT per vertex.
    edges and edge_lengths are derived from the faces (undirected,
    each pair listed once with a < b).
    """

    vertices: np.ndarray
    faces: np.ndarray
    hemisphere: np.ndarray
    edges: np.ndarray = field(init=False)
    edge_lengths: np.ndarray = field(init=False)
    _adjacency: list | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        self.hemisphere = np.asarray(self.hemisphere, dtype=np.int8)
        self.edges, self.edge_lengths = _derive_edges(self.vertices, self.faces)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def hemisphere_vertices(self, hemi: int) -> np.ndarray:
        """Indices of all vertices in one hemisphere (LEFT or RIGHT)."""
        return np.flatnonzero(self.hemisphere == hemi)

    def adjacency(self) -> list:
        """Per-vertex list of (neighbor, edge length) pairs. Built lazily."""
        if self._adjacency is None:
            adj = [[] for _ in range(self.n_vertices)]
            for (a, b), w in zip(self.edges, self.edge_lengths):
                adj[a].append((int(b), float(w)))
                adj[b].append((int(a), float(w)))
            self._adjacency = adj
        return self._adjacency


@dataclass
class SpatialBasis:
    """Sparse columnwise Gaussian smoothing kernel over the mesh.

    Column i holds weight exp(-(d_ij/rho)^2) at row j for each of the
    neighborhood_size geodesic neighbors j of i, and 1 on the diagonal.
    """

    psi: sp.csc_array
    rho: float
    neighborhood_size: int

    @property
    def n_sources(self) -> int:
        return self.psi.shape[0]


def _derive_edges(vertices: np.ndarray, faces: np.ndarray):
    if faces.size == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
    pairs = np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [0, 2]]])
    pairs.sort(axis=1)
    edges = np.unique(pairs, axis=0)
    diff = vertices[edges[:, 0]] - vertices[edges[:, 1]]
    lengths = np.linalg.norm(diff, axis=1)
    return edges, lengths


def _icosphere(subdivisions: int):
    """Unit icosphere by recursive face subdivision; 10*4^n + 2 vertices."""
    verts = [tuple(v / np.linalg.norm(v)) for v in _ICO_VERTICES]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            idx = midpoint.get(key)
            if idx is None:
                m = np.add(verts[a], verts[b]) / 2.0
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                idx = len(verts) - 1
                midpoint[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


def build_two_hemisphere_mesh(subdivisions: int, radius: float, separation: float) -> TriangleMesh:
    """Two icospheres of the given radius, centers at -/+ separation/2 on x.

    Each hemisphere has 10*4^subdivisions + 2 vertices; the left sphere's
    vertices come first.  No edge connects the hemispheres.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    if radius <= 0 or separation <= 0:
        raise ValueError("radius and separation must be positive")
    v, f = _icosphere(subdivisions)
    n = v.shape[0]
    left = v * radius + np.array([-separation / 2.0, 0.0, 0.0])
    right = v * radius + np.array([separation / 2.0, 0.0, 0.0])
    vertices = np.vstack([left, right])
    faces = np.vstack([f, f + n])
    hemisphere = np.concatenate([np.full(n, LEFT, np.int8), np.full(n, RIGHT, np.int8)])
    return TriangleMesh(vertices, faces, hemisphere)


def hemisphere_centers(mesh: TriangleMesh) -> np.ndarray:
    """Centroid of each hemisphere's vertices, shape (2, 3): left then right."""
    return np.stack(
        [mesh.vertices[mesh.hemisphere == h].mean(axis=0) for h in (LEFT, RIGHT)]
    )


def _check_index(mesh: TriangleMesh, i: int) -> int:
    i = int(i)
    if not 0 <= i < mesh.n_vertices:
        raise IndexError(f"vertex index {i} out of range [0, {mesh.n_vertices})")
    return i


def geodesic_distances_from(mesh: TriangleMesh, source: int) -> np.ndarray:
    """Shortest edge-path distance from source to every vertex (Dijkstra).

    Vertices not reachable (the other hemisphere) get +inf.
    """
    source = _check_index(mesh, source)
    adj = mesh.adjacency()
    dist = np.full(mesh.n_vertices, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def geodesic_distance(mesh: TriangleMesh, i: int, j: int) -> float:
    """Geodesic distance between vertices i and j; +inf across hemispheres."""
    j = _check_index(mesh, j)
    return float(geodesic_distances_from(mesh, i)[j])


def nearest_geodesic_neighbors(mesh: TriangleMesh, i: int, k: int) -> np.ndarray:
    """The k geodesically nearest same-hemisphere vertices to i, excluding i.

    Ties are broken toward the smaller vertex index.
    """
    i = _check_index(mesh, i)
    hemi_count = int(np.count_nonzero(mesh.hemisphere == mesh.hemisphere[i]))
    if not 1 <= k < hemi_count:
        raise ValueError(f"k must be in [1, {hemi_count - 1}], got {k}")
    dist = geodesic_distances_from(mesh, i)
    dist[i] = np.inf  # self-exclusion; other hemisphere is already inf
    order = np.argsort(dist, kind="stable")  # stable: ties resolved by index
    return order[:k]


def build_spatial_basis(mesh: TriangleMesh, rho: float | None = None, k: int = 6) -> SpatialBasis:
    """Gaussian-kernel smoothing basis over geodesic neighborhoods.

    Column i has a unit diagonal entry and weight exp(-(d_ij/rho)^2) at
    each of i's k nearest geodesic neighbors j.  rho defaults to the
    mean edge length of the mesh, which keeps the basis strictly
    diagonally dominant (hence invertible) on icospheres.
    """
    if rho is None:
        rho = float(mesh.edge_lengths.mean())
    if rho <= 0:
        raise ValueError("rho must be positive")
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for i in range(n):
        dist = geodesic_distances_from(mesh, i)
        dist[i] = np.inf
        hemi_count = int(np.count_nonzero(mesh.hemisphere == mesh.hemisphere[i]))
        if not 1 <= k < hemi_count:
            raise ValueError(f"k must be in [1, {hemi_count - 1}], got {k}")
        omega = np.argsort(dist, kind="stable")[:k]
        rows.append(np.array([i]))
        cols.append(np.array([i]))
        vals.append(np.array([1.0]))
        rows.append(omega)
        cols.append(np.full(k, i))
        vals.append(np.exp(-((dist[omega] / rho) ** 2)))
    psi = sp.csc_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return SpatialBasis(psi=psi, rho=float(rho), neighborhood_size=int(k))


def apply_basis(basis: SpatialBasis, M: np.ndarray) -> np.ndarray:
    """Left-multiply by the smoothing basis: returns psi @ M."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] != basis.n_sources:
        raise ValueError(
            f"row count {M.shape[0]} does not match basis size {basis.n_sources}"
        )
    return basis.psi @ M


def validate_mesh(mesh: TriangleMesh) -> None:
    """Raise ValueError on any violated mesh invariant."""
    n = mesh.n_vertices
    if mesh.faces.size and (mesh.faces.min() < 0 or mesh.faces.max() >= n):
        raise ValueError("face references an invalid vertex index")
    if np.any(mesh.edge_lengths <= 0):
        raise ValueError("mesh contains a zero-length edge")
    if np.any(mesh.hemisphere[mesh.edges[:, 0]] != mesh.hemisphere[mesh.edges[:, 1]]):
        raise ValueError("an edge crosses hemispheres")
    for h in (LEFT, RIGHT):
        idx = mesh.hemisphere_vertices(h)
        if idx.size == 0:
            continue
        reach = geodesic_distances_from(mesh, int(idx[0]))
        if not np.all(np.isfinite(reach[idx])):
            raise ValueError(f"{HEMISPHERE_NAMES[h]} hemisphere is not connected")


def save_mesh(path, mesh: TriangleMesh, comment: str | None = None) -> None:
    """Write the plain-text mesh format (see load_mesh)."""
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"vertices {mesh.n_vertices} faces {mesh.faces.shape[0]}\n")
        for (x, y, z), h in zip(mesh.vertices, mesh.hemisphere):
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r} {HEMISPHERE_NAMES[h]}\n")
        for a, b, c in mesh.faces:
            fh.write(f"{a} {b} {c}\n")


def load_mesh(path) -> TriangleMesh:
    """Read a mesh written by save_mesh.

    Format: optional leading '#' comment lines, a header
    "vertices N faces M", N lines "x y z hemi", M lines "i j k".
    """
    with open(path) as fh:
        lines = [(no, ln.strip()) for no, ln in enumerate(fh, 1)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty mesh file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != "vertices" or parts[2] != "faces":
        raise ValueError(f"{path}:{no}: bad header {header!r}")
    nv, nf = int(parts[1]), int(parts[3])
    if len(lines) - 1 != nv + nf:
        raise ValueError(f"{path}: expected {nv + nf} data lines, got {len(lines) - 1}")
    verts, hemis, faces = [], [], []
    for no, ln in lines[1:1 + nv]:
        toks = ln.split()
        if len(toks) != 4 or toks[3] not in HEMISPHERE_NAMES:
            raise ValueError(f"{path}:{no}: bad vertex line {ln!r}")
        verts.append([float(t) for t in toks[:3]])
        hemis.append(HEMISPHERE_NAMES.index(toks[3]))
    for no, ln in lines[1 + nv:]:
        toks = ln.split()
        if len(toks) != 3:
            raise ValueError(f"{path}:{no}: bad face line {ln!r}")
        faces.append([int(t) for t in toks])
    mesh = TriangleMesh(
        np.array(verts), np.array(faces, dtype=np.int64), np.array(hemis, dtype=np.int8)
    )
    validate_mesh(mesh)
    return mesh
