"""Indexed triangle meshes and the discrete differential geometry on them.

Conventions
-----------
* ``faces`` are consistently oriented; a boundary half-edge ``a -> b`` has its
  face on the left when viewed against the face normal.
* Mean curvature *vectors* are averages, ``(k1 + k2) / 2`` times the normal;
  on the unit sphere the vector at ``x`` is ``-x``.
* The generalized angle defect of a vertex is ``2*pi - sum(angles)`` in the
  interior and ``pi - sum(angles)`` on the boundary (the turning angle).
  These sum to ``2*pi*chi`` exactly for every mesh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import DegenerateNormalError, DisconnectedMeshError, MeshValidityError

MIN_FACE_AREA = 1e-14
MAX_ASPECT_RATIO = 1e6


class TriangleMesh:
    """Immutable oriented triangle mesh with derived boundary loops.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
    faces : array_like of int, shape (m, 3)
    validate : bool
        Run the structural and geometric checks. Internal callers that only
        move vertices of an already validated mesh use :meth:`with_vertices`.
    """

    def __init__(self, vertices, faces, validate=True):
        v = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(faces, dtype=np.int64).reshape(-1, 3)
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f
        if validate:
            self._check_topology()
            self.check_geometry()

    def __repr__(self):
        return f"TriangleMesh(V={self.n_vertices}, F={self.n_faces}, loops={len(self.boundary_loops)})"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def with_vertices(self, vertices):
        """Same connectivity, new positions; topology caches are shared."""
        out = TriangleMesh.__new__(TriangleMesh)
        v = np.array(vertices, dtype=np.float64)
        if v.shape != self.vertices.shape:
            raise ValueError("vertex array shape mismatch")
        v.setflags(write=False)
        out.vertices = v
        out.faces = self.faces
        for name in ("_halfedges", "boundary_loops", "boundary_vertices", "edges",
                     "is_boundary_vertex", "boundary_edges"):
            if name in self.__dict__:
                out.__dict__[name] = self.__dict__[name]
        return out

    # -- topology -------------------------------------------------------------

    @cached_property
    def _halfedges(self):
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    @cached_property
    def edges(self):
        """Undirected edges as sorted pairs, in lexicographic order."""
        he = np.sort(self._halfedges, axis=1)
        return np.unique(he, axis=0)

    @cached_property
    def boundary_edges(self):
        """Directed boundary half-edges ``(a, b)`` whose twin is missing."""
        he = self._halfedges
        n = max(self.n_vertices, 1)
        key = he[:, 0] * n + he[:, 1]
        twin = he[:, 1] * n + he[:, 0]
        mask = ~np.isin(twin, key)
        return he[mask]

    @cached_property
    def boundary_loops(self):
        """Ordered vertex cycles covering every boundary edge exactly once.

        Each loop starts at its smallest vertex index; loops are sorted by
        that index.
        """
        nxt = {}
        for a, b in self.boundary_edges.tolist():
            if a in nxt:
                raise MeshValidityError(f"vertex {a} has two outgoing boundary edges (pinched star)")
            nxt[a] = b
        loops = []
        seen = set()
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = nxt[start]
            while cur != start:
                if cur in seen or cur not in nxt:
                    raise MeshValidityError(f"boundary does not close into a cycle at vertex {cur}")
                loop.append(cur)
                seen.add(cur)
                cur = nxt[cur]
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    @cached_property
    def boundary_vertices(self):
        if not self.boundary_loops:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(self.boundary_loops))

    @cached_property
    def is_boundary_vertex(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    def adjacency(self):
        e = self.edges
        n = self.n_vertices
        a = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        return (a + a.T).tocsr()

    def is_connected(self):
        if self.n_vertices == 0:
            return True
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        return ncomp == 1

    def _check_topology(self):
        f = self.faces
        n = self.n_vertices
        if len(f) == 0:
            return
        bad = np.flatnonzero((f < 0).any(axis=1) | (f >= n).any(axis=1))
        if len(bad):
            raise MeshValidityError(f"face {bad[0]} has a vertex index out of range")
        bad = np.flatnonzero((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0]))
        if len(bad):
            raise MeshValidityError(f"face {bad[0]} repeats a vertex index")
        unused = np.setdiff1d(np.arange(n), f.ravel())
        if len(unused):
            raise MeshValidityError(f"vertex {unused[0]} is not referenced by any face")

        he = self._halfedges
        key = he[:, 0] * n + he[:, 1]
        uniq, counts = np.unique(key, return_counts=True)
        if (counts > 1).any():
            k = uniq[counts > 1][0]
            face = int(np.flatnonzero(key == k)[1] % len(f))
            raise MeshValidityError(
                f"directed edge ({k // n}, {k % n}) used twice (inconsistent orientation "
                f"or non-manifold edge) at face {face}")

        # Vertex stars: the corner map next -> prev around each vertex must be
        # a single cycle (interior) or a single path (boundary).
        succ = {}
        for a, b, c in f.tolist():
            for v, nx, pv in ((a, b, c), (b, c, a), (c, a, b)):
                succ.setdefault(v, {})[nx] = pv
        for v in range(n):
            star = succ[v]
            targets = set(star.values())
            starts = [s for s in star if s not in targets]
            first = starts[0] if len(starts) == 1 else next(iter(star))
            cur, count = first, 0
            while cur in star and count <= len(star):
                cur = star[cur]
                count += 1
                if cur == first:
                    break
            if len(starts) > 1 or count != len(star):
                raise MeshValidityError(f"star of vertex {v} is not a disk or half-disk")
        self.boundary_loops  # raises on malformed boundary

    def check_geometry(self):
        """Reject faces with area below ``MIN_FACE_AREA`` or aspect ratio above
        ``MAX_ASPECT_RATIO`` (longest edge squared over twice the area)."""
        if self.n_faces == 0:
            return
        areas = face_areas(self)
        lmax2 = np.max(edge_lengths_sq(self), axis=1)
        with np.errstate(divide="ignore"):
            aspect = lmax2 / (2.0 * areas)
        bad = np.flatnonzero((areas < MIN_FACE_AREA) | ~(aspect <= MAX_ASPECT_RATIO))
        if len(bad):
            i = bad[0]
            raise MeshValidityError(f"face {i} is degenerate (area {areas[i]:.3e}, aspect {aspect[i]:.3e})")


# -- basic measures -----------------------------------------------------------

def face_areas(mesh):
    return kernels.face_areas(mesh.vertices, mesh.faces)


def face_normals(mesh, unit=True):
    v, f = mesh.vertices, mesh.faces
    n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    if unit:
        n = n / np.linalg.norm(n, axis=1)[:, None]
    return n


def edge_lengths_sq(mesh):
    """Squared lengths of the edges opposite each corner, shape (m, 3)."""
    v, f = mesh.vertices, mesh.faces
    out = np.empty((mesh.n_faces, 3))
    for i in range(3):
        d = v[f[:, (i + 2) % 3]] - v[f[:, (i + 1) % 3]]
        out[:, i] = np.einsum("ij,ij->i", d, d)
    return out


def surface_area(mesh):
    """Total area, summed in face order with compensation."""
    if mesh.n_faces == 0:
        return 0.0
    return kernels.total_area(mesh.vertices, mesh.faces)


def boundary_length(mesh):
    if not mesh.boundary_loops:
        return 0.0
    v = mesh.vertices
    e = mesh.boundary_edges
    return math.fsum(np.linalg.norm(v[e[:, 1]] - v[e[:, 0]], axis=1))


def triangle_quality(mesh):
    """Per-face quality ``4*sqrt(3)*A / sum(l^2)``; 1 for equilateral."""
    return kernels.face_quality(mesh.vertices, mesh.faces)


@dataclass(frozen=True)
class Topology:
    euler_char: int
    genus: int
    num_boundary_loops: int


def euler_characteristic(mesh):
    """``V - E + F`` with genus from ``chi = 2 - 2*genus - k``."""
    if not mesh.is_connected():
        raise DisconnectedMeshError("mesh has more than one connected component")
    chi = mesh.n_vertices - len(mesh.edges) + mesh.n_faces
    k = len(mesh.boundary_loops)
    two_g = 2 - k - chi
    if two_g < 0 or two_g % 2:
        raise MeshValidityError(f"inconsistent topology: chi={chi}, k={k}")
    return Topology(chi, two_g // 2, k)


def vertex_normals(mesh):
    """Area-weighted unit vertex normals.

    The global sign is flipped when the mesh is, on balance, oriented toward
    the origin, so radial graphs over the sphere get outward normals.
    Meshes through the origin (e.g. equatorial disks) keep the face
    orientation.
    """
    n = face_normals(mesh, unit=False)
    acc = np.zeros_like(mesh.vertices)
    for i in range(3):
        np.add.at(acc, mesh.faces[:, i], n)
    lens = np.linalg.norm(acc, axis=1)
    scale = max(float(lens.max(initial=0.0)), 1e-300)
    bad = np.flatnonzero(lens <= 1e-14 * scale)
    if len(bad):
        raise DegenerateNormalError(bad[0])
    acc /= lens[:, None]
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    flux = math.fsum(np.einsum("ij,ij->i", n, centroids))
    if flux < -1e-12 * math.fsum(np.linalg.norm(n, axis=1)):
        acc = -acc
    return acc


# -- curvature ----------------------------------------------------------------

def corner_angles(mesh):
    """Interior angle at each face corner, shape (m, 3)."""
    v, f = mesh.vertices, mesh.faces
    out = np.empty((mesh.n_faces, 3))
    for i in range(3):
        p = v[f[:, i]]
        a = v[f[:, (i + 1) % 3]] - p
        b = v[f[:, (i + 2) % 3]] - p
        out[:, i] = np.arctan2(np.linalg.norm(np.cross(a, b), axis=1),
                               np.einsum("ij,ij->i", a, b))
    return out


def cotangent_weights(mesh):
    """Cotangent of the angle at each corner, shape (m, 3)."""
    v, f = mesh.vertices, mesh.faces
    out = np.empty((mesh.n_faces, 3))
    for i in range(3):
        p = v[f[:, i]]
        a = v[f[:, (i + 1) % 3]] - p
        b = v[f[:, (i + 2) % 3]] - p
        out[:, i] = np.einsum("ij,ij->i", a, b) / np.linalg.norm(np.cross(a, b), axis=1)
    return out


def cotangent_laplacian(mesh):
    """Symmetric matrix L with ``(L x)_i = 1/2 sum_j (cot a + cot b)(x_j - x_i)``.

    ``-L`` is the piecewise-linear stiffness (Dirichlet energy) matrix.
    """
    cot = cotangent_weights(mesh)
    f = mesh.faces
    rows, cols, vals = [], [], []
    for i in range(3):
        j, k = f[:, (i + 1) % 3], f[:, (i + 2) % 3]
        w = 0.5 * cot[:, i]
        rows += [j, k]
        cols += [k, j]
        vals += [w, w]
    n = mesh.n_vertices
    w = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
    return (w - sparse.diags(np.asarray(w.sum(axis=1)).ravel())).tocsr()


def mixed_areas(mesh):
    """Mixed Voronoi vertex areas (Meyer et al.); they sum to the surface area."""
    shares = mixed_area_shares(mesh)
    res = np.zeros(mesh.n_vertices)
    for i in range(3):
        res += np.bincount(mesh.faces[:, i], weights=shares[:, i], minlength=mesh.n_vertices)
    return res


def mixed_area_shares(mesh):
    """Per-corner mixed-area share, shape (m, 3); rows sum to the face areas."""
    areas = face_areas(mesh)
    cot = cotangent_weights(mesh)
    l2 = edge_lengths_sq(mesh)
    obtuse = corner_angles(mesh) > 0.5 * np.pi
    any_obtuse = obtuse.any(axis=1)
    out = np.zeros((mesh.n_faces, 3))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        # edges i-j (opposite k) and i-k (opposite j)
        vor = 0.125 * (l2[:, k] * cot[:, k] + l2[:, j] * cot[:, j])
        out[:, i] = np.where(any_obtuse, np.where(obtuse[:, i], 0.5, 0.25) * areas, vor)
    return out


@dataclass
class Curvatures:
    """Per-vertex discrete curvature quantities.

    ``defect`` is the generalized angle defect (turning angle on the boundary),
    ``gauss`` is defect / mixed area on interior vertices (nan on the
    boundary), ``geodesic`` is turning angle / dual boundary length on
    boundary vertices (nan in the interior).
    """

    defect: np.ndarray
    gauss: np.ndarray
    mean_vector: np.ndarray
    geodesic: np.ndarray
    mixed_area: np.ndarray
    is_boundary: np.ndarray

    def gauss_bonnet_sum(self):
        return math.fsum(self.defect)


def _boundary_dual_lengths(mesh):
    """Half the sum of the two boundary edge lengths at each boundary vertex."""
    v = mesh.vertices
    e = mesh.boundary_edges
    lens = np.linalg.norm(v[e[:, 1]] - v[e[:, 0]], axis=1)
    dual = np.zeros(mesh.n_vertices)
    np.add.at(dual, e[:, 0], 0.5 * lens)
    np.add.at(dual, e[:, 1], 0.5 * lens)
    return dual


def discrete_curvatures(mesh):
    ang = corner_angles(mesh)
    angle_sum = np.zeros(mesh.n_vertices)
    for i in range(3):
        angle_sum += np.bincount(mesh.faces[:, i], weights=ang[:, i], minlength=mesh.n_vertices)
    bnd = mesh.is_boundary_vertex
    defect = np.where(bnd, np.pi, 2.0 * np.pi) - angle_sum
    marea = mixed_areas(mesh)
    gauss = np.where(bnd, np.nan, defect / marea)
    lap = cotangent_laplacian(mesh) @ mesh.vertices
    mean_vec = lap / (2.0 * marea[:, None])
    geo = np.full(mesh.n_vertices, np.nan)
    if bnd.any():
        dual = _boundary_dual_lengths(mesh)
        geo[bnd] = defect[bnd] / dual[bnd]
    return Curvatures(defect, gauss, mean_vec, geo, marea, bnd)


def gauss_bonnet_residual(mesh):
    """|sum of generalized defects - 2*pi*chi|; zero up to round-off."""
    chi = mesh.n_vertices - len(mesh.edges) + mesh.n_faces
    return abs(discrete_curvatures(mesh).gauss_bonnet_sum() - 2.0 * np.pi * chi)


# -- refinement ---------------------------------------------------------------

def subdivide(mesh, reposition=None):
    """One level of 1-to-4 midpoint subdivision.

    ``reposition(points, on_boundary)`` may move the new edge midpoints
    (e.g. onto a sphere); old vertices are kept as they are.
    """
    v, f = mesh.vertices, mesh.faces
    n = len(v)
    he = np.sort(np.concatenate([f[:, [1, 2]], f[:, [2, 0]], f[:, [0, 1]]]), axis=1)
    edges, inv = np.unique(he, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (v[edges[:, 0]] + v[edges[:, 1]])
    if reposition is not None:
        bset = mesh.is_boundary_vertex
        bkeys = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
        on_b = np.array([(a, b) in bkeys for a, b in edges.tolist()]) if bset.any() else \
            np.zeros(len(edges), dtype=bool)
        mids = reposition(mids, on_b)
    m = len(f)
    e0, e1, e2 = inv[:m] + n, inv[m:2 * m] + n, inv[2 * m:] + n  # opposite corners 0,1,2
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    new_f = np.concatenate([
        np.stack([a, e2, e1], axis=1),
        np.stack([e2, b, e0], axis=1),
        np.stack([e1, e0, c], axis=1),
        np.stack([e0, e1, e2], axis=1),
    ])
    return TriangleMesh(np.vstack([v, mids]), new_f)


# -- transforms ---------------------------------------------------------------

def transformed(mesh, rotation=None, scale=1.0, translation=None):
    v = mesh.vertices
    if rotation is not None:
        v = v @ np.asarray(rotation).T
    v = scale * v
    if translation is not None:
        v = v + np.asarray(translation)
    return mesh.with_vertices(v)


# -- OBJ I/O --------------------------------------------------------------------

def read_obj(path, validate=True):
    """Read ``v x y z`` and ``f i j k`` records (1-based; ``i/t/n`` forms and
    negative indices accepted). Other records are ignored."""
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) != 3:
                    raise MeshValidityError(f"{path}:{lineno}: only triangular faces are supported")
                faces.append(idx)
    return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3),
                        validate=validate)


def write_obj(mesh, path):
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in (mesh.faces + 1).tolist():
            fh.write(f"f {a} {b} {c}\n")
