"""Reference surfaces with closed-form ground truth, and solver seeds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import MeshValidityError, NumericalError
from .mesh import TriangleMesh, subdivide


@dataclass(frozen=True)
class CatenoidParams:
    """Critical catenoid ``c (cosh t cos th, cosh t sin th, t)``, ``|t| <= t0``."""

    t0: float
    c: float

    @property
    def area_sigma(self):
        return 2.0 * math.pi * self.c ** 2 * (self.t0 + math.sinh(self.t0) * math.cosh(self.t0))

    @property
    def boundary_len(self):
        return 4.0 * math.pi * self.c * math.cosh(self.t0)

    @property
    def cap_cosine(self):
        return self.c * self.t0

    @property
    def area_omega(self):
        # sphere minus two polar caps whose boundary circles sit at z = +-c*t0
        return 4.0 * math.pi * self.cap_cosine

    def point(self, t, theta):
        ch = np.cosh(t)
        return self.c * np.stack([ch * np.cos(theta), ch * np.sin(theta), np.asarray(t) + 0 * theta],
                                 axis=-1)


def solve_catenoid_params():
    """Root of ``t tanh t = 1`` by bisection on [1, 1.5]; scale puts the
    boundary circles on the unit sphere."""
    try:
        t0 = bisect(lambda t: t * math.tanh(t) - 1.0, 1.0, 1.5, xtol=1e-16, rtol=1e-15, maxiter=200)
    except RuntimeError as exc:
        raise NumericalError(f"bisection did not converge: {exc}") from exc
    c = 1.0 / math.sqrt(math.cosh(t0) ** 2 + t0 ** 2)
    return CatenoidParams(t0, c)


def _grid_faces(n_rings, n_around):
    """Faces of a periodic (ring, angle) grid, oriented by (angle, ring)."""
    j, k = np.meshgrid(np.arange(n_rings - 1), np.arange(n_around), indexing="ij")
    j, k = j.ravel(), k.ravel()
    k1 = (k + 1) % n_around
    v00, v01 = j * n_around + k, j * n_around + k1
    v10, v11 = (j + 1) * n_around + k, (j + 1) * n_around + k1
    return np.concatenate([np.stack([v00, v01, v10], 1), np.stack([v01, v11, v10], 1)])


def generate_catenoid(n_t, n_theta, params=None):
    """Critical catenoid sampled on ``n_t`` uniform intervals in t and
    ``n_theta`` angles; faces oriented away from the axis."""
    if n_t < 2 or n_theta < 3:
        raise ValueError(f"need n_t >= 2 and n_theta >= 3, got ({n_t}, {n_theta})")
    p = params or solve_catenoid_params()
    t = np.linspace(-p.t0, p.t0, n_t + 1)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    tt, th = np.meshgrid(t, theta, indexing="ij")
    v = p.point(tt, th).reshape(-1, 3)
    for ring in (0, n_t):
        sl = slice(ring * n_theta, (ring + 1) * n_theta)
        v[sl] /= np.linalg.norm(v[sl], axis=1)[:, None]
    return TriangleMesh(v, _grid_faces(n_t + 1, n_theta))


def _frame(normal):
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(helper, n)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u), n


def generate_disk(n=6, plane_normal=(0.0, 0.0, 1.0), levels=0):
    """Unit disk through the origin: an ``n``-gon fan refined ``levels`` times
    by midpoint subdivision with new boundary points pushed to the circle.
    Face normals equal ``plane_normal``."""
    if n < 3:
        raise ValueError("n must be at least 3")
    ang = 2.0 * np.pi * np.arange(n) / n
    v = np.vstack([[0.0, 0.0, 0.0], np.stack([np.cos(ang), np.sin(ang), np.zeros(n)], 1)])
    f = np.stack([np.zeros(n, dtype=int), 1 + np.arange(n), 1 + (np.arange(n) + 1) % n], 1)
    mesh = TriangleMesh(v, f)

    def push(mids, on_b):
        mids = mids.copy()
        mids[on_b] /= np.linalg.norm(mids[on_b], axis=1)[:, None]
        return mids

    for _ in range(levels):
        mesh = subdivide(mesh, push)
    u, w, nrm = _frame(plane_normal)
    basis = np.stack([u, w, nrm])
    return mesh.with_vertices(mesh.vertices @ basis)


def icosphere(subdivisions=3):
    """Unit icosphere with outward orientation."""
    g = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([[-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0],
                  [0, -1, g], [0, 1, g], [0, -1, -g], [0, 1, -g],
                  [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1]], dtype=float)
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    mesh = TriangleMesh(v, f)
    for _ in range(subdivisions):
        mesh = subdivide(mesh, lambda m, _b: m / np.linalg.norm(m, axis=1)[:, None])
    return mesh


def window_centers(num_windows):
    """Well-separated unit directions for the shell windows."""
    if num_windows < 1:
        raise ValueError("need at least one window")
    fixed = {
        1: [[0, 0, 1]],
        2: [[0, 0, 1], [0, 0, -1]],
        3: [[1, 0, 0], [-0.5, math.sqrt(3) / 2, 0], [-0.5, -math.sqrt(3) / 2, 0]],
        4: [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
        6: [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    }
    if num_windows in fixed:
        c = np.array(fixed[num_windows], dtype=float)
    else:
        i = np.arange(num_windows) + 0.5
        z = 1.0 - 2.0 * i / num_windows
        phi = np.pi * (1.0 + math.sqrt(5.0)) * i
        r = np.sqrt(1.0 - z * z)
        c = np.stack([r * np.cos(phi), r * np.sin(phi), z], 1)
    return c / np.linalg.norm(c, axis=1)[:, None]


def generate_near_sphere_shell(num_windows, window_radius, subdivisions, centers=None):
    """Icosphere with ``num_windows`` geodesic caps of angular radius
    ``window_radius`` cut out; boundary vertices lie on the unit sphere."""
    centers = window_centers(num_windows) if centers is None else np.asarray(centers, float)
    centers = centers / np.linalg.norm(centers, axis=1)[:, None]
    if window_radius <= 0 or window_radius >= math.pi / 2:
        raise ValueError("window_radius must lie in (0, pi/2)")
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            sep = math.acos(float(np.clip(centers[i] @ centers[j], -1.0, 1.0)))
            if sep <= 2.0 * window_radius:
                raise ValueError(f"windows {i} and {j} overlap (separation {sep:.3f} rad)")

    sphere = icosphere(subdivisions)
    v, f = sphere.vertices, sphere.faces
    cosr = math.cos(window_radius)
    inside = (v @ centers.T > cosr).any(axis=1)
    drop = inside[f].any(axis=1)
    # make sure every window removes at least the face under its center
    cen = v[f].mean(axis=1)
    cen /= np.linalg.norm(cen, axis=1)[:, None]
    for c in centers:
        drop[np.argmax(cen @ c)] = True

    for _ in range(100):
        keep = f[~drop]
        bad = _pinched_vertices(keep, len(v))
        if not len(bad):
            break
        drop |= np.isin(f, bad).any(axis=1) & (cen @ centers.T > cosr - 0.5).any(axis=1)
    else:
        raise MeshValidityError("could not cut clean windows; try more subdivisions")

    keep = f[~drop]
    used = np.unique(keep)
    remap = -np.ones(len(v), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nv = v[used].copy()
    mesh = TriangleMesh(nv, remap[keep])
    b = mesh.boundary_vertices
    nv[b] /= np.linalg.norm(nv[b], axis=1)[:, None]
    mesh = mesh.with_vertices(nv)
    if len(mesh.boundary_loops) != len(centers):
        raise MeshValidityError(
            f"cut produced {len(mesh.boundary_loops)} boundary loops, expected {len(centers)}")
    return mesh


def _pinched_vertices(faces, n):
    he = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    key = he[:, 0] * n + he[:, 1]
    twin = he[:, 1] * n + he[:, 0]
    bnd = he[~np.isin(twin, key)]
    counts = np.bincount(bnd[:, 0], minlength=n)
    return np.flatnonzero(counts > 1)


def generate_spherical_band(phi_top, phi_bottom, n_phi, n_theta):
    """Mesh of the region between two curves of constant-ish polar angle on S^2.

    ``phi_top`` and ``phi_bottom`` are floats or callables of the azimuth.
    Faces are oriented outward (normals along +p).
    """
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    top = phi_top(theta) if callable(phi_top) else np.full(n_theta, float(phi_top))
    bot = phi_bottom(theta) if callable(phi_bottom) else np.full(n_theta, float(phi_bottom))
    s = np.linspace(0.0, 1.0, n_phi + 1)[:, None]
    phi = top[None, :] + s * (bot - top)[None, :]
    th = np.broadcast_to(theta, phi.shape)
    v = np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], -1).reshape(-1, 3)
    # rings run north to south, so the grid orientation points inward
    return TriangleMesh(v, _grid_faces(n_phi + 1, n_theta)[:, ::-1])


def perturb_interior(mesh, amplitude, seed=0):
    """Scale each interior vertex radially by ``1 + amplitude * U(-1, 1)``."""
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-1.0, 1.0, mesh.n_vertices)
    xi[mesh.is_boundary_vertex] = 0.0
    return mesh.with_vertices(mesh.vertices * (1.0 + amplitude * xi)[:, None])
