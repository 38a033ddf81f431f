"""Radial structure of a surface in the unit ball.

A surface is treated as a graph ``X(p) = (1 - u(p)) p`` over its radial
shadow ``Omega`` on the unit sphere. This module projects meshes to the
sphere, decides whether the projection is injective, measures ``Omega``,
evaluates the tilt-excess and divergence identities by vertex quadrature,
evaluates mean curvature of radial graphs from ``u`` and its derivatives, and
provides the exact critical-catenoid profile used as ground truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from . import kernels
from .errors import DegenerateProjectionError, PreconditionError
from .generators import CatenoidParams
from .mesh import TriangleMesh, face_normals, mixed_area_shares, surface_area, vertex_normals

ORIGIN_TOL = 1e-9
PLANE_TOL = 1e-12


# -- fields and projection ------------------------------------------------------

@dataclass
class RadialGraphField:
    """Height function ``u`` on a spherical domain mesh.

    ``frames[i]`` holds two orthonormal tangent vectors at ``domain`` vertex
    ``i``; ``grad_u[i]`` and ``hess_u[i]`` are expressed in that frame
    (geodesic normal coordinates at the vertex).
    """

    domain: TriangleMesh
    u: np.ndarray
    grad_u: np.ndarray
    hess_u: np.ndarray
    frames: np.ndarray

    def grad_u_ambient(self):
        return np.einsum("ik,ikj->ij", self.grad_u, self.frames)

    def within_ball(self):
        return bool(np.all(self.u >= -1e-12) and np.all(self.u < 1.0))


@dataclass
class RadialProjection:
    omega: TriangleMesh
    injective: bool
    u_field: RadialGraphField | None
    equatorial: bool = False
    reason: str = ""


def _plane_through_origin(mesh):
    n = face_normals(mesh, unit=False).sum(axis=0)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        return None
    n /= norm
    scale = max(np.abs(mesh.vertices).max(), 1.0)
    if np.abs(mesh.vertices @ n).max() > PLANE_TOL * scale:
        return None
    if (face_normals(mesh) @ n).min() <= 0.0:
        return None
    return n


def radial_project(mesh):
    """Project ``mesh`` radially onto the unit sphere and test injectivity.

    A planar mesh through the origin with its boundary on the unit sphere
    (an equatorial disk) has no radial shadow; it is instead lifted
    vertically onto the hemisphere on the side of its normal, which is the
    spherical domain sharing its boundary.
    """
    n = _plane_through_origin(mesh)
    rb = np.linalg.norm(mesh.vertices[mesh.boundary_vertices], axis=1)
    if n is not None and len(rb) and np.abs(rb - 1.0).max() <= ORIGIN_TOL:
        x = mesh.vertices
        height = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", x, x), 0.0, None))
        height[mesh.is_boundary_vertex] = 0.0
        lift = x + height[:, None] * n
        lift /= np.linalg.norm(lift, axis=1)[:, None]
        omega = mesh.with_vertices(lift)
        u = 1.0 - np.linalg.norm(x, axis=1)
        return RadialProjection(omega, True, fit_field(omega, u), equatorial=True)

    r = np.linalg.norm(mesh.vertices, axis=1)
    close = np.flatnonzero(r < ORIGIN_TOL)
    if len(close):
        raise DegenerateProjectionError(f"vertex {close[0]} lies at the origin")
    omega = mesh.with_vertices(mesh.vertices / r[:, None])
    ok, reason = projection_is_injective(omega)
    field = fit_field(omega, 1.0 - r) if ok else None
    return RadialProjection(omega, ok, field, reason=reason)


def _triple(a, b, c):
    return np.einsum("ij,ij->i", a, np.cross(b, c))


def projection_is_injective(omega, tol=1e-13):
    """Decide whether the spherical triangles of ``omega`` tile without overlap.

    Checks, in order: every face is non-degenerate and all faces share one
    orientation; the signed areas do not exceed the sphere; and no pair of
    nearby faces sharing no vertex overlaps (vertex-in-face or crossing
    edges). Candidate pairs come from a k-d tree over face centroids.

    Returns
    -------
    (bool, str)
        The verdict and, when negative, the first failed test.
    """
    v, f = omega.vertices, omega.faces
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    orient = _triple(a, b, c)
    sign = 1.0 if orient.sum() >= 0 else -1.0
    if (sign * orient <= tol).any():
        i = int(np.flatnonzero(sign * orient <= tol)[0])
        return False, f"face {i} folds over or degenerates on the sphere"
    if kernels.spherical_face_areas(v, f).sum() > 4.0 * np.pi * (1.0 + 1e-9):
        return False, "covering degree exceeds one"

    cen = a + b + c
    cen /= np.linalg.norm(cen, axis=1)[:, None]
    rad = np.max(np.stack([np.linalg.norm(a - cen, axis=1), np.linalg.norm(b - cen, axis=1),
                           np.linalg.norm(c - cen, axis=1)]), axis=0)
    pairs = cKDTree(cen).query_pairs(2.0 * rad.max(), output_type="ndarray")
    if len(pairs):
        d = np.linalg.norm(cen[pairs[:, 0]] - cen[pairs[:, 1]], axis=1)
        pairs = pairs[d <= rad[pairs[:, 0]] + rad[pairs[:, 1]]]
    hit = kernels.first_overlap(v, f, pairs, sign, tol)
    if hit >= 0:
        fa, fb = pairs[hit]
        return False, f"faces {fa} and {fb} overlap on the sphere"
    return True, ""


# -- derivative recovery ----------------------------------------------------------

def tangent_frames(points):
    """Deterministic orthonormal tangent pairs at unit vectors ``points``."""
    helper = np.where((np.abs(points[:, 2]) < 0.9)[:, None], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    e1 = np.cross(helper, points)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(points, e1)
    return np.stack([e1, e2], axis=1)


def log_map(p, q):
    """Geodesic normal coordinates (ambient tangent vectors) of ``q`` seen from ``p``."""
    d = q - np.einsum("ij,ij->i", q, p)[:, None] * p
    s = np.linalg.norm(d, axis=1)
    ang = np.arctan2(s, np.einsum("ij,ij->i", q, p))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s[:, None] > 0, d * (ang / s)[:, None], 0.0)


def fit_field(domain, u):
    """Least-squares quadric fit of ``u`` over each vertex's two-ring.

    In geodesic normal coordinates ``s`` at vertex ``i`` the model is
    ``u_j - u_i = g.s + s^T H s / 2``; weights ``1/|s|^2`` favour the one-ring.
    """
    u = np.asarray(u, dtype=float)
    p = domain.vertices
    n = domain.n_vertices
    adj = domain.adjacency()
    ring2 = ((adj + adj @ adj) > 0).tocsr()
    ring2.setdiag(False)
    ring2.eliminate_zeros()
    ring2.sort_indices()
    rows = np.repeat(np.arange(n), np.diff(ring2.indptr))
    cols = ring2.indices
    frames = tangent_frames(p)
    s_amb = log_map(p[rows], p[cols])
    s1 = np.einsum("ij,ij->i", s_amb, frames[rows, 0])
    s2 = np.einsum("ij,ij->i", s_amb, frames[rows, 1])
    design = np.stack([s1, s2, 0.5 * s1 * s1, s1 * s2, 0.5 * s2 * s2], axis=1)
    w = 1.0 / np.maximum(s1 * s1 + s2 * s2, 1e-300)
    rhs = u[cols] - u[rows]
    ata = np.zeros((n, 5, 5))
    atb = np.zeros((n, 5))
    outer = design[:, :, None] * design[:, None, :] * w[:, None, None]
    np.add.at(ata, rows, outer)
    np.add.at(atb, rows, design * (w * rhs)[:, None])
    # tiny Tikhonov term keeps rank-deficient stencils solvable
    ata += 1e-12 * np.trace(ata, axis1=1, axis2=2)[:, None, None] * np.eye(5)
    sol = np.linalg.solve(ata, atb[:, :, None])[:, :, 0]
    grad = sol[:, :2]
    hess = np.stack([np.stack([sol[:, 2], sol[:, 3]], 1), np.stack([sol[:, 3], sol[:, 4]], 1)], 1)
    return RadialGraphField(domain, u, grad, hess, frames)


# -- areas and quadrature -----------------------------------------------------------

def spherical_area(omega):
    """Sum of spherical triangle areas (vertices must be unit vectors)."""
    if omega.n_faces == 0:
        return 0.0
    return math.fsum(kernels.spherical_face_areas(omega.vertices, omega.faces))


def spherical_vertex_weights(omega):
    """Spherical mixed areas: each face's spherical area split among its
    corners in proportion to the flat mixed-area shares."""
    shares = mixed_area_shares(omega)
    sph = kernels.spherical_face_areas(omega.vertices, omega.faces)
    corner = shares / shares.sum(axis=1)[:, None] * sph[:, None]
    w = np.zeros(omega.n_vertices)
    for i in range(3):
        w += np.bincount(omega.faces[:, i], weights=corner[:, i], minlength=omega.n_vertices)
    return w


@dataclass
class TiltExcess:
    lhs: float
    rhs: float
    residual: float
    rhs_split: float
    pointwise_gap: float


def _check_pair(u_field, sigma_mesh):
    if u_field is None:
        raise PreconditionError("radial projection is not injective; no height field")
    if (u_field.domain.faces.shape != sigma_mesh.faces.shape
            or not np.array_equal(u_field.domain.faces, sigma_mesh.faces)):
        raise PreconditionError("height field and surface mesh have different connectivity")


def tilt_excess(u_field, sigma_mesh):
    """``|Omega| - |Sigma|`` against half the integral of ``|nu - nu_S2|^2``.

    ``rhs_split`` integrates ``1 - <nu, nu_S2>`` instead; the two integrands
    agree pointwise for unit vectors and ``pointwise_gap`` is their largest
    difference.
    """
    _check_pair(u_field, sigma_mesh)
    omega = u_field.domain
    nu = vertex_normals(sigma_mesh)
    p = omega.vertices
    w = spherical_vertex_weights(omega)
    diff = nu - p
    half_sq = 0.5 * np.einsum("ij,ij->i", diff, diff)
    one_minus = 1.0 - np.einsum("ij,ij->i", nu, p)
    lhs = spherical_area(omega) - surface_area(sigma_mesh)
    rhs = math.fsum(w * half_sq)
    return TiltExcess(lhs, rhs, abs(lhs - rhs), math.fsum(w * one_minus),
                      float(np.abs(half_sq - one_minus).max()))


def divergence_identity(u_field, sigma_mesh):
    """``| integral over Omega of <nu, nu_S2> - |Sigma| |``."""
    _check_pair(u_field, sigma_mesh)
    nu = vertex_normals(sigma_mesh)
    flux = math.fsum(spherical_vertex_weights(u_field.domain)
                     * np.einsum("ij,ij->i", nu, u_field.domain.vertices))
    return abs(flux - surface_area(sigma_mesh))


# -- mean curvature of radial graphs ----------------------------------------------

def _unpack(u, grad_u, hess_u):
    u = np.asarray(u, dtype=float)
    g = np.asarray(grad_u, dtype=float)
    h = np.asarray(hess_u, dtype=float)
    if np.any(u >= 1.0):
        raise ValueError("radial graph height requires u < 1")
    return u, g[..., 0], g[..., 1], h[..., 0, 0], h[..., 0, 1], h[..., 1, 1]


def mean_curvature_divergence_form(u, grad_u, hess_u):
    """``H`` from ``(1-u) H = div(grad u / W) + 2 (1-u) / W``,
    ``W = sqrt((1-u)^2 + |grad u|^2)``, with the divergence expanded in
    normal coordinates. ``H`` is the sum of principal curvatures (2 on the
    unit sphere)."""
    u, u1, u2, u11, u12, u22 = _unpack(u, grad_u, hess_u)
    a = 1.0 - u
    g2 = u1 * u1 + u2 * u2
    w2 = a * a + g2
    w = np.sqrt(w2)
    # w2 * tr(H) - g^T H g, regrouped so that no two large terms cancel
    # when |grad u| dominates 1 - u
    div = ((a * a * (u11 + u22) + u22 * u1 * u1 - 2.0 * u12 * u1 * u2 + u11 * u2 * u2 + a * g2)
           / (w2 * w))
    return (div + 2.0 * a / w) / a


def fundamental_forms(u, grad_u, hess_u):
    """First and second fundamental form coefficients ``E, F, G, L, M, N`` of
    the radial graph in normal coordinates."""
    u, u1, u2, u11, u12, u22 = _unpack(u, grad_u, hess_u)
    a = 1.0 - u
    w = np.sqrt(a * a + u1 * u1 + u2 * u2)
    E = u1 * u1 + a * a
    F = u1 * u2
    G = u2 * u2 + a * a
    L = ((a + u11) * a + 2.0 * u1 * u1) / w
    M = (u12 * a + 2.0 * u1 * u2) / w
    N = ((a + u22) * a + 2.0 * u2 * u2) / w
    return E, F, G, L, M, N


def mean_curvature_fundamental_form(u, grad_u, hess_u):
    E, F, G, L, M, N = fundamental_forms(u, grad_u, hess_u)
    # E G - F^2 = (1-u)^2 W^2 exactly; the expanded product cancels badly
    a = 1.0 - np.asarray(u, dtype=float)
    return (E * N - 2.0 * M * F + G * L) / (a * a * (E + G - a * a))


def mean_curvature_radial(u, grad_u, hess_u, check=True):
    """Mean curvature (sum of principal curvatures) of ``X(p) = (1-u(p)) p``.

    Both algebraic forms are evaluated; with ``check`` they must agree to
    1e-12 relative.
    """
    h_div = mean_curvature_divergence_form(u, grad_u, hess_u)
    if check:
        h_ff = mean_curvature_fundamental_form(u, grad_u, hess_u)
        scale = np.maximum(1.0, np.abs(h_div))
        gap = np.max(np.abs(h_div - h_ff) / scale)
        if gap > 1e-12:
            raise ArithmeticError(f"mean curvature forms disagree by {gap:.3e}")
    return h_div


def field_mean_curvature(u_field, band=2):
    """Mean curvature at vertices at least ``band`` edge hops from the
    boundary (the formula degenerates where ``|grad u|`` blows up)."""
    omega = u_field.domain
    keep = ~omega.is_boundary_vertex
    adj = omega.adjacency()
    front = omega.is_boundary_vertex.astype(float)
    for _ in range(band - 1):
        front = np.minimum(front + adj @ front, 1.0)
        keep &= front == 0
    idx = np.flatnonzero(keep)
    if not len(idx):
        return idx, np.zeros(0)
    return idx, mean_curvature_radial(u_field.u[idx], u_field.grad_u[idx], u_field.hess_u[idx],
                                      check=False)


# -- boundary convexity -------------------------------------------------------------

def boundary_geodesic_curvature(omega):
    """Geodesic curvature in S^2 of each boundary loop of ``omega`` at its
    vertices, signed positive when the curve bends toward the complement of
    ``omega`` (convex toward the removed disk).

    Returns an array over vertices with nan off the boundary.
    """
    v = omega.vertices
    out = np.full(omega.n_vertices, np.nan)
    if not omega.boundary_loops:
        return out
    a, b, c = v[omega.faces[:, 0]], v[omega.faces[:, 1]], v[omega.faces[:, 2]]
    sign = 1.0 if _triple(a, b, c).sum() >= 0 else -1.0
    for loop in omega.boundary_loops:
        p = v[loop]
        prev = v[np.roll(loop, 1)]
        nxt = v[np.roll(loop, -1)]
        d_out = nxt - np.einsum("ij,ij->i", nxt, p)[:, None] * p
        d_in = -(prev - np.einsum("ij,ij->i", prev, p)[:, None] * p)
        d_out /= np.linalg.norm(d_out, axis=1)[:, None]
        d_in /= np.linalg.norm(d_in, axis=1)[:, None]
        left_turn = np.arctan2(_triple(p, d_in, d_out), np.einsum("ij,ij->i", d_in, d_out))
        arc_prev = np.arctan2(np.linalg.norm(np.cross(prev, p), axis=1), np.einsum("ij,ij->i", prev, p))
        arc_next = np.arctan2(np.linalg.norm(np.cross(p, nxt), axis=1), np.einsum("ij,ij->i", p, nxt))
        # omega lies left of its boundary when faces are positively oriented
        out[loop] = -sign * left_turn / (0.5 * (arc_prev + arc_next))
    return out


def boundary_convexity(omega):
    """Minimum boundary geodesic curvature toward the complement disks."""
    k = boundary_geodesic_curvature(omega)
    if np.isnan(k).all():
        raise PreconditionError("domain has no boundary")
    return float(np.nanmin(k))


# -- critical catenoid as a radial graph -------------------------------------------

class CatenoidProfile:
    """Exact radial-graph description of the critical catenoid.

    For the parameter ``t`` the surface point has polar cosine
    ``g(t) = t / sqrt(cosh^2 t + t^2)``, increasing on ``[-t0, t0]`` with
    ``g'(t0) = 0``: the boundary circles are exactly where rays graze.
    """

    def __init__(self, params: CatenoidParams):
        self.params = params
        self.phi0 = math.acos(params.cap_cosine)

    @staticmethod
    def _g(t):
        return t / math.sqrt(math.cosh(t) ** 2 + t * t)

    @staticmethod
    def _dg(t):
        ch, sh = math.cosh(t), math.sinh(t)
        return ch * (ch - t * sh) / (ch * ch + t * t) ** 1.5

    def _r(self, t):
        return self.params.c * math.sqrt(math.cosh(t) ** 2 + t * t)

    def _dr(self, t):
        ch, sh = math.cosh(t), math.sinh(t)
        return self.params.c * (ch * sh + t) / math.sqrt(ch * ch + t * t)

    def parameter_of(self, z):
        """Catenoid parameter whose ray has polar cosine ``z``."""
        t0 = self.params.t0
        if abs(z) > self.params.cap_cosine:
            raise ValueError("direction lies outside the radial shadow")
        if abs(z) == self.params.cap_cosine:
            return math.copysign(t0, z)
        return brentq(lambda t: self._g(t) - z, -t0, t0, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                      maxiter=200)

    def u(self, points):
        """``u = 1 - |X|`` at unit directions ``points`` (shape (n, 3))."""
        pts = np.atleast_2d(points)
        return np.array([1.0 - self._r(self.parameter_of(z)) for z in pts[:, 2]])

    def u_polar(self, phi):
        return 1.0 - self._r(self.parameter_of(math.cos(phi)))

    def du_dphi(self, phi):
        """Derivative of ``u`` along increasing polar angle."""
        t = self.parameter_of(math.cos(phi))
        dphi_dt = -self._dg(t) / math.sin(phi)
        return -self._dr(t) / dphi_dt

    def grad_u(self, points):
        """Ambient tangent gradient of ``u`` at unit directions."""
        pts = np.atleast_2d(points)
        out = np.empty_like(pts, dtype=float)
        for i, (x, y, z) in enumerate(pts):
            phi = math.acos(max(-1.0, min(1.0, z)))
            th = math.atan2(y, x)
            e_phi = np.array([math.cos(phi) * math.cos(th), math.cos(phi) * math.sin(th), -math.sin(phi)])
            out[i] = self.du_dphi(phi) * e_phi
        return out

    @property
    def width(self):
        """Largest admissible inset: half the polar extent of the shadow."""
        return 0.5 * math.pi - self.phi0


@dataclass
class BlowupRow:
    eps: float
    flux: float
    two_area_inset: float
    max_grad: float
    gap_to_boundary_length: float


def boundary_blowup_diagnostic(params, epsilons, n_theta=256):
    """Boundary flux of ``grad u / W`` over the inset domains ``Omega_eps``.

    For each ``eps`` the flux ``-int <grad u, nu_eps> / W`` over both
    boundary circles of ``Omega_eps`` is computed by periodic trapezoid
    quadrature in the azimuth, together with ``2 |Omega_eps|`` and
    ``max |grad u|`` (attained on the inset boundary).
    """
    prof = CatenoidProfile(params)
    rows = []
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    for eps in epsilons:
        if not 0.0 < eps < prof.width:
            raise ValueError(f"eps must lie in (0, {prof.width:.6f}), got {eps}")
        flux_terms = []
        gmax = 0.0
        for phi, outward_sign in ((prof.phi0 + eps, -1.0), (math.pi - prof.phi0 - eps, 1.0)):
            sp, cp = math.sin(phi), math.cos(phi)
            pts = np.stack([sp * np.cos(theta), sp * np.sin(theta), np.full(n_theta, cp)], 1)
            e_phi = np.stack([cp * np.cos(theta), cp * np.sin(theta), np.full(n_theta, -sp)], 1)
            nu_eps = outward_sign * e_phi
            grad = prof.grad_u(pts)
            uval = prof.u(pts)
            gn = np.linalg.norm(grad, axis=1)
            w = np.sqrt((1.0 - uval) ** 2 + gn * gn)
            integrand = -np.einsum("ij,ij->i", grad, nu_eps) / w
            flux_terms.append(integrand.sum() * (2.0 * np.pi / n_theta) * sp)
            gmax = max(gmax, float(gn.max()))
        flux = math.fsum(flux_terms)
        two_area = 2.0 * 4.0 * math.pi * math.cos(prof.phi0 + eps)
        rows.append(BlowupRow(eps, flux, two_area, gmax, abs(flux - params.boundary_len)))
    return rows

