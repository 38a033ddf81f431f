"""Constrained area descent toward free boundary minimal surfaces.

Interior vertices move along the full area gradient; boundary vertices move
along its component tangent to the unit sphere and are projected back onto
the sphere after every step. Criticality of area under this constraint is
the discrete form of zero mean curvature plus orthogonal contact with the
sphere.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import MeshDegenerationError, PreconditionError
from .mesh import vertex_normals

logger = logging.getLogger(__name__)

STEP_SCALE = 0.02


@dataclass
class SolverConfig:
    """Stopping rule and step policy for :func:`solve`.

    ``initial_step`` is also the largest step ever tried. When it is None it
    is set to ``STEP_SCALE`` times the shortest squared edge length, which
    keeps the explicit, curvature-flow-like iteration inside its stability
    range on any mesh. After a backtrack the step grows by ``step_growth``
    per iteration until it is back at the cap.
    """

    max_iters: int = 5000
    grad_tol: float = 1e-8
    initial_step: float | None = None
    backtrack: float = 0.5
    armijo: float = 1e-4
    step_growth: float = 2.0
    min_step: float = 1e-14
    remesh_every: int | None = None
    quality_floor: float = 1e-3
    boundary_tol: float = 1e-9

    def __post_init__(self):
        for name in ("grad_tol", "armijo", "min_step", "quality_floor", "boundary_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive or None")
        if self.step_growth < 1.0:
            raise ValueError("step_growth must be at least 1")
        if self.remesh_every is not None and self.remesh_every < 1:
            raise ValueError("remesh_every must be a positive integer or None")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


@dataclass
class SolveTrace:
    area: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    min_quality: list = field(default_factory=list)
    step: list = field(default_factory=list)
    reason: str = ""

    @property
    def converged(self):
        return self.reason == "converged"

    @property
    def iterations(self):
        return max(len(self.area) - 1, 0)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "area", "grad_norm", "min_quality"])
            for i, row in enumerate(zip(self.area, self.grad_norm, self.min_quality)):
                w.writerow([i, *(repr(float(x)) for x in row)])


def vertex_areas(vertices, faces):
    """Barycentric vertex areas (a third of each incident face)."""
    fa = kernels.face_areas(vertices, faces) / 3.0
    out = np.zeros(len(vertices))
    for i in range(3):
        out += np.bincount(faces[:, i], weights=fa, minlength=len(vertices))
    return out


def constrained_gradient(vertices, faces, boundary):
    """Area and its gradient with boundary rows projected tangent to S^2."""
    area, g = kernels.area_and_gradient(vertices, faces)
    if len(boundary):
        p = vertices[boundary]
        g[boundary] -= np.einsum("ij,ij->i", g[boundary], p)[:, None] * p
    return area, g


def normalized_gradient_norm(mesh):
    """Sup-norm of the constrained area gradient divided by vertex area."""
    v = mesh.vertices
    _, g = constrained_gradient(v, mesh.faces, mesh.boundary_vertices)
    return float(np.max(np.linalg.norm(g, axis=1) / vertex_areas(v, mesh.faces)))


def default_step(vertices, faces):
    """``STEP_SCALE`` times the shortest squared edge length."""
    p = vertices[faces]
    e = p[:, [1, 2, 0]] - p
    return STEP_SCALE * float(np.einsum("ijk,ijk->ij", e, e).min())


def _project_boundary(v, boundary):
    if len(boundary):
        v[boundary] /= np.linalg.norm(v[boundary], axis=1)[:, None]
    return v


def _tangential_smoothing(mesh, v, weight=0.5):
    """Move interior vertices toward their neighbour average, tangentially."""
    m = mesh.with_vertices(v)
    adj = mesh.adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    delta = adj @ v / deg[:, None] - v
    n = vertex_normals(m)
    delta -= np.einsum("ij,ij->i", delta, n)[:, None] * n
    delta[mesh.is_boundary_vertex] = 0.0
    return v + weight * delta


def solve(initial, cfg=None):
    """Relax ``initial`` toward a discrete free boundary minimal surface.

    The descent direction is the constrained gradient divided by the vertex
    areas; steps are chosen by Armijo backtracking, so the recorded area
    sequence never increases.

    Returns
    -------
    (TriangleMesh, SolveTrace)
        A trace whose ``reason`` is ``"converged"`` when the normalized
        gradient sup-norm reached ``grad_tol``; ``"max_iters"`` or
        ``"line_search"`` otherwise.

    Raises
    ------
    PreconditionError
        A boundary vertex is off the unit sphere by more than
        ``cfg.boundary_tol``.
    MeshDegenerationError
        Minimum triangle quality dropped below ``cfg.quality_floor``.
    """
    cfg = cfg or SolverConfig()
    faces = initial.faces
    bnd = initial.boundary_vertices
    v = np.array(initial.vertices)
    if len(bnd):
        off = np.abs(np.linalg.norm(v[bnd], axis=1) - 1.0)
        if off.max() > cfg.boundary_tol:
            raise PreconditionError(f"boundary vertex {bnd[np.argmax(off)]} is {off.max():.2e} off the sphere")
        v = _project_boundary(v, bnd)

    trace = SolveTrace()
    max_step = cfg.initial_step or default_step(v, faces)
    step = max_step
    area, g = constrained_gradient(v, faces, bnd)
    for it in range(cfg.max_iters + 1):
        varea = vertex_areas(v, faces)
        gnorm = float(np.max(np.linalg.norm(g, axis=1) / varea))
        quality = float(kernels.face_quality(v, faces).min())
        trace.area.append(area)
        trace.grad_norm.append(gnorm)
        trace.min_quality.append(quality)
        trace.step.append(step)
        if quality < cfg.quality_floor:
            raise MeshDegenerationError(
                f"triangle quality {quality:.2e} below floor {cfg.quality_floor:.2e} at iteration {it}; "
                "remesh the input or enable remesh_every")
        if gnorm <= cfg.grad_tol:
            trace.reason = "converged"
            break
        if it == cfg.max_iters:
            trace.reason = "max_iters"
            break

        d = -g / varea[:, None]
        slope = float(np.einsum("ij,ij->", g, d))
        step = min(step * cfg.step_growth, max_step)
        while True:
            trial = _project_boundary(v + step * d, bnd)
            trial_area = kernels.total_area(trial, faces)
            if trial_area <= area + cfg.armijo * step * slope:
                break
            step *= cfg.backtrack
            if step < cfg.min_step:
                trial = None
                break
        if trial is None:
            trace.reason = "line_search"
            break
        if cfg.remesh_every and (it + 1) % cfg.remesh_every == 0:
            smoothed = _project_boundary(_tangential_smoothing(initial, trial), bnd)
            if kernels.total_area(smoothed, faces) <= trial_area:
                trial = smoothed
        v = trial
        area, g = constrained_gradient(v, faces, bnd)

    logger.info("solve finished after %d iterations: %s (area %.10g, grad %.3e)",
                trace.iterations, trace.reason, trace.area[-1], trace.grad_norm[-1])
    return initial.with_vertices(v), trace


def free_boundary_residual(mesh):
    """Max over boundary vertices of ``|<nu, p>|``; zero when the surface
    meets the sphere orthogonally."""
    b = mesh.boundary_vertices
    if not len(b):
        raise PreconditionError("mesh has no boundary")
    nu = vertex_normals(mesh)
    p = mesh.vertices[b]
    return float(np.max(np.abs(np.einsum("ij,ij->i", nu[b], p / np.linalg.norm(p, axis=1)[:, None]))))
