"""Discrete Steklov (Dirichlet-to-Neumann) spectrum of a surface mesh.

Piecewise-linear elements: the stiffness form is the cotangent Dirichlet
energy and the mass form is the boundary length lumped onto boundary
vertices. Interior unknowns are eliminated exactly by a Schur complement,
leaving a small dense symmetric pencil on the boundary vertices.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import splu

from .errors import NumericalError, PreconditionError
from .mesh import boundary_length, cotangent_laplacian

KOKAREV_BOUND = 8.0 * math.pi


def mesh_fingerprint(mesh):
    """Short hash of vertex count, face count and face indices."""
    h = hashlib.sha256()
    h.update(np.asarray([mesh.n_vertices, mesh.n_faces], dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(mesh.faces, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


@dataclass
class SpectralResult:
    """Lowest Steklov eigenvalues and their boundary traces.

    ``traces[:, j]`` holds the values of the j-th eigenfunction on
    ``boundary_vertices``, normalized to unit boundary mass.
    """

    eigenvalues: np.ndarray
    k: int
    traces: np.ndarray
    boundary_vertices: np.ndarray
    boundary_length: float
    fingerprint: str

    @property
    def sigma1(self):
        return float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else math.nan


def steklov_matrices(mesh):
    """Stiffness ``S`` (sparse, positive semidefinite) and the lumped
    boundary mass diagonal ``b`` (zero on interior vertices)."""
    S = (-cotangent_laplacian(mesh)).tocsr()
    v = mesh.vertices
    b = np.zeros(mesh.n_vertices)
    for i, j in mesh.boundary_edges:
        half = 0.5 * float(np.linalg.norm(v[j] - v[i]))
        b[i] += half
        b[j] += half
    return S, b


def dirichlet_to_neumann(mesh):
    """Dense Schur complement of ``S`` onto the boundary vertices.

    Returns ``(D, bnd)`` with ``D = S_bb - S_bi S_ii^{-1} S_ib``.
    """
    S, _ = steklov_matrices(mesh)
    bnd = mesh.boundary_vertices
    inner = np.flatnonzero(~mesh.is_boundary_vertex)
    D = S[bnd][:, bnd].toarray()
    if len(inner):
        S_ii = S[inner][:, inner].tocsc()
        S_ib = S[inner][:, bnd].toarray()
        try:
            D -= S_ib.T @ splu(S_ii).solve(S_ib)
        except RuntimeError as exc:
            raise NumericalError(f"interior stiffness factorization failed: {exc}") from exc
    return 0.5 * (D + D.T), bnd


def steklov_spectrum(mesh, k=8):
    """The ``k`` smallest Steklov eigenvalues of ``mesh``.

    Raises
    ------
    PreconditionError
        The mesh has no boundary or is disconnected.
    NumericalError
        The eigenpairs fail the residual check.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not len(mesh.boundary_vertices):
        raise PreconditionError("Steklov problem needs a mesh with boundary")
    if not mesh.is_connected():
        raise PreconditionError("Steklov problem needs a connected mesh")
    _, b = steklov_matrices(mesh)
    D, bnd = dirichlet_to_neumann(mesh)
    Bd = b[bnd]
    k = min(k, len(bnd))
    sig, vec = scipy.linalg.eigh(D, np.diag(Bd), subset_by_index=[0, k - 1])
    resid = np.linalg.norm(D @ vec - (Bd[:, None] * vec) * sig, axis=0)
    scale = np.linalg.norm(D, 2) + 1.0
    if not np.all(resid <= 1e-8 * scale):
        raise NumericalError(f"eigenpair residuals too large: {resid.max():.3e}")
    # the constant mode may come out as a tiny negative number
    sig = np.where(np.abs(sig) < 1e-12 * scale, 0.0, sig)
    return SpectralResult(sig, k, vec, bnd, boundary_length(mesh), mesh_fingerprint(mesh))


def rayleigh_quotient(mesh, f):
    """``f^T S f / f^T B f`` for a vertex function ``f``."""
    S, b = steklov_matrices(mesh)
    f = np.asarray(f, dtype=float)
    den = float(f @ (b * f))
    if den <= 0:
        raise ValueError("function vanishes on the boundary")
    return float(f @ (S @ f)) / den


def coordinate_rayleigh_quotients(mesh):
    """Rayleigh quotients of x, y and z. All three equal 1 on a smooth
    free boundary minimal surface in the unit ball. A coordinate that
    vanishes on the boundary gets nan."""
    S, b = steklov_matrices(mesh)
    out = np.full(3, np.nan)
    for i in range(3):
        f = mesh.vertices[:, i]
        den = float(f @ (b * f))
        if den > 1e-12 * float(b.sum()):
            out[i] = float(f @ (S @ f)) / den
    return out


@dataclass(frozen=True)
class ConjectureChecks:
    """Spectral evidence for a candidate free boundary minimal surface.

    ``sigma1_minus_one`` is an observation; a nonzero value is reported,
    never treated as a failure.
    """

    sigma1: float
    sigma1_times_length: float
    kokarev_margin: float
    kokarev_holds: bool
    sigma1_minus_one: float
    two_sigma1_area: float
    chained_margin: float

    def as_dict(self):
        return dict(self.__dict__)


def conjecture_checks(result, report):
    """Compare the spectrum against ``8*pi`` and against ``sigma_1 = 1``.

    ``report`` is the geometry report of the mesh the spectrum was computed
    on; it supplies the surface area and the mesh fingerprint.
    """
    if report.fingerprint != result.fingerprint:
        raise PreconditionError("spectrum was computed on a different mesh")
    if len(result.eigenvalues) < 2:
        raise PreconditionError("need at least two eigenvalues")
    s1 = result.sigma1
    if not s1 > 0:
        raise PreconditionError("sigma_1 is zero; the mesh or its boundary is degenerate")
    prod = s1 * result.boundary_length
    chained = 2.0 * s1 * report.surface_area
    return ConjectureChecks(
        sigma1=s1,
        sigma1_times_length=prod,
        kokarev_margin=KOKAREV_BOUND - prod,
        kokarev_holds=prod < KOKAREV_BOUND,
        sigma1_minus_one=s1 - 1.0,
        two_sigma1_area=chained,
        chained_margin=KOKAREV_BOUND - chained,
    )
