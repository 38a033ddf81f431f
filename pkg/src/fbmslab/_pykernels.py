"""Reference numpy implementations of the hot mesh kernels.

These are the fallback used when the compiled ``_ckernels`` extension is not
built, and the oracle the extension is tested against.
"""
import math

import numpy as np


def face_areas(vertices, faces):
    a = vertices[faces[:, 0]]
    n = np.cross(vertices[faces[:, 1]] - a, vertices[faces[:, 2]] - a)
    return 0.5 * np.sqrt(np.einsum("ij,ij->i", n, n))


def face_quality(vertices, faces):
    """``4*sqrt(3)*area / sum of squared edge lengths``; 1 for equilateral."""
    p = vertices[faces]
    e = p[:, [1, 2, 0]] - p
    return 2.0 * math.sqrt(3.0) * np.linalg.norm(np.cross(e[:, 0], -e[:, 2]), axis=1) / np.einsum("ijk,ijk->i", e, e)


def total_area(vertices, faces):
    return math.fsum(face_areas(vertices, faces))


def area_and_gradient(vertices, faces):
    """Total area and its gradient with respect to every vertex position.

    For a face (a, b, c) with unit normal n the partial derivative of the face
    area with respect to ``a`` is ``0.5 * n x (c - b)``, and cyclically.
    """
    pa = vertices[faces[:, 0]]
    pb = vertices[faces[:, 1]]
    pc = vertices[faces[:, 2]]
    n = np.cross(pb - pa, pc - pa)
    dbl = np.sqrt(np.einsum("ij,ij->i", n, n))
    unit = n / dbl[:, None]
    grad = np.zeros_like(vertices)
    nv = len(vertices)
    for corner, (p, q) in enumerate(((pb, pc), (pc, pa), (pa, pb))):
        g = 0.5 * np.cross(unit, q - p)
        idx = faces[:, corner]
        for k in range(3):
            grad[:, k] += np.bincount(idx, weights=g[:, k], minlength=nv)
    return math.fsum(0.5 * dbl), grad


def _arc(p, q):
    return np.arctan2(np.linalg.norm(np.cross(p, q), axis=1), np.einsum("ij,ij->i", p, q))


def spherical_face_areas(vertices, faces):
    """Areas of the spherical triangles spanned by unit vectors (L'Huilier)."""
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    la, lb, lc = _arc(b, c), _arc(c, a), _arc(a, b)
    s = 0.5 * (la + lb + lc)
    prod = (np.tan(0.5 * s) * np.tan(0.5 * (s - la)) * np.tan(0.5 * (s - lb))
            * np.tan(0.5 * (s - lc)))
    return 4.0 * np.arctan(np.sqrt(np.clip(prod, 0.0, None)))


def _edge_normals(vertices, faces):
    """``p_k x p_{k+1}`` for the three edges of every face, shape (F, 3, 3)."""
    p = vertices[faces]
    return np.cross(p, p[:, [1, 2, 0]])


def _inside(q, normals, corner_sum, sign, tol):
    """Strict containment of unit vectors ``q`` in spherical triangles given
    by their edge normals."""
    side = sign * np.einsum("pj,pkj->pk", q, normals)
    return (np.einsum("ij,ij->i", q, corner_sum) > 0) & (side > tol).all(axis=1)


def first_overlap(vertices, faces, pairs, sign, tol):
    """Index of the first candidate face pair whose spherical triangles overlap,
    or -1.

    Faces sharing a vertex are compared by centroid containment only; other
    pairs also by strict vertex containment and strict arc crossings.
    """
    if len(pairs) == 0:
        return -1
    v = vertices
    normals = _edge_normals(v, faces)
    corner_sum = v[faces].sum(axis=1)
    centroid = corner_sum / np.linalg.norm(corner_sum, axis=1)[:, None]
    i, j = pairs[:, 0], pairs[:, 1]
    F, G = faces[i], faces[j]
    nf, ng = normals[i], normals[j]
    sf, sg = corner_sum[i], corner_sum[j]
    hit = _inside(centroid[i], ng, sg, sign, tol) | _inside(centroid[j], nf, sf, sign, tol)
    disjoint = ~(F[:, :, None] == G[:, None, :]).any(axis=(1, 2))
    for k in range(3):
        hit |= disjoint & _inside(v[G[:, k]], nf, sf, sign, tol)
        hit |= disjoint & _inside(v[F[:, k]], ng, sg, sign, tol)
    # signed distances of each edge's endpoints from the other face's edge planes
    f_pts, g_pts = v[F], v[G]
    g_vs_f = np.einsum("pij,pkj->pik", nf, g_pts)   # [pair, f-edge, g-vertex]
    f_vs_g = np.einsum("pij,pkj->pik", ng, f_pts)   # [pair, g-edge, f-vertex]
    f_mid = f_pts + f_pts[:, [1, 2, 0]]
    g_mid = g_pts + g_pts[:, [1, 2, 0]]
    same_side = np.einsum("pij,pkj->pik", f_mid, g_mid) > 0   # [pair, f-edge, g-edge]
    nxt = [1, 2, 0]
    s1 = g_vs_f * g_vs_f[:, :, nxt]                    # [pair, f-edge, g-edge]
    s2 = (f_vs_g * f_vs_g[:, :, nxt]).transpose(0, 2, 1)  # [pair, f-edge, g-edge]
    cross = (s1 < -tol * tol) & (s2 < -tol * tol) & same_side
    hit |= disjoint & cross.any(axis=(1, 2))
    idx = np.flatnonzero(hit)
    return int(idx[0]) if len(idx) else -1
