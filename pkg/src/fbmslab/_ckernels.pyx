# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Same signatures and semantics. Reductions run in face-index order with
Neumaier compensation so results are reproducible.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport atan, atan2, sqrt, tan

cnp.import_array()


cdef inline void _cross(double ax, double ay, double az,
                        double bx, double by, double bz,
                        double *out) noexcept nogil:
    out[0] = ay * bz - az * by
    out[1] = az * bx - ax * bz
    out[2] = ax * by - ay * bx


cdef inline void _neumaier(double *acc, double *comp, double x) noexcept nogil:
    cdef double t = acc[0] + x
    if abs(acc[0]) >= abs(x):
        comp[0] += (acc[0] - t) + x
    else:
        comp[0] += (x - t) + acc[0]
    acc[0] = t


def face_areas(const double[:, ::1] vertices, const long[:, ::1] faces):
    cdef Py_ssize_t nf = faces.shape[0], f
    cdef long a, b, c
    cdef double n[3]
    out = np.empty(nf, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for f in range(nf):
            a = faces[f, 0]
            b = faces[f, 1]
            c = faces[f, 2]
            _cross(vertices[b, 0] - vertices[a, 0], vertices[b, 1] - vertices[a, 1],
                   vertices[b, 2] - vertices[a, 2],
                   vertices[c, 0] - vertices[a, 0], vertices[c, 1] - vertices[a, 1],
                   vertices[c, 2] - vertices[a, 2], n)
            res[f] = 0.5 * sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
    return out


def total_area(const double[:, ::1] vertices, const long[:, ::1] faces):
    cdef const double[::1] areas = face_areas(vertices, faces)
    cdef double acc = 0.0, comp = 0.0
    cdef Py_ssize_t f
    for f in range(areas.shape[0]):
        _neumaier(&acc, &comp, areas[f])
    return acc + comp


def area_and_gradient(const double[:, ::1] vertices, const long[:, ::1] faces):
    cdef Py_ssize_t nf = faces.shape[0], f
    cdef int corner, k
    cdef long idx[3]
    cdef double n[3]
    cdef double g[3]
    cdef double dbl, acc = 0.0, comp = 0.0
    cdef long p, q
    out = np.zeros((vertices.shape[0], 3), dtype=np.float64)
    cdef double[:, ::1] grad = out
    with nogil:
        for f in range(nf):
            idx[0] = faces[f, 0]
            idx[1] = faces[f, 1]
            idx[2] = faces[f, 2]
            _cross(vertices[idx[1], 0] - vertices[idx[0], 0],
                   vertices[idx[1], 1] - vertices[idx[0], 1],
                   vertices[idx[1], 2] - vertices[idx[0], 2],
                   vertices[idx[2], 0] - vertices[idx[0], 0],
                   vertices[idx[2], 1] - vertices[idx[0], 1],
                   vertices[idx[2], 2] - vertices[idx[0], 2], n)
            dbl = sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
            _neumaier(&acc, &comp, 0.5 * dbl)
            n[0] /= dbl
            n[1] /= dbl
            n[2] /= dbl
            for corner in range(3):
                p = idx[(corner + 1) % 3]
                q = idx[(corner + 2) % 3]
                _cross(n[0], n[1], n[2],
                       vertices[q, 0] - vertices[p, 0],
                       vertices[q, 1] - vertices[p, 1],
                       vertices[q, 2] - vertices[p, 2], g)
                for k in range(3):
                    grad[idx[corner], k] += 0.5 * g[k]
    return acc + comp, out


cdef inline double _arc(const double[:, ::1] v, long i, long j) noexcept nogil:
    cdef double c[3]
    _cross(v[i, 0], v[i, 1], v[i, 2], v[j, 0], v[j, 1], v[j, 2], c)
    return atan2(sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]),
                 v[i, 0] * v[j, 0] + v[i, 1] * v[j, 1] + v[i, 2] * v[j, 2])


def spherical_face_areas(const double[:, ::1] vertices, const long[:, ::1] faces):
    cdef Py_ssize_t nf = faces.shape[0], f
    cdef long a, b, c
    cdef double la, lb, lc, s, prod
    out = np.empty(nf, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for f in range(nf):
            a = faces[f, 0]
            b = faces[f, 1]
            c = faces[f, 2]
            la = _arc(vertices, b, c)
            lb = _arc(vertices, c, a)
            lc = _arc(vertices, a, b)
            s = 0.5 * (la + lb + lc)
            prod = tan(0.5 * s) * tan(0.5 * (s - la)) * tan(0.5 * (s - lb)) * tan(0.5 * (s - lc))
            if prod < 0.0:
                prod = 0.0
            res[f] = 4.0 * atan(sqrt(prod))
    return out


cdef inline double _triple3(const double *q, const double *a, const double *b) noexcept nogil:
    return (q[0] * (a[1] * b[2] - a[2] * b[1]) + q[1] * (a[2] * b[0] - a[0] * b[2])
            + q[2] * (a[0] * b[1] - a[1] * b[0]))


cdef inline bint _inside3(const double *q, const double *a, const double *b, const double *c,
                          double sign, double tol) noexcept nogil:
    cdef double front = (q[0] * (a[0] + b[0] + c[0]) + q[1] * (a[1] + b[1] + c[1])
                         + q[2] * (a[2] + b[2] + c[2]))
    return (front > 0 and sign * _triple3(q, a, b) > tol and sign * _triple3(q, b, c) > tol
            and sign * _triple3(q, c, a) > tol)


cdef inline bint _arcs_cross(const double *p0, const double *p1, const double *q0,
                             const double *q1, double tol) noexcept nogil:
    cdef double s1 = _triple3(q0, p0, p1) * _triple3(q1, p0, p1)
    cdef double s2 = _triple3(p0, q0, q1) * _triple3(p1, q0, q1)
    cdef double side = ((p0[0] + p1[0]) * (q0[0] + q1[0]) + (p0[1] + p1[1]) * (q0[1] + q1[1])
                        + (p0[2] + p1[2]) * (q0[2] + q1[2]))
    return s1 < -tol * tol and s2 < -tol * tol and side > 0


cdef inline void _centroid(const double *a, const double *b, const double *c, double *out) noexcept nogil:
    cdef int k
    cdef double nrm
    for k in range(3):
        out[k] = a[k] + b[k] + c[k]
    nrm = sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2])
    for k in range(3):
        out[k] /= nrm


def first_overlap(const double[:, ::1] vertices, const long[:, ::1] faces,
                  const long[:, ::1] pairs, double sign, double tol):
    cdef Py_ssize_t np_ = pairs.shape[0], t
    cdef int i, j
    cdef long fi[3]
    cdef long gi[3]
    cdef const double *fp[3]
    cdef const double *gp[3]
    cdef double cf[3]
    cdef double cg[3]
    cdef bint disjoint
    cdef Py_ssize_t result = -1
    with nogil:
        for t in range(np_):
            for i in range(3):
                fi[i] = faces[pairs[t, 0], i]
                gi[i] = faces[pairs[t, 1], i]
                fp[i] = &vertices[fi[i], 0]
                gp[i] = &vertices[gi[i], 0]
            _centroid(fp[0], fp[1], fp[2], cf)
            _centroid(gp[0], gp[1], gp[2], cg)
            if _inside3(cf, gp[0], gp[1], gp[2], sign, tol) or _inside3(cg, fp[0], fp[1], fp[2], sign, tol):
                result = t
                break
            disjoint = True
            for i in range(3):
                for j in range(3):
                    if fi[i] == gi[j]:
                        disjoint = False
            if not disjoint:
                continue
            for i in range(3):
                if (_inside3(gp[i], fp[0], fp[1], fp[2], sign, tol)
                        or _inside3(fp[i], gp[0], gp[1], gp[2], sign, tol)):
                    result = t
                    break
                for j in range(3):
                    if _arcs_cross(fp[i], fp[(i + 1) % 3], gp[j], gp[(j + 1) % 3], tol):
                        result = t
                        break
                if result >= 0:
                    break
            if result >= 0:
                break
    return result


def face_quality(const double[:, ::1] vertices, const long[:, ::1] faces):
    cdef Py_ssize_t nf = faces.shape[0], f
    cdef long a, b, c
    cdef double n[3]
    cdef double e0, e1, e2, s
    cdef double k = 2.0 * sqrt(3.0)
    cdef int d
    out = np.empty(nf, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for f in range(nf):
            a = faces[f, 0]
            b = faces[f, 1]
            c = faces[f, 2]
            _cross(vertices[b, 0] - vertices[a, 0], vertices[b, 1] - vertices[a, 1],
                   vertices[b, 2] - vertices[a, 2],
                   vertices[c, 0] - vertices[a, 0], vertices[c, 1] - vertices[a, 1],
                   vertices[c, 2] - vertices[a, 2], n)
            s = 0.0
            for d in range(3):
                e0 = vertices[b, d] - vertices[a, d]
                e1 = vertices[c, d] - vertices[b, d]
                e2 = vertices[a, d] - vertices[c, d]
                s += e0 * e0 + e1 * e1 + e2 * e2
            res[f] = k * sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) / s
    return out
