"""Backend selection for the hot mesh kernels.

The compiled extension is used when it imports; otherwise the numpy
reference in ``_pykernels`` is used. Set ``FBMSLAB_PURE_PYTHON=1`` to force
the fallback.
"""
import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"

if not os.environ.get("FBMSLAB_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def _prep(vertices, faces):
    return (np.ascontiguousarray(vertices, dtype=np.float64),
            np.ascontiguousarray(faces, dtype=np.int64))


def face_areas(vertices, faces):
    return _impl.face_areas(*_prep(vertices, faces))


def face_quality(vertices, faces):
    return _impl.face_quality(*_prep(vertices, faces))


def total_area(vertices, faces):
    return float(_impl.total_area(*_prep(vertices, faces)))


def area_and_gradient(vertices, faces):
    area, grad = _impl.area_and_gradient(*_prep(vertices, faces))
    return float(area), grad


def spherical_face_areas(vertices, faces):
    return _impl.spherical_face_areas(*_prep(vertices, faces))


def first_overlap(vertices, faces, pairs, sign, tol):
    v, f = _prep(vertices, faces)
    p = np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2)
    return int(_impl.first_overlap(v, f, p, float(sign), float(tol)))
