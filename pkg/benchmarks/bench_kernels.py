"""Compare the compiled and numpy kernel backends.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
timed on catenoid meshes of increasing size with both backends, the outputs
are cross-checked, and a short solver run is timed end to end with each
backend swapped in.
"""
import argparse
import timeit

import numpy as np

from fbmslab import _pykernels, kernels
from fbmslab.generators import generate_catenoid, perturb_interior
from fbmslab.radial import radial_project
from fbmslab.solver import SolverConfig, solve

try:
    from fbmslab import _ckernels
except ImportError:
    _ckernels = None

SIZES = [(16, 32), (32, 64), (64, 128), (128, 256)]
KERNELS = ["face_areas", "face_quality", "total_area", "area_and_gradient", "spherical_face_areas"]


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(repeat):
    print(f"{'kernel':22s} {'faces':>7s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for n_t, n_theta in SIZES:
        m = generate_catenoid(n_t, n_theta)
        v = np.ascontiguousarray(m.vertices)
        f = np.ascontiguousarray(m.faces, dtype=np.int64)
        omega = np.ascontiguousarray(radial_project(m).omega.vertices)
        for name in KERNELS:
            verts = omega if name == "spherical_face_areas" else v
            py = getattr(_pykernels, name)
            t_py = best_time(lambda: py(verts, f), repeat)
            row = f"{name:22s} {len(f):7d} {t_py * 1e3:10.3f}"
            if _ckernels is not None:
                cy = getattr(_ckernels, name)
                a, b = py(verts, f), cy(verts, f)
                if isinstance(a, tuple):
                    a, b = np.concatenate([[a[0]], a[1].ravel()]), np.concatenate([[b[0]], b[1].ravel()])
                assert np.allclose(a, b, rtol=1e-12, atol=1e-14), name
                t_cy = best_time(lambda: cy(verts, f), repeat)
                row += f" {t_cy * 1e3:10.3f} {t_py / t_cy:8.1f}"
            print(row)


def bench_solver(iters):
    noisy = perturb_interior(generate_catenoid(32, 64), 0.01, seed=0)
    cfg = SolverConfig(max_iters=iters)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    saved = kernels._impl
    try:
        for label, impl in backends:
            kernels._impl = impl
            t = best_time(lambda: solve(noisy, cfg), 1)
            print(f"solve {iters} iterations at (32,64) with {label}: {t:.2f} s")
    finally:
        kernels._impl = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--solver-iters", type=int, default=300)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    if _ckernels is None:
        print("compiled extension not built; timing the numpy backend only")
    bench_kernels(args.repeat)
    bench_solver(args.solver_iters)


if __name__ == "__main__":
    main()
