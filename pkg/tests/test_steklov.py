import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from fbmslab.errors import PreconditionError
from fbmslab.generators import generate_catenoid, generate_disk, icosphere
from fbmslab.mesh import TriangleMesh, transformed
from fbmslab.report import verify_mesh
from fbmslab.steklov import (KOKAREV_BOUND, conjecture_checks, coordinate_rayleigh_quotients,
                             steklov_matrices, steklov_spectrum)

from _oracles import boundary_mass_dense, p1_stiffness_dense


def oracle_spectrum(mesh, k):
    """Shift-invert Lanczos on the full (singular-mass) pencil, built from
    an element-by-element stiffness assembly."""
    K = p1_stiffness_dense(mesh.vertices, mesh.faces)
    b = boundary_mass_dense(mesh.vertices, mesh.boundary_edges)
    vals = eigsh(K, k=k, M=np.diag(b), sigma=-0.1, which="LM",
                 v0=np.ones(len(b)), return_eigenvectors=False)
    return np.sort(vals)


@pytest.fixture(scope="module")
def catenoid_spectrum(catenoid_fine):
    return steklov_spectrum(catenoid_fine, 8)


class TestAgainstOracle:
    @pytest.mark.parametrize("make", [lambda: generate_disk(6, levels=2),
                                      lambda: generate_catenoid(8, 16)])
    def test_eigenvalues(self, make):
        m = make()
        got = steklov_spectrum(m, 6).eigenvalues
        assert np.abs(got - oracle_spectrum(m, 6)).max() < 1e-8

    def test_stiffness_matches_element_assembly(self):
        m = generate_catenoid(6, 10)
        S, b = steklov_matrices(m)
        assert np.abs(S.toarray() - p1_stiffness_dense(m.vertices, m.faces)).max() < 1e-12
        assert np.array_equal(b, boundary_mass_dense(m.vertices, m.boundary_edges))


class TestDisk:
    def test_classical_spectrum(self, disk4):
        sig = steklov_spectrum(disk4, 7).eigenvalues
        assert abs(sig[0]) < 1e-8
        assert sig[1:] == pytest.approx([1, 1, 2, 2, 3, 3], rel=1e-2)

    def test_kokarev_product_tends_to_two_pi(self):
        prods = [steklov_spectrum(d, 2).sigma1 * steklov_spectrum(d, 2).boundary_length
                 for d in (generate_disk(6, levels=k) for k in (2, 3, 4))]
        gaps = [abs(p - 2 * math.pi) for p in prods]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-2 * 2 * math.pi

    def test_conjecture_checks(self, disk4):
        res = steklov_spectrum(disk4, 3)
        chk = conjecture_checks(res, verify_mesh(disk4))
        assert chk.kokarev_holds and chk.kokarev_margin > 10
        assert chk.sigma1_times_length == pytest.approx(2 * math.pi, rel=1e-2)


class TestCatenoid:
    def test_first_eigenvalue_is_one(self, catenoid_spectrum):
        assert catenoid_spectrum.sigma1 == pytest.approx(1.0, abs=3e-2)

    def test_constant_mode_is_simple(self, catenoid_spectrum):
        sig = catenoid_spectrum.eigenvalues
        assert abs(sig[0]) < 1e-8 and sig[1] > 0.5
        tr0 = catenoid_spectrum.traces[:, 0]
        assert np.ptp(tr0) < 1e-8 * np.abs(tr0).max()

    def test_conjecture_checks(self, catenoid_fine, catenoid_spectrum):
        chk = conjecture_checks(catenoid_spectrum, verify_mesh(catenoid_fine))
        assert chk.sigma1_times_length == pytest.approx(10.47, abs=0.05)
        assert chk.sigma1_times_length < KOKAREV_BOUND
        assert chk.kokarev_margin > 10
        assert chk.two_sigma1_area < KOKAREV_BOUND
        assert abs(chk.sigma1_minus_one) < 3e-2

    def test_coordinates_are_near_eigenfunctions(self, catenoid_fine):
        rq = coordinate_rayleigh_quotients(catenoid_fine)
        assert rq == pytest.approx([1, 1, 1], abs=5e-2)

    def test_disk_has_no_z_quotient(self, disk4):
        rq = coordinate_rayleigh_quotients(disk4)
        assert np.isnan(rq[2]) and rq[:2] == pytest.approx([1, 1], abs=5e-2)


class TestInvariance:
    def test_rigid_motion(self):
        m = generate_catenoid(12, 24)
        q, _ = np.linalg.qr(np.random.default_rng(5).standard_normal((3, 3)))
        a = steklov_spectrum(m, 6).eigenvalues
        b = steklov_spectrum(transformed(m, rotation=q, translation=[0.3, -0.2, 0.1]), 6).eigenvalues
        assert np.abs(a - b).max() < 1e-10

    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_dilation(self, t):
        m = generate_catenoid(12, 24)
        a = steklov_spectrum(m, 6).eigenvalues
        b = steklov_spectrum(transformed(m, scale=t), 6).eigenvalues
        assert np.abs(b - a / t).max() < 1e-10


class TestErrors:
    def test_no_boundary(self):
        with pytest.raises(PreconditionError, match="boundary"):
            steklov_spectrum(icosphere(1), 4)

    def test_disconnected(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 0, 0], [6, 0, 0], [5, 1, 0]]
        with pytest.raises(PreconditionError, match="connected"):
            steklov_spectrum(TriangleMesh(v, [[0, 1, 2], [3, 4, 5]]), 2)

    def test_k_positive(self, disk4):
        with pytest.raises(ValueError):
            steklov_spectrum(disk4, 0)

    def test_k_truncated_to_boundary_size(self):
        d = generate_disk(6)
        assert len(steklov_spectrum(d, 50).eigenvalues) == 6

    def test_mismatched_report(self, disk4):
        res = steklov_spectrum(disk4, 3)
        with pytest.raises(PreconditionError, match="different mesh"):
            conjecture_checks(res, verify_mesh(generate_disk(6, levels=3)))

    def test_single_eigenvalue_rejected(self, disk4):
        res = steklov_spectrum(disk4, 1)
        with pytest.raises(PreconditionError):
            conjecture_checks(res, verify_mesh(disk4))
