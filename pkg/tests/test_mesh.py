import math

import numpy as np
import pytest

from fbmslab.errors import DegenerateNormalError, DisconnectedMeshError, MeshValidityError
from fbmslab.generators import generate_catenoid, generate_disk, icosphere
from fbmslab.mesh import (TriangleMesh, boundary_length, discrete_curvatures, euler_characteristic,
                          gauss_bonnet_residual, read_obj, surface_area, triangle_quality,
                          vertex_normals, write_obj)

from _oracles import AREA_SIGMA, BOUNDARY_LEN

RIGHT = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


class TestValidity:
    def test_out_of_range_index_names_face(self):
        with pytest.raises(MeshValidityError, match="face 1"):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])

    def test_repeated_index(self):
        with pytest.raises(MeshValidityError, match="repeats"):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])

    def test_inconsistent_orientation(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]
        with pytest.raises(MeshValidityError, match="directed edge"):
            TriangleMesh(v, [[0, 1, 2], [1, 2, 3]])

    def test_non_manifold_edge(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]]
        with pytest.raises(MeshValidityError):
            TriangleMesh(v, [[0, 1, 2], [1, 0, 3], [0, 1, 4]])

    def test_bowtie_vertex(self):
        v = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [-1, 0, 0], [-1, -1, 0]]
        with pytest.raises(MeshValidityError, match="star of vertex 0"):
            TriangleMesh(v, [[0, 1, 2], [0, 3, 4]])

    def test_unreferenced_vertex(self):
        with pytest.raises(MeshValidityError, match="vertex 3"):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]], [[0, 1, 2]])

    def test_sliver_rejected(self):
        with pytest.raises(MeshValidityError, match="degenerate"):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0.5, 1e-8, 0]], [[0, 1, 2]])

    def test_zero_area_rejected(self):
        with pytest.raises(MeshValidityError, match="face 0"):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])

    def test_arrays_are_read_only(self):
        with pytest.raises(ValueError):
            RIGHT.vertices[0, 0] = 3.0


class TestMeasures:
    def test_right_triangle_area(self):
        assert surface_area(RIGHT) == 0.5

    def test_empty_mesh_area_zero(self):
        assert surface_area(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int))) == 0.0

    def test_disk_area_and_length(self, disk4):
        assert surface_area(disk4) == pytest.approx(math.pi, rel=5e-3)
        assert boundary_length(disk4) == pytest.approx(2 * math.pi, rel=5e-3)

    def test_closed_mesh_has_no_boundary_length(self, sphere4):
        assert boundary_length(sphere4) == 0.0

    def test_catenoid_area_and_length(self, catenoid_fine):
        assert surface_area(catenoid_fine) == pytest.approx(AREA_SIGMA, rel=5e-3)
        assert boundary_length(catenoid_fine) == pytest.approx(BOUNDARY_LEN, rel=5e-3)

    def test_disk_area_converges_monotonically(self):
        errs = [abs(surface_area(generate_disk(6, levels=k)) - math.pi) for k in range(1, 5)]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_catenoid_area_converges_monotonically(self, catenoid_levels):
        errs = [abs(surface_area(m) - AREA_SIGMA) for m in catenoid_levels]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_equilateral_quality_is_one(self):
        m = TriangleMesh([[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0]], [[0, 1, 2]])
        assert triangle_quality(m)[0] == pytest.approx(1.0, abs=1e-15)


class TestTopology:
    @pytest.mark.parametrize("mesh_fn, expected", [
        (lambda: generate_disk(6, levels=2), (1, 0, 1)),
        (lambda: generate_catenoid(8, 16), (0, 0, 2)),
        (lambda: icosphere(2), (2, 0, 0)),
    ])
    def test_euler_genus_loops(self, mesh_fn, expected):
        t = euler_characteristic(mesh_fn())
        assert (t.euler_char, t.genus, t.num_boundary_loops) == expected

    def test_disconnected_rejected(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 0, 0], [6, 0, 0], [5, 1, 0]]
        m = TriangleMesh(v, [[0, 1, 2], [3, 4, 5]])
        with pytest.raises(DisconnectedMeshError):
            euler_characteristic(m)

    def test_boundary_loops_are_ordered_cycles(self):
        m = generate_catenoid(6, 10)
        assert len(m.boundary_loops) == 2
        edges = {tuple(e) for e in m.boundary_edges.tolist()}
        for loop in m.boundary_loops:
            for a, b in zip(loop, np.roll(loop, -1)):
                assert (a, b) in edges
        covered = sum(len(loop) for loop in m.boundary_loops)
        assert covered == len(edges)


class TestNormals:
    def test_flat_disk_normal(self):
        d = generate_disk(6, levels=2)
        n = vertex_normals(d)
        assert np.allclose(n[~d.is_boundary_vertex], [0, 0, 1], atol=1e-14)

    def test_sphere_normal_is_radial(self, sphere4):
        n = vertex_normals(sphere4)
        assert np.abs(n - sphere4.vertices).max() < 1e-2

    def test_inward_oriented_sphere_still_outward(self, sphere4):
        flipped = TriangleMesh(sphere4.vertices, sphere4.faces[:, ::-1])
        assert np.abs(vertex_normals(flipped) - sphere4.vertices).max() < 1e-2

    def test_catenoid_boundary_orthogonality_improves(self, catenoid_levels):
        res = []
        for m in catenoid_levels:
            b = m.boundary_vertices
            res.append(np.abs(np.einsum("ij,ij->i", vertex_normals(m)[b], m.vertices[b])).max())
        assert res[0] > res[1] > res[2]

    def test_fold_over_raises_with_vertex(self):
        # two triangles sharing vertex 0 with opposite normals cancel there
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 0], [0, -1, 0]]
        m = TriangleMesh(v, [[0, 1, 2], [0, 3, 4]], validate=False)
        with pytest.raises(DegenerateNormalError) as exc:
            vertex_normals(m)
        assert exc.value.vertex == 0


class TestCurvature:
    def test_flat_disk(self):
        d = generate_disk(6, levels=3)
        c = discrete_curvatures(d)
        assert np.abs(c.gauss[~d.is_boundary_vertex]).max() < 1e-12
        assert math.fsum(c.defect[d.is_boundary_vertex]) == pytest.approx(2 * math.pi, abs=1e-12)

    def test_sphere_defects_sum_to_four_pi(self, sphere4):
        c = discrete_curvatures(sphere4)
        assert c.gauss_bonnet_sum() == pytest.approx(4 * math.pi, abs=1e-11)

    def test_sphere_mean_curvature_vector(self, sphere4):
        c = discrete_curvatures(sphere4)
        assert np.abs(c.mean_vector + sphere4.vertices).max() < 2e-2

    def test_catenoid_gauss_curvature_negative(self, catenoid_fine):
        c = discrete_curvatures(catenoid_fine)
        assert np.nanmax(c.gauss) < 0

    def test_catenoid_gauss_curvature_near_analytic(self, catenoid_fine):
        # K = -1 / (c^2 cosh^4 t) on the middle ring t = 0
        from _oracles import C
        c = discrete_curvatures(catenoid_fine)
        mid = 32 * 128 + np.arange(128)
        assert c.gauss[mid] == pytest.approx(np.full(128, -1 / C ** 2), rel=2e-3)

    def test_catenoid_mean_curvature_decreases(self, catenoid_levels):
        h = []
        for m in catenoid_levels:
            c = discrete_curvatures(m)
            h.append(np.linalg.norm(c.mean_vector[~m.is_boundary_vertex], axis=1).max())
        assert h[0] > h[1] > h[2]
        assert h[2] < 1e-3

    @pytest.mark.parametrize("mesh_fn", [
        lambda: generate_disk(5, levels=2), lambda: generate_catenoid(7, 11), lambda: icosphere(3)])
    def test_gauss_bonnet_exact(self, mesh_fn):
        m = mesh_fn()
        assert gauss_bonnet_residual(m) <= 1e-10 * (m.n_vertices + m.n_faces)


class TestObj:
    def test_round_trip_is_exact(self, tmp_path):
        m = generate_catenoid(5, 9)
        p = tmp_path / "m.obj"
        write_obj(m, p)
        back = read_obj(p)
        assert np.array_equal(back.vertices, m.vertices)
        assert np.array_equal(back.faces, m.faces)

    def test_slashes_comments_and_negative_indices(self, tmp_path):
        p = tmp_path / "t.obj"
        p.write_text("# tri\nv 0 0 0\nv 1 0 0\nvn 0 0 1\nv 0 1 0\nf 1/1/1 2//1 -1\n")
        m = read_obj(p)
        assert m.faces.tolist() == [[0, 1, 2]]
        assert surface_area(m) == 0.5

    def test_quads_rejected(self, tmp_path):
        p = tmp_path / "q.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshValidityError, match="triangular"):
            read_obj(p)


def test_boundary_geodesic_curvature_tends_to_one(catenoid_levels, disk4):
    # a surface meeting the unit sphere orthogonally has boundary geodesic
    # curvature 1; the discrete value approaches it at first order
    gaps = []
    for m in catenoid_levels:
        c = discrete_curvatures(m)
        k = c.geodesic[c.is_boundary]
        assert np.ptp(k) < 1e-10
        gaps.append(1.0 - k.mean())
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 1e-2
    assert gaps[0] / gaps[1] == pytest.approx(2.0, rel=0.05)
    c = discrete_curvatures(disk4)
    assert np.abs(c.geodesic[c.is_boundary] - 1).max() < 1e-3
