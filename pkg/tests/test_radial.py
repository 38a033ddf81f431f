import math

import numpy as np
import pytest

from fbmslab.errors import DegenerateProjectionError, PreconditionError
from fbmslab.generators import (generate_catenoid, generate_disk,
                                generate_spherical_band, icosphere, solve_catenoid_params)
from fbmslab.mesh import TriangleMesh, transformed
from fbmslab.radial import (CatenoidProfile, boundary_blowup_diagnostic, boundary_convexity,
                            boundary_geodesic_curvature, divergence_identity, field_mean_curvature,
                            mean_curvature_divergence_form, mean_curvature_fundamental_form,
                            mean_curvature_radial, projection_is_injective, radial_project,
                            spherical_area, tilt_excess)

from _oracles import (AREA_OMEGA, BOUNDARY_LEN, KAPPA_G, TILT_LHS, brute_force_overlap,
                      catenoid_u, exp_map, fd_derivatives)

PARAMS = solve_catenoid_params()


def spiral_strip(turns=1.75, n_theta=70, n_w=3):
    """A strip on the sphere winding ``turns`` times around the z axis while
    drifting slowly in latitude, so consecutive turns overlap with the
    same orientation."""
    th = np.linspace(0.0, 2 * np.pi * turns, n_theta + 1)
    rows = []
    for s in np.linspace(-0.15, 0.15, n_w + 1):
        phi = 1.0 + 0.05 * th / (2 * np.pi) + s
        rows.append(np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], 1))
    v = np.concatenate(rows)
    faces = []
    m = n_theta + 1
    for j in range(n_w):
        for k in range(n_theta):
            a, b, c, d = j * m + k, j * m + k + 1, (j + 1) * m + k, (j + 1) * m + k + 1
            faces += [[a, c, b], [b, c, d]]
    return TriangleMesh(v, faces)


def translated_small_sphere():
    s = icosphere(2)
    return s.with_vertices(0.3 * s.vertices + np.array([0.0, 0.0, 0.5]))


class TestProjection:
    def test_equatorial_disk(self, disk4):
        p = radial_project(disk4)
        assert p.injective and p.equatorial
        u = p.u_field.u
        assert np.all(u[~disk4.is_boundary_vertex] > 0)
        assert np.abs(u[disk4.is_boundary_vertex]).max() < 1e-15
        assert spherical_area(p.omega) == pytest.approx(2 * math.pi, rel=1e-3)

    def test_catenoid(self, catenoid_fine):
        p = radial_project(catenoid_fine)
        assert p.injective
        assert spherical_area(p.omega) == pytest.approx(AREA_OMEGA, rel=5e-3)
        assert p.u_field.within_ball()

    def test_translated_sphere_is_not_injective(self):
        p = radial_project(translated_small_sphere())
        assert not p.injective and p.u_field is None

    def test_vertex_at_origin(self):
        m = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0.5]], [[0, 1, 2]])
        with pytest.raises(DegenerateProjectionError):
            radial_project(m)

    def test_spiral_overlap_detected(self):
        m = spiral_strip()
        ok, reason = projection_is_injective(m.with_vertices(
            m.vertices / np.linalg.norm(m.vertices, axis=1)[:, None]))
        assert not ok and "overlap" in reason

    @pytest.mark.parametrize("make, expected", [
        (lambda: spiral_strip(), True),
        (lambda: spiral_strip(turns=0.9, n_theta=24, n_w=2), False),
        (lambda: translated_small_sphere(), True),
        (lambda: generate_catenoid(4, 12), False),
    ])
    def test_agrees_with_brute_force(self, make, expected):
        m = make()
        om = m.vertices / np.linalg.norm(m.vertices, axis=1)[:, None]
        assert brute_force_overlap(om, m.faces.tolist()) == expected
        assert radial_project(m).injective == (not expected)

    def test_commutes_with_rotation(self, catenoid_levels):
        m = catenoid_levels[0]
        rng = np.random.default_rng(2)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        a = radial_project(transformed(m, rotation=q))
        b = radial_project(m)
        assert a.injective == b.injective
        assert np.abs(a.omega.vertices - b.omega.vertices @ q.T).max() < 1e-12


class TestSphericalArea:
    def test_full_sphere(self):
        assert spherical_area(icosphere(3)) == pytest.approx(4 * math.pi, rel=1e-3)

    def test_hemisphere(self):
        band = generate_spherical_band(1e-3, 0.5 * math.pi, 20, 128)
        cap = 2 * math.pi * (1 - math.cos(1e-3))
        assert spherical_area(band) + cap == pytest.approx(2 * math.pi, rel=1e-3)


class TestTiltExcess:
    def test_catenoid_lhs(self, catenoid_fine):
        te = tilt_excess(radial_project(catenoid_fine).u_field, catenoid_fine)
        assert te.lhs == pytest.approx(TILT_LHS, rel=1e-2)
        assert te.residual <= 0.05
        assert te.pointwise_gap < 1e-12
        assert te.rhs == pytest.approx(te.rhs_split, abs=1e-12)

    def test_catenoid_residual_decreases(self, catenoid_levels):
        res = [tilt_excess(radial_project(m).u_field, m).residual for m in catenoid_levels]
        assert res[0] > res[1] > res[2]

    def test_lhs_positive_at_every_resolution(self, catenoid_levels):
        for m in catenoid_levels:
            assert tilt_excess(radial_project(m).u_field, m).lhs > 0

    def test_disk(self, disk4):
        te = tilt_excess(radial_project(disk4).u_field, disk4)
        assert te.lhs == pytest.approx(math.pi, rel=1e-2)
        assert te.rhs == pytest.approx(math.pi, rel=1e-2)

    def test_surface_on_sphere(self):
        # u = 0: the surface is its own shadow; both sides vanish as the
        # chords approach the sphere
        lhs, rhs = [], []
        for n in (16, 32, 64):
            band = generate_spherical_band(0.6, 2.2, n // 2, n)
            te = tilt_excess(radial_project(band).u_field, band)
            lhs.append(abs(te.lhs))
            rhs.append(abs(te.rhs))
        assert lhs[0] > lhs[1] > lhs[2] and rhs[0] > rhs[1] > rhs[2]
        assert lhs[2] < 2e-2 and rhs[2] < 1e-3

    def test_non_injective_rejected(self):
        with pytest.raises(PreconditionError):
            tilt_excess(None, generate_disk(6))

    def test_mismatched_connectivity_rejected(self, disk4):
        with pytest.raises(PreconditionError):
            tilt_excess(radial_project(disk4).u_field, generate_disk(6, levels=3))


class TestDivergenceIdentity:
    def test_disk(self, disk4):
        assert divergence_identity(radial_project(disk4).u_field, disk4) < 1e-2 * math.pi

    def test_catenoid_decreases(self, catenoid_levels):
        res = [divergence_identity(radial_project(m).u_field, m) for m in catenoid_levels]
        assert res[0] > res[1] > res[2]
        assert res[2] < 5e-3

    def test_surface_on_sphere_decreases(self):
        res = []
        for n in (16, 32, 64):
            band = generate_spherical_band(0.6, 2.2, n // 2, n)
            res.append(divergence_identity(radial_project(band).u_field, band))
        assert res[0] > res[1] > res[2]


class TestMeanCurvatureFormula:
    def test_unit_sphere(self):
        assert mean_curvature_radial(0.0, [0.0, 0.0], np.zeros((2, 2))) == 2.0

    @pytest.mark.parametrize("r0", [0.25, 0.5, 0.9])
    def test_round_sphere(self, r0):
        h = mean_curvature_radial(1.0 - r0, [0.0, 0.0], np.zeros((2, 2)))
        assert h == pytest.approx(2.0 / r0, rel=1e-15)

    def test_forms_agree_on_many_inputs(self):
        rng = np.random.default_rng(0)
        n = 100_000
        u = rng.uniform(0, 0.9, n)
        g = rng.uniform(-5, 5, (n, 2))
        h = rng.uniform(-5, 5, (n, 2, 2))
        h = 0.5 * (h + h.transpose(0, 2, 1))
        a = mean_curvature_divergence_form(u, g, h)
        b = mean_curvature_fundamental_form(u, g, h)
        assert np.max(np.abs(a - b) / np.maximum(1, np.abs(a))) < 1e-12

    def test_rejects_u_at_least_one(self):
        with pytest.raises(ValueError):
            mean_curvature_radial(1.0, [0, 0], np.zeros((2, 2)))

    def test_catenoid_is_minimal_by_finite_differences(self):
        rng = np.random.default_rng(11)
        zmax = 0.9 * PARAMS.cap_cosine
        z = rng.uniform(-zmax, zmax, 100)
        th = rng.uniform(0, 2 * np.pi, 100)
        pts = np.stack([np.sqrt(1 - z * z) * np.cos(th), np.sqrt(1 - z * z) * np.sin(th), z], 1)
        hs = []
        for p in pts:
            u, g, hess = fd_derivatives(catenoid_u, p, h=1e-4)
            hs.append(mean_curvature_radial(u, g, hess))
        assert np.abs(hs).max() < 1e-4

    def test_plane_is_minimal_by_finite_differences(self):
        d = 0.4

        def u(p):
            return 1.0 - d / p[2]

        for p in (np.array([0.1, 0.2, 1.0]), np.array([-0.3, 0.1, 0.8])):
            p = p / np.linalg.norm(p)
            val, g, hess = fd_derivatives(u, p)
            assert abs(mean_curvature_radial(val, g, hess)) < 1e-5

    def test_fitted_catenoid_field_improves(self, catenoid_levels):
        meds = []
        for m in catenoid_levels:
            _, h = field_mean_curvature(radial_project(m).u_field)
            meds.append(np.median(np.abs(h)))
        assert meds[0] > meds[1] > meds[2]
        assert meds[2] < 0.1

    def test_fitted_gradient_matches_profile(self, catenoid_fine):
        p = radial_project(catenoid_fine)
        om = p.omega.vertices
        inner = np.abs(om[:, 2]) < 0.8 * PARAMS.cap_cosine
        exact = CatenoidProfile(PARAMS).grad_u(om[inner])
        assert np.abs(p.u_field.grad_u_ambient()[inner] - exact).max() < 2e-2


class TestProfile:
    def test_u_matches_independent_root(self):
        prof = CatenoidProfile(PARAMS)
        rng = np.random.default_rng(4)
        for z in rng.uniform(-0.5, 0.5, 20):
            p = np.array([math.sqrt(1 - z * z), 0.0, z])
            assert prof.u(p)[0] == pytest.approx(catenoid_u(p), abs=1e-13)

    def test_gradient_matches_finite_difference(self):
        prof = CatenoidProfile(PARAMS)
        p = np.array([0.6, 0.3, 0.2])
        p /= np.linalg.norm(p)
        e = prof.grad_u(p)[0]
        for v in (np.cross(p, [0, 0, 1]), np.cross(p, np.cross(p, [0, 0, 1]))):
            v /= np.linalg.norm(v)
            h = 1e-6
            fd = (catenoid_u(exp_map(p, h * v)) - catenoid_u(exp_map(p, -h * v))) / (2 * h)
            assert e @ v == pytest.approx(fd, abs=1e-8)


class TestConvexity:
    def test_catenoid_latitude_circles(self, catenoid_fine):
        k = boundary_geodesic_curvature(radial_project(catenoid_fine).omega)
        k = k[~np.isnan(k)]
        assert np.all(np.abs(k / KAPPA_G - 1) < 2e-2)

    def test_equatorial_disk_great_circle(self, disk4):
        k = boundary_geodesic_curvature(radial_project(disk4).omega)
        assert np.nanmax(np.abs(k)) < 1e-6

    def test_great_circle_band(self, great_circle_band):
        k = boundary_geodesic_curvature(great_circle_band)
        lower = great_circle_band.boundary_loops[1]
        assert np.abs(k[lower]).max() < 1e-6
        upper = great_circle_band.boundary_loops[0]
        assert k[upper] == pytest.approx(np.full(len(upper), 1 / math.tan(0.5)), rel=1e-3)

    def test_wavy_boundary_flagged(self, wavy_band):
        assert boundary_convexity(wavy_band) < 0

    def test_closed_domain_rejected(self):
        with pytest.raises(PreconditionError):
            boundary_convexity(icosphere(1))


class TestBlowup:
    EPS = [0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3]

    def test_flux_below_twice_inset_area(self):
        row = boundary_blowup_diagnostic(PARAMS, [0.3])[0]
        assert row.flux < row.two_area_inset

    def test_table_monotone_with_limit(self):
        rows = boundary_blowup_diagnostic(PARAMS, self.EPS)
        flux = [r.flux for r in rows]
        assert all(b > a for a, b in zip(flux, flux[1:]))
        assert all(r.flux < r.two_area_inset for r in rows)
        assert rows[-1].flux == pytest.approx(BOUNDARY_LEN, rel=1e-2)

    def test_gradient_grows_without_bound(self):
        rows = boundary_blowup_diagnostic(PARAMS, [1e-3, 1e-5, 1e-7])
        g = [r.max_grad for r in rows]
        # |grad u| ~ eps^(-1/2) near a grazing boundary
        assert g[0] < g[1] < g[2]
        assert g[2] / g[1] == pytest.approx(10, rel=0.02)

    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.6])
    def test_eps_out_of_range(self, eps):
        with pytest.raises(ValueError):
            boundary_blowup_diagnostic(PARAMS, [eps])
