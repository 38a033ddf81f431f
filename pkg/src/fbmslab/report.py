"""Verification pipeline: one mesh in, one JSON report out.

Every check has three outcomes. A check whose hypotheses do not hold for
the input (wrong genus, too few boundary loops, non-injective radial
projection) is marked not-applicable instead of being evaluated. Every
numeric quantity in the report is stored together with the tolerance it was
judged against (``null`` for quantities that are only reported).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import generators
from .errors import DegenerateProjectionError
from .mesh import (TriangleMesh, boundary_length, euler_characteristic, gauss_bonnet_residual,
                   read_obj, surface_area)
from .radial import (boundary_geodesic_curvature, divergence_identity, radial_project,
                     spherical_area, tilt_excess)
from .solver import free_boundary_residual
from .steklov import mesh_fingerprint

logger = logging.getLogger(__name__)

PASS, FAIL, NA = "pass", "fail", "not_applicable"
EXIT_PASS, EXIT_FAIL, EXIT_NOT_APPLICABLE, EXIT_INPUT = 0, 1, 2, 3


@dataclass
class Tolerances:
    gauss_bonnet: float = 1e-8
    length_area_identity: float = 5e-2
    free_boundary: float = 5e-2
    tilt_excess: float = 5e-2
    divergence: float = 5e-2
    disk_area: float = 1e-2
    bound_slack: float = 1e-9


FAMILIES = ("catenoid", "noisy-catenoid", "disk", "shell", "translated-sphere")


@dataclass
class PipelineConfig:
    """Inputs and parameters for the verify, solve and convergence runs.

    Exactly one of ``input_path`` and ``family`` is used; ``input_path``
    wins when both are set. ``levels`` drives convergence tables.
    """

    input_path: str | None = None
    family: str | None = None
    level: int = 3
    levels: tuple = (1, 2, 3)
    seed: int = 0
    noise: float = 0.01
    output_path: str | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.input_path is not None and not str(self.input_path):
            raise ValueError("input path must be nonempty")
        if self.output_path is not None and not str(self.output_path):
            raise ValueError("output path must be nonempty")
        if self.input_path is None and self.family is None:
            raise ValueError("need an input path or a family name")
        if self.family is not None and self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        lv = list(self.levels)
        if not lv or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("levels must be nonempty and strictly ascending")
        if self.level < 0 or lv[0] < 0:
            raise ValueError("levels must be non-negative")


def make_family(name, level, seed=0, noise=0.01):
    """Named fixture meshes. ``level`` is the refinement knob: catenoid
    level l has ``(8 * 2**l, 16 * 2**l)`` samples, the disk ``l`` midpoint
    subdivisions of a hexagon, the shell and the sphere are icospheres with
    ``l + 1`` subdivisions."""
    if name == "catenoid":
        return generators.generate_catenoid(8 * 2 ** level, 16 * 2 ** level)
    if name == "noisy-catenoid":
        cat = generators.generate_catenoid(8 * 2 ** level, 16 * 2 ** level)
        return generators.perturb_interior(cat, noise, seed)
    if name == "disk":
        return generators.generate_disk(6, levels=level)
    if name == "shell":
        return generators.generate_near_sphere_shell(2, 0.4, level + 1)
    if name == "translated-sphere":
        s = generators.icosphere(level + 1)
        return s.with_vertices(0.3 * s.vertices + np.array([0.0, 0.0, 0.5]))
    raise ValueError(f"unknown family {name!r}")


def load_mesh(config, level=None):
    if config.input_path is not None:
        return read_obj(config.input_path)
    return make_family(config.family, config.level if level is None else level,
                       config.seed, config.noise)


# -- report ----------------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def quantity(value, tolerance=None):
    return {"value": _num(value), "tolerance": _num(tolerance)}


@dataclass
class Check:
    """One assertion: ``value`` compared against ``threshold`` by
    ``relation`` with slack ``tolerance``."""

    status: str
    relation: str
    value: float | None = None
    threshold: float | None = None
    tolerance: float | None = None
    margin: float | None = None
    note: str = ""

    def as_dict(self):
        return {"status": self.status, "relation": self.relation, "value": _num(self.value),
                "threshold": _num(self.threshold), "tolerance": _num(self.tolerance),
                "margin": _num(self.margin), "note": self.note}


def _leq(value, threshold, tol=0.0, note=""):
    ok = value <= threshold + tol
    return Check(PASS if ok else FAIL, "<=", value, threshold, tol, threshold - value, note)


def _lt(value, threshold, note=""):
    ok = value < threshold
    return Check(PASS if ok else FAIL, "<", value, threshold, 0.0, threshold - value, note)


def _na(relation, note):
    return Check(NA, relation, note=note)


@dataclass
class GeometryReport:
    """All scalar diagnostics of one mesh plus the evaluated checks."""

    source: str
    fingerprint: str
    n_vertices: int
    n_faces: int
    surface_area: float
    boundary_length: float
    euler_char: int
    genus: int
    num_boundary: int
    radially_injective: bool
    injectivity_note: str
    omega_area: float | None
    quantities: dict
    checks: dict

    @property
    def exit_code(self):
        statuses = [c.status for c in self.checks.values()]
        if FAIL in statuses:
            return EXIT_FAIL
        if self.num_boundary == 0 or not self.radially_injective:
            return EXIT_NOT_APPLICABLE
        return EXIT_PASS

    def as_dict(self):
        return {
            "source": self.source,
            "fingerprint": self.fingerprint,
            "n_vertices": self.n_vertices,
            "n_faces": self.n_faces,
            "topology": {"euler_char": self.euler_char, "genus": self.genus,
                         "num_boundary": self.num_boundary},
            "radial": {"injective": self.radially_injective, "note": self.injectivity_note},
            "quantities": self.quantities,
            "checks": {k: c.as_dict() for k, c in self.checks.items()},
            "exit_code": self.exit_code,
        }

    def to_json(self):
        """Deterministic serialization: sorted keys, shortest float repr."""
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def fraser_li_bound(genus, k):
    return min(2.0 * (genus + k) * math.pi, 8.0 * math.pi * ((genus + 3) // 2))


def verify_mesh(mesh: TriangleMesh, source="mesh", tol: Tolerances | None = None):
    """Evaluate every diagnostic and check on ``mesh``."""
    tol = tol or Tolerances()
    topo = euler_characteristic(mesh)
    area = surface_area(mesh)
    k = topo.num_boundary_loops
    length = boundary_length(mesh) if k else 0.0
    q = {
        "surface_area": quantity(area),
        "boundary_length": quantity(length),
        "gauss_bonnet_residual": quantity(gauss_bonnet_residual(mesh), tol.gauss_bonnet),
    }
    checks = {"gauss_bonnet": _leq(q["gauss_bonnet_residual"]["value"], 0.0, tol.gauss_bonnet)}

    if k:
        ident = abs(length - 2.0 * area) / area
        fb = free_boundary_residual(mesh)
        q["length_area_identity_residual"] = quantity(ident, tol.length_area_identity)
        q["free_boundary_residual"] = quantity(fb, tol.free_boundary)
        checks["length_equals_twice_area"] = _leq(ident, 0.0, tol.length_area_identity)
        checks["free_boundary"] = _leq(fb, 0.0, tol.free_boundary)
        bound = fraser_li_bound(topo.genus, k)
        q["fraser_li_bound"] = quantity(bound, tol.bound_slack)
        checks["fraser_li"] = _leq(area, bound, tol.bound_slack)
    else:
        for name in ("length_equals_twice_area", "free_boundary"):
            checks[name] = _na("<=", "mesh has no boundary")
        checks["fraser_li"] = _na("<=", "mesh has no boundary")

    try:
        proj = radial_project(mesh)
        injective, note = proj.injective, proj.reason
    except DegenerateProjectionError as exc:
        proj, injective, note = None, False, str(exc)
    omega_area = None
    gated = injective and k >= 1 and topo.genus == 0
    if injective:
        omega_area = spherical_area(proj.omega)
        q["omega_area"] = quantity(omega_area)
    if gated:
        te = tilt_excess(proj.u_field, mesh)
        div = divergence_identity(proj.u_field, mesh)
        q["tilt_excess_lhs"] = quantity(te.lhs)
        q["tilt_excess_rhs"] = quantity(te.rhs)
        q["tilt_excess_residual"] = quantity(te.residual, tol.tilt_excess)
        q["divergence_residual"] = quantity(div, tol.divergence)
        checks["tilt_excess"] = _leq(te.residual, 0.0, tol.tilt_excess)
        checks["divergence_identity"] = _leq(div, 0.0, tol.divergence)
        kg = boundary_geodesic_curvature(proj.omega)
        kg = kg[~np.isnan(kg)]
        q["boundary_kappa_g_min"] = quantity(kg.min())
        q["boundary_kappa_g_mean"] = quantity(kg.mean())
        q["boundary_kappa_g_max"] = quantity(kg.max())
        checks["below_four_pi"] = _lt(area, 4.0 * math.pi)
    else:
        why = ("radial projection is not injective" if not injective
               else "mesh has no boundary" if k == 0 else f"genus {topo.genus} is not zero")
        for name in ("tilt_excess", "divergence_identity"):
            checks[name] = _na("<=", why)
        checks["below_four_pi"] = _na("<", why)

    if gated and k >= 2:
        checks["area_above_half_omega"] = _lt(0.5 * omega_area, area)
        checks["area_below_omega"] = _lt(area, omega_area)
        checks["disk_area_lower_bound"] = _na(">=", "applies to one boundary component")
    else:
        why = ("radial projection is not injective" if not injective
               else f"needs at least two boundary components, found {k}" if k < 2
               else f"genus {topo.genus} is not zero")
        checks["area_above_half_omega"] = _na("<", why)
        checks["area_below_omega"] = _na("<", why)
        if k == 1 and topo.genus == 0:
            lower = math.pi * (1.0 - tol.disk_area)
            checks["disk_area_lower_bound"] = Check(
                PASS if area >= lower else FAIL, ">=", area, math.pi, tol.disk_area, area - lower)
        else:
            checks["disk_area_lower_bound"] = _na(">=", "applies to one boundary component")

    return GeometryReport(source, mesh_fingerprint(mesh), mesh.n_vertices, mesh.n_faces, area,
                          length, topo.euler_char, topo.genus, k, bool(injective), note,
                          omega_area, q, checks)


def run_verify_pipeline(config: PipelineConfig):
    """Load, verify and (if ``output_path`` is set) write the JSON report."""
    mesh = load_mesh(config)
    source = config.input_path or f"{config.family}@level{config.level}"
    report = verify_mesh(mesh, source, config.tolerances)
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(report.to_json())
    logger.info("verified %s: exit code %d", source, report.exit_code)
    return report


CONVERGENCE_COLUMNS = ("level", "n_vertices", "surface_area", "boundary_length",
                       "length_area_identity_residual", "free_boundary_residual",
                       "tilt_excess_residual", "divergence_residual", "gauss_bonnet_residual")


def convergence_table(config: PipelineConfig):
    """Rows of :data:`CONVERGENCE_COLUMNS`, one per level; missing values
    are None."""
    rows = []
    for level in config.levels:
        mesh = load_mesh(config, level)
        rep = verify_mesh(mesh, f"{config.family}@level{level}", config.tolerances)
        row = {"level": level, "n_vertices": rep.n_vertices}
        for col in CONVERGENCE_COLUMNS[2:]:
            row[col] = rep.quantities.get(col, {}).get("value")
        rows.append(row)
    return rows


def write_csv(rows, path, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in columns])
