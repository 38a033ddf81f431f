import numpy as np
import pytest

from fbmslab.generators import generate_catenoid, generate_disk, generate_spherical_band, icosphere


@pytest.fixture(scope="session")
def catenoid_levels():
    """Analytic catenoid meshes at (16,32), (32,64), (64,128)."""
    return [generate_catenoid(16, 32), generate_catenoid(32, 64), generate_catenoid(64, 128)]


@pytest.fixture(scope="session")
def catenoid_fine(catenoid_levels):
    return catenoid_levels[-1]


@pytest.fixture(scope="session")
def disk4():
    return generate_disk(6, levels=4)


@pytest.fixture(scope="session")
def sphere4():
    return icosphere(4)


@pytest.fixture(scope="session")
def wavy_band():
    """Band whose top edge wiggles in latitude: the boundary curve is not
    convex toward the removed polar cap."""
    return generate_spherical_band(lambda th: 0.6 + 0.25 * np.sin(5 * th), 2.0, 8, 160)


@pytest.fixture(scope="session")
def great_circle_band():
    """Upper hemisphere cut at the equator from a polar cap: the lower edge
    is a great circle."""
    return generate_spherical_band(0.5, 0.5 * np.pi, 12, 96)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
