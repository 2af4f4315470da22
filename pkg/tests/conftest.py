import numpy as np
import pytest

from ksfem.mesh import Mesh, build_structured_mesh
from ksfem.scheme import Discretization


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def two_triangle_disc():
    return Discretization.from_mesh(build_structured_mesh(1))


@pytest.fixture(scope="session")
def disc8():
    return Discretization.from_mesh(build_structured_mesh(8))


@pytest.fixture
def unit_right_triangle():
    return Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


def obtuse_quad(angle_deg=100.0):
    """Two triangles sharing the diagonal (-1,0)-(1,0) whose apex angles both equal ``angle_deg``."""
    h = 1.0 / np.tan(np.radians(angle_deg) / 2)
    coords = [[-1.0, 0.0], [1.0, 0.0], [0.0, h], [0.0, -h]]
    return Mesh(coords, [[0, 1, 2], [0, 3, 1]])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
