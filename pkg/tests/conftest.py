import pytest

from csquant.coherent import CoherentStateSystem
from csquant.phase_space import build_plane_grid, build_sphere_grid


@pytest.fixture(scope='session')
def sphere_sys():
    return CoherentStateSystem.sphere(2)


@pytest.fixture(scope='session')
def sphere_grid():
    return build_sphere_grid(2, 8, 14)


@pytest.fixture(scope='session')
def plane_sys():
    return CoherentStateSystem.plane(12)


@pytest.fixture(scope='session')
def plane_grid():
    return build_plane_grid(6., 40, 64)


@pytest.fixture(scope='session')
def fine_plane_grid():
    return build_plane_grid(6., 80, 80)
