import numpy as np
import pytest

from ecswe.assembly import Discretization
from ecswe.mesh import build_icosahedral_sphere, build_periodic_square
from ecswe.operators import Physics


@pytest.fixture(scope="session")
def torus8():
    return Discretization(build_periodic_square(2, 1.0), 8)


@pytest.fixture(scope="session")
def sphere20():
    return Discretization(build_icosahedral_sphere(0, 1.0), 8)


@pytest.fixture(scope="session")
def plane_physics():
    return Physics(g=5.0, f_constant=5.0)


@pytest.fixture(scope="session")
def sphere_physics():
    return Physics(g=5.0, omega=1.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_state(ctx, rng):
    """Random velocity and strictly positive depth."""
    u = rng.normal(size=ctx.W1.dim)
    D = 0.8 + rng.random(ctx.W2.dim)
    return u, D
