import pytest

from src.engine.floquet import HarmonicBasis
from src.engine.materials import PRESETS, surface_polariton_frequency
from src.engine.quadrature import QuadratureSpec
from src.engine.stack import default_stack


@pytest.fixture(scope="session")
def omega1():
    return surface_polariton_frequency(PRESETS["quartz"])


@pytest.fixture(scope="session")
def omega2():
    return surface_polariton_frequency(PRESETS["InP"])


@pytest.fixture
def stack():
    return default_stack()


@pytest.fixture
def basis(stack):
    return HarmonicBasis(stack.modulation.mod_freq, 45.0, trunc=2)


@pytest.fixture
def coarse_quad():
    return QuadratureSpec(rel_tol=1e-2, max_depth=8)
