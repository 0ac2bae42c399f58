import pytest

from frdtorus.decomposition import assemble
from frdtorus.lattice import TorusSpec
from frdtorus.spectral import SpectralParams


@pytest.fixture(scope="session")
def dec_small():
    """Default fixture: d = 2, L = 3, N = 2, alpha = 1.5, m2 = 1."""
    return assemble(TorusSpec(2, 3, 2), SpectralParams(1.5, 1.0))


@pytest.fixture(scope="session")
def dec_big():
    """Heavy fixture: d = 2, L = 9, N = 2 (side 729), alpha = 1.5, m2 = 1."""
    return assemble(TorusSpec(2, 9, 2), SpectralParams(1.5, 1.0))
