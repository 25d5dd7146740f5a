import numpy as np
import pytest

from nlbc_iga.assembly import Discretization
from nlbc_iga.geometry import BoundarySpec, build_quarter_ring
from nlbc_iga.study import reference_geometry


@pytest.fixture(scope="session")
def coarse_ring():
    return build_quarter_ring()


@pytest.fixture(scope="session")
def ring_geo():
    return reference_geometry()


@pytest.fixture(scope="session")
def ring_disc(ring_geo):
    return Discretization(ring_geo, BoundarySpec())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
