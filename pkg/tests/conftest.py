import numpy as np
import pytest

from contactnh import bundled


@pytest.fixture(scope="session")
def sledge():
    return bundled("sledge")


@pytest.fixture(scope="session")
def knife_edge():
    return bundled("knife_edge")


@pytest.fixture(scope="session")
def damped_oscillator():
    return bundled("damped_oscillator")


@pytest.fixture(scope="session")
def free_particle():
    return bundled("free_particle")


@pytest.fixture(scope="session")
def holonomic_flat():
    return bundled("holonomic_flat")


@pytest.fixture(scope="session")
def exact_differential():
    return bundled("exact_differential")


@pytest.fixture
def rng():
    return np.random.default_rng(181712)
