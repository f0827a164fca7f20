import pytest
from hypothesis import HealthCheck, settings

from levilab.suspension import build_genus2_octagon, preset

settings.register_profile("levilab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("levilab")


@pytest.fixture(scope="session")
def octagon():
    return build_genus2_octagon()


@pytest.fixture(scope="session")
def fuchsian():
    return preset("fuchsian-boundary")


@pytest.fixture(scope="session")
def schottky41():
    return preset("schottky(4, 1)")


@pytest.fixture(scope="session")
def trivial_f():
    return preset("trivial")
