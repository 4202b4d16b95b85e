import os

import pytest
from hypothesis import HealthCheck, settings

from utils.config import get_settings
from utils.formats import load

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

settings.register_profile("gamebridge", suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
settings.load_profile("gamebridge")


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Settings come from defaults only unless a test sets GB_* variables itself"""
    for name in list(os.environ):
        if name.startswith("GB_"):
            monkeypatch.delenv(name)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def fixtures_dir():
    """Directory of the shipped example files"""
    return FIXTURES


@pytest.fixture
def fig5():
    """Two-slice reachability game the system wins"""
    return load(os.path.join(FIXTURES, "fig5.pg"))


@pytest.fixture
def fig5_policy():
    """History strategy winning fig5"""
    return load(os.path.join(FIXTURES, "fig5.strategy"))


@pytest.fixture
def burglary():
    """Burglary game: the alarm processes must learn where the burglar entered"""
    return load(os.path.join(FIXTURES, "burglary.pg"))


@pytest.fixture
def commitment():
    """Game without a winning strategy whose meet place holds two tokens"""
    return load(os.path.join(FIXTURES, "commitment.pg"))


@pytest.fixture
def manager():
    """Manager game with two clients; the system wins with causal memory of two actions"""
    return load(os.path.join(FIXTURES, "manager.cg"))


@pytest.fixture
def manager_controller(manager):
    """Memory controller winning the manager game"""
    return load(os.path.join(FIXTURES, "manager.controller"), game=manager)


@pytest.fixture
def fig9():
    """Two-process safety game the system loses"""
    return load(os.path.join(FIXTURES, "fig9.cg"))


@pytest.fixture
def fig16():
    """Game whose base translation is won by refusing to commit"""
    return load(os.path.join(FIXTURES, "fig16.cg"))
