"""Shared fixtures"""
import pytest

from msjlab.core.config import Settings
from msjlab.schemas import OneAndNParams
from msjlab.services.config_service import two_class


@pytest.fixture
def n2_params():
    """n=2, p_n=0.5, unit rates: mu = 8/7, E[Delta(Y_d)] = 4/49"""
    return OneAndNParams(n=2, p_n=0.5, mu1=1.0, mun=1.0)


@pytest.fixture
def n2_config():
    return two_class(2, 0.5, 1.0, 1.0)


@pytest.fixture
def serial_settings():
    """Settings that keep sweeps in-process"""
    s = Settings()
    s.THREADS = 1
    return s
