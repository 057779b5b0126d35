"""
Fixtures compartidas por las pruebas
"""

import os

import pytest

os.environ.setdefault('DIPOLO_ENTORNO', 'pruebas')

from config import restablecer_sobrescrituras  # noqa: E402
from modulos.expansion import construir_paquete, paquete_gaussiano  # noqa: E402
from modulos.nucleo_polar import MallaRadial  # noqa: E402


@pytest.fixture(autouse=True)
def sin_sobrescrituras():
    restablecer_sobrescrituras()
    yield
    restablecer_sobrescrituras()


@pytest.fixture(scope='session')
def malla():
    return MallaRadial(25.0, 4096)


@pytest.fixture(scope='session')
def malla_gruesa():
    return MallaRadial(25.0, 1024)


@pytest.fixture(scope='session')
def paquete_gauss(malla):
    return paquete_gaussiano(malla)


@pytest.fixture(scope='session')
def paquete_base(malla):
    return construir_paquete(2, malla)


@pytest.fixture(scope='session')
def paquete_m3(malla):
    return construir_paquete(3, malla)


@pytest.fixture(scope='session')
def paquete_m5(malla):
    return construir_paquete(5, malla)
