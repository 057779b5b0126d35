import math

import numpy as np
import pandas as pd
import pytest

from modulos import base_gaussiana as bg
from modulos.campos2d import (
    Malla2D,
    dipolo_fisico,
    ensamblar,
    exportar_campo_csv,
    exportar_polilineas_csv,
    exportar_svg,
    extraer_contornos,
    nivel_separatriz,
    velocidad,
)
from modulos.modelos import ErrorConfiguracion, ErrorMalla, ParametrosDipolo, Paridad
from modulos.nucleo_polar import CampoPolar, PerfilRadial
from modulos.reportes import GeneradorReportes


class TestMalla2D:

    @pytest.mark.parametrize('nx, ny', [(7, 8), (8, 2)])
    def test_resolucion_invalida(self, nx, ny):
        with pytest.raises(ErrorConfiguracion):
            Malla2D(-1.0, 1.0, -1.0, 1.0, nx, ny)

    def test_extension_vacia(self):
        with pytest.raises(ErrorConfiguracion):
            Malla2D(1.0, 1.0, -1.0, 1.0, 8, 8)

    def test_nodos(self):
        malla = Malla2D.centrada(2.0, 8)
        assert malla.x[0] == -2.0 and malla.x[-1] == 2.0
        assert malla.dx == pytest.approx(4.0 / 7.0)
        x1, x2 = malla.puntos()
        assert x1.shape == (8, 8)
        assert np.all(x2[0, :] == malla.y)


class TestEnsamblado:

    def test_campo_gaussiano(self, malla):
        campo = CampoPolar.modo_unico(0, Paridad.COS, PerfilRadial(malla, bg.G(malla.r)))
        malla2d = Malla2D.centrada(4.0, 40)
        x1, x2 = malla2d.puntos()
        muestras = ensamblar(campo, 0.1, 0.0, malla2d)
        assert np.max(np.abs(muestras - bg.G(np.hypot(x1, x2)))) < 1e-9

    def test_prolongacion_mas_alla_de_r_max(self, malla):
        campo = CampoPolar.modo_unico(0, Paridad.COS, PerfilRadial(malla, bg.G(malla.r)))
        muestras = ensamblar(campo, 0.1, 0.0, Malla2D(26.0, 30.0, -1.0, 1.0, 4, 4))
        assert np.all(np.isfinite(muestras))
        assert np.max(np.abs(muestras)) < 1e-70

    def test_cantidad_desconocida(self, paquete_base):
        with pytest.raises(ErrorConfiguracion):
            ensamblar(paquete_base, 0.1, 0.0, Malla2D.centrada(2.0, 8), 'presion')

    def test_omega_es_par_en_xi2(self, paquete_base):
        malla2d = Malla2D.centrada(3.0, 16)
        muestras = ensamblar(paquete_base, 0.1, 0.0, malla2d, 'omega')
        assert np.max(np.abs(muestras - muestras[:, ::-1])) < 1e-12

    def test_separatriz_sobre_la_recta_media(self, paquete_base):
        eps = 0.1
        malla2d = Malla2D(-1.0 / (2.0 * eps), 3.0, -3.0, 3.0, 16, 16)
        phi = ensamblar(paquete_base, eps, 0.0, malla2d, 'phi')
        assert np.max(np.abs(phi[0, :] - nivel_separatriz(paquete_base, eps))) < 1e-12


class TestDipoloFisico:

    def test_antisimetria_y_circulacion(self):
        parametros = ParametrosDipolo.desde_reynolds(1000.0)
        t = parametros.tiempo(0.1)
        malla2d = Malla2D.centrada(2.0, 200)
        omega = dipolo_fisico(parametros, t, 0.0, malla2d)
        assert np.max(np.abs(omega + omega[::-1, :])) < 1e-12 * np.max(np.abs(omega))
        derecha = malla2d.x > 0
        circulacion = np.sum(omega[derecha, :]) * malla2d.dx * malla2d.dy
        assert circulacion == pytest.approx(-parametros.circulacion, rel=1e-3)

    def test_tiempo_no_positivo(self):
        with pytest.raises(ErrorConfiguracion):
            dipolo_fisico(ParametrosDipolo.desde_reynolds(1000.0), 0.0, 0.0, Malla2D.centrada(1.0, 8))

    def test_paquete_gaussiano_coincide(self, paquete_gauss):
        parametros = ParametrosDipolo.desde_reynolds(1000.0)
        t = parametros.tiempo(0.1)
        malla2d = Malla2D.centrada(1.0, 40)
        directo = dipolo_fisico(parametros, t, 0.0, malla2d)
        con_paquete = dipolo_fisico(parametros, t, 0.0, malla2d, paquete_gauss)
        assert np.max(np.abs(directo - con_paquete)) < 1e-8 * np.max(np.abs(directo))


def test_velocidad_de_un_flujo_de_deformacion():
    malla2d = Malla2D.centrada(1.0, 10)
    x1, x2 = malla2d.puntos()
    u1, u2 = velocidad(x1 * x2, malla2d)
    assert np.allclose(u1, -x1, atol=1e-12)
    assert np.allclose(u2, x2, atol=1e-12)


class TestContornos:

    def test_circulo(self):
        malla2d = Malla2D.centrada(3.0, 120)
        x1, x2 = malla2d.puntos()
        polilineas = extraer_contornos(x1 ** 2 + x2 ** 2, [4.0], malla2d)
        assert len(polilineas) == 1
        circulo = polilineas[0]
        assert circulo.cerrada
        assert circulo.longitud == pytest.approx(4.0 * math.pi, rel=1e-3)
        assert np.allclose(np.hypot(*circulo.puntos.T), 2.0, atol=1e-2)

    def test_recta_abierta(self):
        malla2d = Malla2D.centrada(1.0, 20)
        x1, _ = malla2d.puntos()
        polilineas = extraer_contornos(x1, [0.1], malla2d)
        assert len(polilineas) == 1
        assert not polilineas[0].cerrada
        assert np.allclose(polilineas[0].puntos[:, 0], 0.1)
        assert polilineas[0].longitud == pytest.approx(2.0)

    def test_nivel_fuera_de_rango(self):
        malla2d = Malla2D.centrada(1.0, 8)
        x1, _ = malla2d.puntos()
        assert extraer_contornos(x1, [5.0], malla2d) == []

    def test_forma_incompatible(self):
        with pytest.raises(ErrorMalla):
            extraer_contornos(np.zeros((4, 6)), [0.0], Malla2D.centrada(1.0, 8))


class TestExportacion:

    def _circulo(self):
        malla2d = Malla2D.centrada(3.0, 40)
        x1, x2 = malla2d.puntos()
        muestras = x1 ** 2 + x2 ** 2
        return malla2d, muestras, extraer_contornos(muestras, [1.0, 4.0], malla2d)

    def test_csv_de_campo_y_polilineas(self, tmp_path):
        malla2d, muestras, polilineas = self._circulo()
        ruta = exportar_campo_csv(muestras, malla2d, str(tmp_path / 'campo.csv'))
        tabla = pd.read_csv(ruta, comment='#')
        assert list(tabla.columns) == ['x', 'y', 'valor']
        assert len(tabla) == malla2d.nx * malla2d.ny

        ruta = exportar_polilineas_csv(polilineas, str(tmp_path / 'lineas.csv'))
        tabla = pd.read_csv(ruta, comment='#')
        assert list(tabla.columns) == ['polilinea', 'nivel', 'cerrada', 'x', 'y']
        assert set(tabla['nivel']) == {1.0, 4.0}

    def test_svg_reproducible(self, tmp_path):
        _, _, polilineas = self._circulo()
        rutas = []
        for nombre in ('a', 'b'):
            generador = GeneradorReportes(str(tmp_path / nombre), {'version': 'x'})
            rutas.append(exportar_svg(polilineas, generador, 'lineas.svg', 0.2, 4.0))
        with open(rutas[0], 'rb') as a, open(rutas[1], 'rb') as b:
            contenido = a.read()
            assert contenido == b.read()
        assert b'<svg' in contenido
