import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from modulos import base_gaussiana as bg
from modulos.modelos import ClaseDecaimiento, ErrorConfiguracion, ErrorDecaimiento, ErrorMalla, Paridad
from modulos.nucleo_polar import (
    CampoPolar,
    MallaRadial,
    PerfilRadial,
    SerieEpsDelta,
    cuadratura_radial,
    descomponer,
    exportar_csv,
    integrar_polar,
    momentos,
    muestrear,
    norma_y,
    producto_campos,
    producto_trig,
)


class TestMallaRadial:

    def test_nodos(self):
        malla = MallaRadial(10.0, 101)
        assert malla.h == pytest.approx(0.1)
        assert malla.r[0] == 0.0 and malla.r[-1] == pytest.approx(10.0)
        assert malla.indice_corte(5.0) == 50

    def test_nodos_inmutables(self):
        with pytest.raises(ValueError):
            MallaRadial(10.0, 101).r[0] = 1.0

    @pytest.mark.parametrize('r_max, n', [(10.0, 8), (0.0, 100), (-1.0, 100)])
    def test_malla_invalida(self, r_max, n):
        with pytest.raises(ErrorConfiguracion):
            MallaRadial(r_max, n)


class TestPerfilRadial:

    def test_longitud_incorrecta(self, malla_gruesa):
        with pytest.raises(ErrorMalla):
            PerfilRadial(malla_gruesa, np.zeros(10))

    def test_mallas_incompatibles(self, malla, malla_gruesa):
        with pytest.raises(ErrorMalla):
            PerfilRadial.cero(malla) + PerfilRadial.cero(malla_gruesa)

    def test_clase_de_la_suma(self, malla_gruesa):
        gauss = PerfilRadial(malla_gruesa, bg.G(malla_gruesa.r))
        poli = PerfilRadial.potencia(malla_gruesa, 2)
        assert (gauss + poli).clase is ClaseDecaimiento.POLINOMICA
        assert (gauss * poli).clase is ClaseDecaimiento.GAUSSIANA

    def test_recortar(self, malla_gruesa):
        perfil = PerfilRadial(malla_gruesa, np.ones(malla_gruesa.n_puntos), ClaseDecaimiento.ACOTADA)
        recortado = perfil.recortar(5.0)
        assert np.all(recortado.valores[malla_gruesa.r > 5.0] == 0.0)
        assert recortado.valores[0] == 1.0


class TestCuadratura:

    def test_masa_de_G(self, malla):
        perfil = PerfilRadial(malla, bg.G(malla.r))
        assert 2.0 * math.pi * cuadratura_radial(perfil, 1) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize('k', [1, 3, 5])
    def test_momentos_gaussianos(self, malla, k):
        # ∫ r^k e^{−r²/4} dr = 2^k Γ((k+1)/2)
        perfil = PerfilRadial(malla, np.exp(-malla.r ** 2 / 4.0))
        esperado = 2.0 ** k * math.gamma((k + 1) / 2.0)
        assert cuadratura_radial(perfil, k) == pytest.approx(esperado, rel=1e-12)

    def test_rechaza_crecimiento_polinomico(self, malla_gruesa):
        with pytest.raises(ErrorDecaimiento):
            cuadratura_radial(PerfilRadial.potencia(malla_gruesa, 1), 1)

    def test_rechaza_potencia_negativa(self, malla_gruesa):
        with pytest.raises(ErrorConfiguracion):
            cuadratura_radial(PerfilRadial.cero(malla_gruesa), -1)

    def test_momentos_de_campos_base(self, malla):
        r = malla.r
        campo = CampoPolar(malla, {
            (0, Paridad.COS): PerfilRadial(malla, bg.G(r)),
            (1, Paridad.SIN): PerfilRadial(malla, -r * bg.g(r)),
        })
        masa, m1, m2 = momentos(campo)
        assert masa == pytest.approx(1.0, abs=1e-12)
        assert m1 == 0.0
        # m₂[∂₂G] = −M[G]
        assert m2 == pytest.approx(-1.0, abs=1e-12)

    def test_norma_y_de_G(self, malla):
        # ∫ G² e^{r²/4} dξ = 1/(4π) hasta la truncación
        campo = CampoPolar.modo_unico(0, Paridad.COS, PerfilRadial(malla, bg.G(malla.r)))
        assert norma_y(campo) ** 2 == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-6)

    def test_norma_y_rechaza_polinomios(self, malla_gruesa):
        campo = CampoPolar.modo_unico(1, Paridad.COS, PerfilRadial.potencia(malla_gruesa, 1))
        with pytest.raises(ErrorDecaimiento):
            norma_y(campo)


class TestCampoPolar:

    def test_modo_seno_cero_invalido(self, malla_gruesa):
        with pytest.raises(ErrorConfiguracion):
            CampoPolar(malla_gruesa, {(0, Paridad.SIN): PerfilRadial.cero(malla_gruesa)})

    def test_paridad_xi2(self, malla_gruesa):
        perfil = PerfilRadial(malla_gruesa, bg.G(malla_gruesa.r))
        par = CampoPolar.modo_unico(2, 'cos', perfil)
        impar = CampoPolar.modo_unico(1, 'sin', perfil)
        assert par.paridad_xi2() == 'par'
        assert impar.paridad_xi2() == 'impar'
        assert (par + impar).paridad_xi2() is None

    @given(st.integers(0, 5), st.sampled_from(list(Paridad)),
           st.integers(0, 5), st.sampled_from(list(Paridad)),
           st.floats(0.0, 2.0 * math.pi))
    def test_producto_trig(self, m, pm, n, pn, theta):
        def trig(k, p):
            return math.cos(k * theta) if p is Paridad.COS else math.sin(k * theta)
        suma = sum(c * trig(k, p) for k, p, c in producto_trig(m, pm, n, pn))
        assert suma == pytest.approx(trig(m, pm) * trig(n, pn), abs=1e-12)

    def test_producto_coincide_con_muestras(self, malla_gruesa):
        r = malla_gruesa.r
        f = CampoPolar(malla_gruesa, {(1, Paridad.COS): PerfilRadial(malla_gruesa, r * bg.G(r)),
                                      (2, Paridad.SIN): PerfilRadial(malla_gruesa, bg.G(r))})
        g = CampoPolar(malla_gruesa, {(0, Paridad.COS): PerfilRadial(malla_gruesa, bg.G(r)),
                                      (3, Paridad.COS): PerfilRadial(malla_gruesa, r ** 3 * bg.G(r))})
        producto = muestrear(producto_campos(f, g), 64)
        assert np.max(np.abs(producto - muestrear(f, 64) * muestrear(g, 64))) < 1e-14

    def test_descomponer_invierte_muestrear(self, malla_gruesa):
        r = malla_gruesa.r
        campo = CampoPolar(malla_gruesa, {(0, Paridad.COS): PerfilRadial(malla_gruesa, bg.G(r)),
                                          (3, Paridad.SIN): PerfilRadial(malla_gruesa, r * bg.G(r))})
        recuperado = descomponer(muestrear(campo, 32), malla_gruesa, 5)
        assert (recuperado - campo).sup() < 1e-14

    def test_integral_polar_de_G(self, malla):
        campo = CampoPolar.modo_unico(0, Paridad.COS, PerfilRadial(malla, bg.G(malla.r)))
        assert integrar_polar(muestrear(campo, 16), malla) == pytest.approx(1.0, abs=1e-12)


class TestSerieEpsDelta:

    def _campo(self, malla, c=1.0):
        return CampoPolar.modo_unico(0, Paridad.COS, PerfilRadial(malla, c * bg.G(malla.r)))

    def test_truncacion_cuenta_terminos(self, malla_gruesa):
        serie = SerieEpsDelta(malla_gruesa, 2, 1, {(3, 0): self._campo(malla_gruesa),
                                                   (0, 2): self._campo(malla_gruesa),
                                                   (1, 1): self._campo(malla_gruesa)})
        assert set(serie.coefs) == {(1, 1)}
        assert serie.truncados == 2

    def test_orden_delta_maximo(self, malla_gruesa):
        with pytest.raises(ErrorConfiguracion):
            SerieEpsDelta(malla_gruesa, 2, 3)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 0.5), st.floats(0.0, 0.1))
    def test_producto_y_evaluacion_conmutan(self, malla_gruesa, eps, delta):
        a = SerieEpsDelta(malla_gruesa, 6, 2, {(0, 0): self._campo(malla_gruesa),
                                               (2, 1): self._campo(malla_gruesa, 3.0)})
        b = SerieEpsDelta(malla_gruesa, 6, 2, {(1, 0): self._campo(malla_gruesa, -2.0),
                                               (3, 0): self._campo(malla_gruesa, 0.5)})
        producto = a.producto(b, producto_campos).evaluar(eps, delta)
        directo = producto_campos(a.evaluar(eps, delta), b.evaluar(eps, delta))
        assert (producto - directo).sup() < 1e-12

    def test_desplazar_y_delta(self, malla_gruesa):
        serie = SerieEpsDelta.constante(self._campo(malla_gruesa), 4)
        movida = serie.desplazar_eps(2).multiplicar_delta()
        assert set(movida.coefs) == {(2, 1)}


def test_exportar_csv_con_metadatos(malla_gruesa, tmp_path):
    ruta = exportar_csv(PerfilRadial(malla_gruesa, bg.G(malla_gruesa.r)), str(tmp_path / 'G.csv'))
    with open(ruta, encoding='utf-8') as archivo:
        assert archivo.readline().startswith('#')
    tabla = pd.read_csv(ruta, comment='#')
    assert list(tabla.columns) == ['r', 'valor']
    assert len(tabla) == malla_gruesa.n_puntos
