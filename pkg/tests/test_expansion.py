import json
import math
from dataclasses import replace

import numpy as np
import pytest

from modulos import base_gaussiana as bg
from modulos.expansion import (
    ConstructorExpansion,
    ajustar_pendiente,
    alpha,
    barrido_residuo,
    cargar_paquete,
    chequeo_theta,
    construir_paquete,
    guardar_paquete,
    relacion_funcional,
    residuo_F2,
    residuo_serie,
    serie_residuo,
    velocidad_gaussiana,
    zeta_app,
    zeta_app_directo,
)
from modulos.modelos import ErrorConfiguracion, Paridad
from modulos.nucleo_polar import momentos

ALPHA = 22.24
EPS_RESIDUO = np.geomspace(0.02, 0.1, 5)


@pytest.fixture(scope='module')
def paquete_m4(malla):
    return construir_paquete(4, malla)


def modos_activos(campo, relativo=1e-9):
    escala = campo.sup()
    return {clave for clave, perfil in campo.items() if perfil.sup() > relativo * escala}


class TestConstruccion:

    def test_orden_minimo(self, malla_gruesa):
        with pytest.raises(ErrorConfiguracion):
            construir_paquete(1, malla_gruesa)

    def test_orden_fuera_de_presupuesto(self, malla_gruesa):
        with pytest.raises(ErrorConfiguracion):
            ConstructorExpansion(malla_gruesa).construir(100)

    def test_estructura_de_omega2(self, paquete_base):
        assert paquete_base.orden == 2
        assert modos_activos(paquete_base.omega_E[2]) == {(2, Paridad.COS)}
        assert modos_activos(paquete_base.omega_NS[2]) == {(2, Paridad.SIN)}

    def test_w2_positivo_e_identidad(self, paquete_base):
        r = paquete_base.malla.r
        w2 = -paquete_base.omega_E[2].modo(2, 'cos').valores
        phi2 = paquete_base.psi_E[2].modo(2, 'cos').valores
        interior = (r > 0) & (r <= 19.0)
        assert np.all(w2[interior] > 0)
        assert np.max(np.abs(w2 - bg.h(r) * (phi2 + r ** 2 / (4.0 * math.pi)))) < 1e-8

    def test_estructura_de_omega3(self, paquete_m3):
        assert modos_activos(paquete_m3.omega_E[3]) == {(3, Paridad.COS)}
        assert modos_activos(paquete_m3.omega_NS[3]) == {(3, Paridad.SIN)}

    def test_momentos_nulos(self, paquete_m5):
        for orden, diagnostico in paquete_m5.diagnosticos['ordenes'].items():
            for parte in ('E', 'NS'):
                assert max(abs(m) for m in diagnostico['momentos_omega'][parte]) < 1e-9, (orden, parte)

    def test_ecuaciones_de_lambda(self, paquete_m5):
        for diagnostico in paquete_m5.diagnosticos['ordenes'].values():
            assert diagnostico['residuo_Lambda_E'] < 1e-8
            assert diagnostico['residuo_Lambda_NS'] < 1e-8

    def test_paridad_de_los_campos_eulerianos(self, paquete_m5):
        for k, campo in paquete_m5.omega_E.items():
            assert campo.paridad_xi2() == 'par', k

    def test_construccion_incremental(self, paquete_base, paquete_m3):
        assert set(paquete_m3.zeta_E) == {1, 2}
        assert paquete_m3.zeta_E[1] == paquete_base.zeta_E[1]


class TestVelocidad:

    def test_alpha(self, paquete_base):
        valor = alpha(paquete_base)
        assert valor > 0
        assert valor == pytest.approx(ALPHA, abs=0.23)

    def test_alpha_independiente_del_orden(self, paquete_base, paquete_m5):
        assert alpha(paquete_m5) == pytest.approx(alpha(paquete_base), rel=1e-12)

    def test_alpha_requiere_orden_dos(self, paquete_gauss):
        with pytest.raises(ErrorConfiguracion):
            alpha(paquete_gauss)

    def test_correcciones_bajas_nulas(self, paquete_m5):
        for k in (1, 2, 3):
            assert abs(paquete_m5.zeta_E[k]) < 1e-7

    def test_zeta4(self, paquete_m5):
        assert paquete_m5.zeta_E[4] == pytest.approx(-2.0 * math.pi * alpha(paquete_m5), rel=1e-4)

    def test_zeta_app(self, paquete_m5):
        assert zeta_app(paquete_m5, 0.0) == 1.0
        esperado = 1.0 - 2.0 * math.pi * alpha(paquete_m5) * 1e-4
        assert zeta_app(paquete_m5, 0.1) == pytest.approx(esperado, abs=1e-9)
        assert zeta_app(paquete_m5, 0.1) == pytest.approx(0.98603, abs=2e-4)

    def test_velocidad_gaussiana(self, malla):
        assert abs(2.0 * math.pi * velocidad_gaussiana(0.05, malla) - 1.0) < 1e-8
        desviaciones = [abs(2.0 * math.pi * velocidad_gaussiana(e, malla) - 1.0) for e in (0.1, 0.15, 0.2)]
        assert desviaciones[0] < 5e-3
        assert desviaciones == sorted(desviaciones)

    def test_velocidad_gaussiana_fuera_de_rango(self):
        with pytest.raises(ErrorConfiguracion):
            velocidad_gaussiana(0.3)

    def test_zeta_directo_gaussiano(self, paquete_gauss):
        assert zeta_app_directo(paquete_gauss, 0.1) / (2.0 * math.pi) == pytest.approx(
            velocidad_gaussiana(0.1, paquete_gauss.malla), rel=1e-14)

    @pytest.mark.lento
    def test_serie_contra_directo(self, paquete_m3):
        eps = np.geomspace(0.02, 0.1, 5)
        diferencias = [abs(zeta_app(paquete_m3, e) - zeta_app_directo(paquete_m3, e)) for e in eps]
        assert ajustar_pendiente(eps, diferencias).pendiente >= paquete_m3.orden - 0.3


class TestResiduo:

    def test_residuo_trivial(self, paquete_gauss):
        malla = paquete_gauss.malla
        coeficiente = serie_residuo(paquete_gauss, 2).coeficiente(2, 0)
        assert (coeficiente - bg.coeficiente_residuo_trivial(malla, 2)).sup() < 1e-9

    def test_momentos_del_residuo(self, paquete_m3):
        reporte = residuo_serie(paquete_m3)
        for (k, j), campo in reporte.serie.coefs.items():
            masa, m1, _ = momentos(campo)
            assert abs(masa) < 1e-9 and abs(m1) < 1e-9, (k, j)

    def test_orden_bajo_consistente(self, paquete_m3):
        reporte = residuo_serie(paquete_m3)
        assert max(reporte.defectos_consistencia.values()) < 1e-6

    def test_pendiente_base(self, paquete_base):
        reporte = barrido_residuo(paquete_base, EPS_RESIDUO)
        assert reporte.ajustes['eps'].pendiente == pytest.approx(3.0, abs=0.15)
        assert reporte.ajustes['eps'].ventana == pytest.approx((0.02, 0.1))

    @pytest.mark.lento
    def test_pendiente_en_delta(self, paquete_base):
        reporte = barrido_residuo(paquete_base, [0.05], np.geomspace(0.1, 1.0, 5), eps_delta=0.05)
        assert reporte.ajustes['delta'].pendiente == pytest.approx(2.0, abs=0.2)

    @pytest.mark.lento
    def test_pendiente_orden_tres(self, paquete_m3):
        reporte = barrido_residuo(paquete_m3, EPS_RESIDUO)
        assert reporte.ajustes['eps'].pendiente == pytest.approx(4.0, abs=0.15)

    @pytest.mark.lento
    def test_pendiente_orden_cuatro(self, paquete_m4):
        reporte = barrido_residuo(paquete_m4, EPS_RESIDUO)
        assert reporte.ajustes['eps'].pendiente == pytest.approx(5.0, abs=0.15)


class TestRelacionFuncional:

    def test_F0_en_forma_cerrada(self, paquete_base):
        tablas = relacion_funcional(paquete_base)
        r = np.sqrt(tablas.rho)
        assert np.max(np.abs(tablas.F[0] - bg.F0(bg.G(r)))) < 1e-12

    def test_F2_nula(self, paquete_base):
        assert residuo_F2(paquete_base) < 1e-8
        tablas = relacion_funcional(paquete_base)
        assert np.max(np.abs(tablas.F[2])) < 1e-8

    def test_evaluacion_de_tablas(self, paquete_m5):
        tablas = relacion_funcional(paquete_m5)
        r = np.sqrt(tablas.rho[::50])
        s = bg.G(r)
        for k in tablas.F:
            if k >= 2:
                assert np.allclose(tablas.evaluar(k, s), tablas.F[k][::50], atol=1e-10)
        assert max(tablas.no_radial.values()) < 1e-3

    def test_theta_base(self, paquete_base):
        reporte = chequeo_theta(paquete_base, np.geomspace(0.03, 0.1, 5))
        assert reporte.ajuste.pendiente == pytest.approx(3.0, abs=0.3)
        assert reporte.exponente_crecimiento == 1

    def test_theta_peso_fuerte_ve_la_velocidad(self, paquete_base):
        # con N = 4 domina el gradiente uniforme de orden ε⁵ en el origen
        reporte = chequeo_theta(paquete_base, np.geomspace(0.03, 0.1, 5), exponente=4)
        assert reporte.ajuste.pendiente > 4.5
        eps, valor = reporte.valores[-1]
        assert valor == pytest.approx(0.5 * ALPHA * eps ** 5, rel=0.3)

    @pytest.mark.lento
    def test_theta_orden_cuatro(self, paquete_m4):
        reporte = chequeo_theta(paquete_m4, np.geomspace(0.03, 0.1, 5))
        assert reporte.ajuste.pendiente == pytest.approx(5.0, abs=0.3)


class TestSerializacion:

    def test_determinista(self, paquete_base, tmp_path):
        a = guardar_paquete(paquete_base, str(tmp_path / 'a.json'))
        b = guardar_paquete(construir_paquete(2, paquete_base.malla), str(tmp_path / 'b.json'))
        with open(a, 'rb') as fa, open(b, 'rb') as fb:
            assert fa.read() == fb.read()

    def test_ida_y_vuelta(self, paquete_base, tmp_path):
        ruta = guardar_paquete(paquete_base, str(tmp_path / 'p.json'))
        cargado = cargar_paquete(ruta)
        assert cargado.orden == paquete_base.orden
        assert cargado.zeta_E == paquete_base.zeta_E
        assert (cargado.omega_E[2] - paquete_base.omega_E[2]).sup() == 0.0
        assert alpha(cargado) == alpha(paquete_base)

    def test_formato_desconocido(self, tmp_path):
        ruta = tmp_path / 'x.json'
        ruta.write_text('{"formato": "otro"}', encoding='utf-8')
        with pytest.raises(ErrorConfiguracion):
            cargar_paquete(str(ruta))

    def test_diagnosticos_con_tipos_numpy(self, paquete_base, tmp_path):
        diagnosticos = {'defectos': np.array([1.0, 2.5]), 'valido': np.bool_(True), (2, 'E'): np.float64(0.5)}
        paquete = replace(paquete_base, diagnosticos=diagnosticos)
        ruta = guardar_paquete(paquete, str(tmp_path / 'p.json'))
        with open(ruta, 'r', encoding='utf-8') as archivo:
            datos = json.load(archivo)
        assert datos['diagnosticos']['defectos'] == [1.0, 2.5]
        assert datos['diagnosticos']['valido'] is True
        assert datos['diagnosticos']["(2, 'E')"] == 0.5
