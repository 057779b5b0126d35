"""
Módulo de expansión asintótica del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional

Construye por inducción los perfiles Ω_k = Ω_k^E + δΩ_k^NS, las
correcciones ζ_k de la velocidad de traslación, el residuo 𝓡_M en forma
de serie y en forma directa, y la relación funcional Φ + F(Ω) ≈ 0 del
caso no viscoso.
"""

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from config import obtener_config
from . import base_gaussiana as bg
from .modelos import (
    AjustePendiente,
    ClaseDecaimiento,
    ErrorConfiguracion,
    ErrorExpansion,
    ErrorSolvencia,
    Paridad,
    ReporteResiduo,
    ReporteTheta,
    configurar_logger,
)
from .nucleo_polar import (
    CampoPolar,
    MallaRadial,
    PerfilRadial,
    SerieEpsDelta,
    angulos,
    cuadratura_radial,
    integrar_muestras,
    integrar_polar,
    momentos,
    muestrear,
    producto_campos,
)
from .operadores import (
    EvaluadorCorriente,
    aplicar_L,
    aplicar_Lambda,
    biot_savart_modo,
    corchete_poisson,
    evaluar_teps_directo,
    expandir_teps,
    invertir_Lambda_campo,
    matrices_derivada,
    muestrear_gradiente,
    resolver_L_desplazado,
)
from .reportes import convertir_tipos_numpy, escribir_json

logger = configurar_logger(__name__)

LIMITE_NO_RADIAL = 1e-3


# ----------------------------------------------------------------------
# Paquete de expansión
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PaqueteExpansion:
    """
    Perfiles de la expansión hasta el orden M

    Atributos:
        orden: M
        malla: Malla radial común
        omega_E, omega_NS: Ω_k^E y Ω_k^NS por k (k = 0 sólo en omega_E)
        psi_E, psi_NS: Funciones de corriente asociadas
        zeta_E, zeta_NS: ζ_k^E, ζ_k^NS para k = 1..M−1
        diagnosticos: Defectos y verificaciones por orden
    """
    orden: int
    malla: MallaRadial
    omega_E: Dict[int, CampoPolar]
    omega_NS: Dict[int, CampoPolar]
    psi_E: Dict[int, CampoPolar]
    psi_NS: Dict[int, CampoPolar]
    zeta_E: Dict[int, float] = field(default_factory=dict)
    zeta_NS: Dict[int, float] = field(default_factory=dict)
    diagnosticos: Dict[str, Any] = field(default_factory=dict)

    def omega(self, k: int, delta: float = 0.0) -> CampoPolar:
        cero = CampoPolar.cero(self.malla)
        return self.omega_E.get(k, cero) + delta * self.omega_NS.get(k, cero)

    def psi(self, k: int, delta: float = 0.0) -> CampoPolar:
        cero = CampoPolar.cero(self.malla)
        return self.psi_E.get(k, cero) + delta * self.psi_NS.get(k, cero)

    def zeta(self, k: int, delta: float = 0.0) -> float:
        return self.zeta_E.get(k, 0.0) + delta * self.zeta_NS.get(k, 0.0)

    def omega_app(self, eps: float, delta: float = 0.0) -> CampoPolar:
        total = CampoPolar.cero(self.malla)
        for k in range(self.orden + 1):
            total = total + (eps ** k) * self.omega(k, delta)
        return total

    def psi_app(self, eps: float, delta: float = 0.0) -> CampoPolar:
        total = CampoPolar.cero(self.malla)
        for k in range(self.orden + 1):
            total = total + (eps ** k) * self.psi(k, delta)
        return total

    def serie_omega(self, orden_eps: int) -> SerieEpsDelta:
        coefs = {}
        for k, campo in self.omega_E.items():
            coefs[(k, 0)] = campo
        for k, campo in self.omega_NS.items():
            coefs[(k, 1)] = campo
        return SerieEpsDelta(self.malla, orden_eps, 2, coefs)

    def serie_psi(self, orden_eps: int) -> SerieEpsDelta:
        coefs = {}
        for k, campo in self.psi_E.items():
            coefs[(k, 0)] = campo
        for k, campo in self.psi_NS.items():
            coefs[(k, 1)] = campo
        return SerieEpsDelta(self.malla, orden_eps, 2, coefs)


def campo_xi1(malla: MallaRadial, coeficiente: float = 1.0) -> CampoPolar:
    """c·ξ₁ como campo polar con derivada exacta"""
    return CampoPolar.modo_unico(1, Paridad.COS, PerfilRadial.potencia(malla, 1, coeficiente))


def campo_d2G(malla: MallaRadial) -> CampoPolar:
    """∂₂G = −r g sinθ"""
    r = malla.r
    g = bg.g(r)
    perfil = PerfilRadial(malla, -r * g, ClaseDecaimiento.GAUSSIANA, -g + r * r * g / 2.0)
    return CampoPolar.modo_unico(1, Paridad.SIN, perfil)


def _escala_momentos(campo: CampoPolar) -> float:
    total = 0.0
    for (n, _), p in campo.items():
        absoluto = PerfilRadial(p.malla, np.abs(p.valores))
        total += 2.0 * math.pi * (cuadratura_radial(absoluto, 1) + cuadratura_radial(absoluto, 2))
    return total


# ----------------------------------------------------------------------
# Series de corriente y de residuo
# ----------------------------------------------------------------------

def serie_corriente(paquete: PaqueteExpansion, orden_eps: int,
                    teps: Optional[SerieEpsDelta] = None) -> SerieEpsDelta:
    """
    S = Ψ_app − 𝒯_εΨ_app + εξ₁ζ_app/(2π) sin la constante log(1/ε)

    Coeficientes S_m = Ψ_m − Σ_{k+n=m} P_n[Ω_k] + (ξ₁/2π)ζ_{m−1}, con ζ₀ = 1.
    """
    malla = paquete.malla
    if teps is None:
        teps = expandir_teps(paquete.serie_omega(orden_eps), orden_eps).serie
    xi = {(1, 0): campo_xi1(malla, 1.0 / (2.0 * math.pi))}
    for k, z in paquete.zeta_E.items():
        xi[(k + 1, 0)] = campo_xi1(malla, z / (2.0 * math.pi))
    for k, z in paquete.zeta_NS.items():
        xi[(k + 1, 1)] = campo_xi1(malla, z / (2.0 * math.pi))
    termino_xi = SerieEpsDelta(malla, orden_eps, 2, xi)
    return paquete.serie_psi(orden_eps) + (-1.0) * teps + termino_xi


def serie_residuo(paquete: PaqueteExpansion, orden_eps: Optional[int] = None) -> SerieEpsDelta:
    """
    𝓡_M = δ(𝓛Ω_app − t∂_tΩ_app) + {S, Ω_app} como serie en (ε, δ)

    t∂_t actúa como ε∂_ε/2 y multiplica el término ε^k por k/2.
    """
    orden_eps = paquete.orden + 1 if orden_eps is None else orden_eps
    omega = paquete.serie_omega(orden_eps)
    corriente = serie_corriente(paquete, orden_eps)
    corchete = corriente.producto(omega, corchete_poisson)

    difusion = {}
    for (k, j), campo in omega.coefs.items():
        if (k, j) == (0, 0):
            continue
        difusion[(k, j + 1)] = aplicar_L(campo) + (-k / 2.0) * campo
    return corchete + SerieEpsDelta(paquete.malla, orden_eps, 2, difusion)


def _defectos_consistencia(serie: SerieEpsDelta, orden: int) -> Dict[str, float]:
    defectos = {}
    for (k, j), campo in sorted(serie.coefs.items()):
        if k <= orden and j <= 1:
            defectos[f"eps{k}_delta{j}"] = campo.sup()
    return defectos


def residuo_serie(paquete: PaqueteExpansion) -> ReporteResiduo:
    """Forma en serie de 𝓡_M: 𝓗₀, 𝓗₁, residuo δ² y defectos de órdenes bajos"""
    M = paquete.orden
    serie = serie_residuo(paquete, M + 1)
    return ReporteResiduo(
        orden=M,
        serie=serie,
        h0=serie.coeficiente(M + 1, 0),
        h1=serie.coeficiente(M + 1, 1),
        residuo_delta2={k: serie.coeficiente(k, 2) for k in range(M + 2)
                        if (k, 2) in serie.coefs},
        defectos_consistencia=_defectos_consistencia(serie, M),
    )


# ----------------------------------------------------------------------
# Constructor
# ----------------------------------------------------------------------

class ConstructorExpansion:
    """Construcción del paquete de expansión orden a orden"""

    def __init__(self, malla: Optional[MallaRadial] = None):
        self.config = obtener_config()
        self.malla = malla if malla is not None else MallaRadial.por_defecto()
        self.logger = self._configurar_logger()

    def _configurar_logger(self):
        return configurar_logger(__name__)

    def paquete_gaussiano(self) -> PaqueteExpansion:
        """Paquete trivial Ω = G, Ψ = Ψ₀; lleva orden 1 porque Ω₁ ≡ 0"""
        base = bg.perfiles_base(self.malla)
        return PaqueteExpansion(
            orden=1,
            malla=self.malla,
            omega_E={0: base.omega0},
            omega_NS={},
            psi_E={0: base.psi0},
            psi_NS={},
            diagnosticos={'ordenes': {}},
        )

    def construir_base(self) -> PaqueteExpansion:
        """Paquete de orden 2: un paso de inducción desde el paquete gaussiano"""
        return self.paso_induccion(self.paquete_gaussiano())

    def construir(self, orden: int) -> PaqueteExpansion:
        """Paquete hasta el orden dado"""
        if orden < 2:
            raise ErrorConfiguracion("El orden debe ser al menos 2", {'orden': orden})
        self._verificar_orden(orden)
        paquete = self.construir_base()
        while paquete.orden < orden:
            paquete = self.paso_induccion(paquete)
        return paquete

    def _verificar_orden(self, orden: int):
        if orden > 2 * self.config.ORDEN:
            raise ErrorConfiguracion("Orden fuera del presupuesto de precisión",
                                     {'orden': orden, 'maximo': 2 * self.config.ORDEN})
        if orden > self.config.ORDEN:
            self.logger.warning(f"Orden {orden} por encima de ORDEN = {self.config.ORDEN}: "
                                f"la precisión de los perfiles altos puede degradarse")

    def _verificar_momentos(self, nombre: str, campo: CampoPolar, referencia: float) -> Dict[str, float]:
        """Momentos del término fuente relativos a la mayor de su escala y la de Ω₀"""
        masa, m1, m2 = momentos(campo)
        escala = max(_escala_momentos(campo), referencia)
        defectos = {'M': masa, 'm1': m1, 'm2': m2}
        relativos = {k: abs(v) / escala for k, v in defectos.items()}
        if max(relativos.values()) > self.config.TOL_EXPANSION:
            self.logger.error(f"Error de solvencia en {nombre}: {relativos}")
            raise ErrorSolvencia(f"Momentos no nulos en {nombre}",
                                 {'defectos': defectos, 'relativos': relativos})
        return defectos

    def paso_induccion(self, paquete: PaqueteExpansion) -> PaqueteExpansion:
        """
        Pasa del paquete de orden M al de orden M+1

        Args:
            paquete: Paquete internamente consistente de orden M

        Returns:
            PaqueteExpansion de orden M+1
        """
        M = paquete.orden
        N = M + 1
        self._verificar_orden(N)
        malla = paquete.malla
        c = N / 2.0
        self.logger.info(f"Paso de inducción: orden {M} → {N}")

        try:
            serie = serie_residuo(paquete, N)
            h0 = serie.coeficiente(N, 0)
            h1 = serie.coeficiente(N, 1)

            zeta_E = 2.0 * math.pi * momentos(h0)[2]
            zeta_NS = 2.0 * math.pi * momentos(h1)[2]
            d2G = campo_d2G(malla)
            h0t = h0 + (zeta_E / (2.0 * math.pi)) * d2G
            h1t = h1 + (zeta_NS / (2.0 * math.pi)) * d2G

            referencia = _escala_momentos(paquete.omega_E[0])
            momentos_h0 = self._verificar_momentos("𝓗̃₀", h0t, referencia)
            momentos_h1 = self._verificar_momentos("𝓗̃₁", h1t, referencia)

            # 𝓗₀ es impar en ξ₂ y 𝓗₁ par
            paridad_h0 = h0t.filtrar(Paridad.COS).sup()
            paridad_h1 = h1t.filtrar(Paridad.SIN).sup()
            if max(paridad_h0, paridad_h1) > self.config.TOL_EXPANSION * max(h0t.sup(), h1t.sup(), 1e-300):
                self.logger.warning(f"Defecto de paridad en el orden {N}: "
                                    f"{paridad_h0:.3e}, {paridad_h1:.3e}")
            h0t = h0t.filtrar(Paridad.SIN)
            h1t = h1t.filtrar(Paridad.COS)

            # Pieza radial E,0
            radial = h1t.radial()
            if radial.modos and not radial.modo(0, Paridad.COS).es_cero:
                u = resolver_L_desplazado(0, Paridad.COS, c, -radial.modo(0, Paridad.COS))
                omega_E0 = CampoPolar.modo_unico(0, Paridad.COS, u)
                psi_E0 = CampoPolar.modo_unico(0, Paridad.COS, biot_savart_modo(0, Paridad.COS, u))
            else:
                omega_E0 = CampoPolar.cero(malla)
                psi_E0 = CampoPolar.cero(malla)

            # Pieza E,1: ΛΩ = −𝓗̃₀
            omega_E1, psi_E1, rep_E1 = invertir_Lambda_campo(-1.0 * h0t.limpiar())

            # Pieza NS: ΛΩ = −[(1 − 𝒫₀)𝓗̃₁ + (𝓛 − c)Ω^{E,1}]
            fuente_NS = h1t.sin_radial() + aplicar_L(omega_E1) + (-c) * omega_E1
            fuente_NS = fuente_NS.filtrar(Paridad.COS).limpiar()
            omega_NS, psi_NS, rep_NS = invertir_Lambda_campo(-1.0 * fuente_NS)

        except ErrorSolvencia:
            raise
        except Exception as e:
            self.logger.error(f"Error en el paso de inducción {M} → {N}: {str(e)}")
            raise

        omega_E_nuevo = (omega_E0 + omega_E1).limpiar()
        psi_E_nuevo = (psi_E0 + psi_E1).limpiar()

        residuo_E1 = (aplicar_Lambda(omega_E1) + h0t).sup()
        residuo_NS = (aplicar_Lambda(omega_NS) - fuente_NS).sup() if omega_NS.modos else 0.0
        reportes = rep_E1 + rep_NS
        diagnostico = {
            'zeta_E': zeta_E,
            'zeta_NS': zeta_NS,
            'momentos_h0': momentos_h0,
            'momentos_h1': momentos_h1,
            'paridad_h0': paridad_h0,
            'paridad_h1': paridad_h1,
            'defectos_consistencia': _defectos_consistencia(serie, M),
            'truncados': serie.truncados,
            'radial_E': omega_E0.sup(),
            'residuo_Lambda_E': residuo_E1,
            'residuo_Lambda_NS': residuo_NS,
            'condicion_max': max((rep.condicion or 0.0 for rep in reportes), default=0.0),
            'defectos_n1': [rep.defecto for rep in reportes if rep.defecto is not None],
            'momentos_omega': {
                'E': list(momentos(omega_E_nuevo)),
                'NS': list(momentos(omega_NS)),
            },
        }
        for nombre, valor in diagnostico['defectos_consistencia'].items():
            if valor > self.config.TOL_EXPANSION:
                self.logger.warning(f"Coeficiente {nombre} del residuo no nulo: {valor:.3e}")

        diagnosticos = dict(paquete.diagnosticos)
        ordenes = dict(diagnosticos.get('ordenes', {}))
        ordenes[N] = diagnostico
        diagnosticos['ordenes'] = ordenes
        self.logger.info(f"Orden {N}: ζ_{M}^E = {zeta_E:.10g}, ζ_{M}^NS = {zeta_NS:.3e}")

        return PaqueteExpansion(
            orden=N,
            malla=malla,
            omega_E={**paquete.omega_E, N: omega_E_nuevo},
            omega_NS={**paquete.omega_NS, N: omega_NS.limpiar()},
            psi_E={**paquete.psi_E, N: psi_E_nuevo},
            psi_NS={**paquete.psi_NS, N: psi_NS.limpiar()},
            zeta_E={**paquete.zeta_E, M: zeta_E},
            zeta_NS={**paquete.zeta_NS, M: zeta_NS},
            diagnosticos=diagnosticos,
        )


def paquete_gaussiano(malla: Optional[MallaRadial] = None) -> PaqueteExpansion:
    return ConstructorExpansion(malla).paquete_gaussiano()


def construir_base(malla: Optional[MallaRadial] = None) -> PaqueteExpansion:
    return ConstructorExpansion(malla).construir_base()


def construir_paquete(orden: int, malla: Optional[MallaRadial] = None) -> PaqueteExpansion:
    return ConstructorExpansion(malla).construir(orden)


def paso_induccion(paquete: PaqueteExpansion) -> PaqueteExpansion:
    return ConstructorExpansion(paquete.malla).paso_induccion(paquete)


# ----------------------------------------------------------------------
# α y velocidad de traslación
# ----------------------------------------------------------------------

def alpha(paquete: PaqueteExpansion, tolerancia: float = 1e-8) -> float:
    """
    α = ∫ r³𝗐₂ dr con Ω₂^E = −𝗐₂ cos(2θ)

    Se contrasta con (1/π)∫(ξ₂² − ξ₁²)Ω₂ dξ en la malla polar.

    Raises:
        ErrorExpansion: si ambas fórmulas difieren más que la tolerancia relativa
    """
    if paquete.orden < 2:
        raise ErrorConfiguracion("α requiere un paquete de orden ≥ 2")
    omega2 = paquete.omega_E[2]
    w2 = -1.0 * omega2.modo(2, Paridad.COS)
    valor = cuadratura_radial(w2, 3)

    n_theta = obtener_config().N_THETA
    theta = angulos(n_theta)
    r = paquete.malla.r
    peso = -np.outer(r ** 2, np.cos(2.0 * theta))
    polar = integrar_polar(peso * muestrear(omega2, n_theta), paquete.malla) / math.pi
    if abs(polar - valor) > tolerancia * abs(valor):
        raise ErrorExpansion("Las dos fórmulas de α no coinciden",
                             {'radial': valor, 'polar': polar})
    return valor


def zeta_app(paquete: PaqueteExpansion, eps: float, delta: float = 0.0) -> float:
    """1 + Σ_{k=1}^{M−1} ζ_k ε^k"""
    return 1.0 + math.fsum((eps ** k) * paquete.zeta(k, delta)
                           for k in range(1, paquete.orden))


def _puntos_polares(malla: MallaRadial, radio: float, n_theta: int):
    indice = malla.indice_corte(radio)
    r = malla.r[:indice + 1]
    theta = angulos(n_theta)
    R, T = np.meshgrid(r, theta, indexing='ij')
    return indice, R * np.cos(T), R * np.sin(T)


def _integrar_filas(muestras: np.ndarray, malla: MallaRadial, indice: int) -> float:
    n_theta = muestras.shape[1]
    radial = muestras.sum(axis=1) * (2.0 * math.pi / n_theta)
    return integrar_muestras(radial * malla.r[:indice + 1], malla.h)


def zeta_app_directo(paquete: PaqueteExpansion, eps: float, delta: float = 0.0,
                     n_theta: Optional[int] = None) -> float:
    """(2π/ε)∫ ∂₁𝒯_εΨ_app Ω_app dξ con 𝒯_ε evaluado directamente"""
    cfg = obtener_config()
    n_theta = cfg.N_THETA if n_theta is None else n_theta
    malla = paquete.malla
    indice, x1, x2 = _puntos_polares(malla, cfg.RADIO_SOPORTE, n_theta)
    evaluador = EvaluadorCorriente(paquete.psi_app(eps, delta))
    _, d1, _ = evaluar_teps_directo(evaluador, eps, (x1, x2))
    omega = muestrear(paquete.omega_app(eps, delta), n_theta)[:indice + 1]
    return 2.0 * math.pi / eps * _integrar_filas(d1 * omega, malla, indice)


def velocidad_gaussiana(eps: float, malla: Optional[MallaRadial] = None) -> float:
    """(d/Γ)Z₂' del vórtice gaussiano: ζ directo del paquete gaussiano dividido por 2π"""
    if not 0.0 < eps <= 0.2:
        raise ErrorConfiguracion("ε debe estar en (0, 0.2]", {'eps': eps})
    return zeta_app_directo(paquete_gaussiano(malla), eps) / (2.0 * math.pi)


def ajustar_pendiente(xs: Sequence[float], ys: Sequence[float]) -> AjustePendiente:
    """Pendiente log–log por mínimos cuadrados"""
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    if xs.size < 2:
        raise ErrorConfiguracion("Se necesitan al menos dos muestras para ajustar una pendiente")
    pendiente, ordenada = np.polyfit(np.log(xs), np.log(ys), 1)
    return AjustePendiente(float(pendiente), float(ordenada), (float(xs.min()), float(xs.max())),
                           [(float(x), float(y)) for x, y in zip(xs, ys)])


# ----------------------------------------------------------------------
# Residuo directo
# ----------------------------------------------------------------------

def residuo_directo(paquete: PaqueteExpansion, eps: float, delta: float = 0.0,
                    radio: Optional[float] = None, n_theta: Optional[int] = None
                    ) -> Tuple[np.ndarray, float]:
    """
    𝓡_M evaluado en (ε, δ) concretos sobre la malla polar

    Returns:
        Tuple (muestras, norma) con la norma 𝒴 en |ξ| ≤ min(1/(2ε), RADIO_NORMA_Y)
    """
    cfg = obtener_config()
    n_theta = cfg.N_THETA if n_theta is None else n_theta
    malla = paquete.malla
    radio = min(1.0 / (2.0 * eps), cfg.RADIO_NORMA_Y) if radio is None else radio
    indice, x1, x2 = _puntos_polares(malla, radio, n_theta)

    omega = paquete.omega_app(eps, delta)
    psi = paquete.psi_app(eps, delta)
    arrastre = campo_xi1(malla, eps * zeta_app(paquete, eps, delta) / (2.0 * math.pi))

    polar = corchete_poisson(psi + arrastre, omega)
    derivada_t = CampoPolar.cero(malla)
    for k in range(1, paquete.orden + 1):
        derivada_t = derivada_t + (k / 2.0 * eps ** k) * paquete.omega(k, delta)
    polar = polar + delta * (aplicar_L(omega) - derivada_t)
    muestras = muestrear(polar, n_theta)[:indice + 1]

    _, t1, t2 = evaluar_teps_directo(EvaluadorCorriente(psi), eps, (x1, x2))
    o1, o2 = muestrear_gradiente(omega, n_theta)
    muestras = muestras - (t1 * o2[:indice + 1] - t2 * o1[:indice + 1])

    r = malla.r[:indice + 1]
    peso = np.exp(r ** 2 / 4.0)[:, None]
    norma = math.sqrt(max(_integrar_filas(muestras ** 2 * peso, malla, indice), 0.0))
    return muestras, norma


def barrido_residuo(paquete: PaqueteExpansion, eps_lista: Sequence[float],
                    delta_lista: Sequence[float] = (0.0,), eps_delta: float = 0.05
                    ) -> ReporteResiduo:
    """
    Normas del residuo directo y pendientes ajustadas en ε y δ

    La pendiente en δ se ajusta sobre ‖𝓡(ε, δ) − 𝓡(ε, 0)‖ a ε fijo.
    """
    reporte = residuo_serie(paquete)
    normas_eps = []
    for eps in eps_lista:
        _, norma = residuo_directo(paquete, eps, 0.0)
        normas_eps.append(norma)
        reporte.normas.append({'eps': eps, 'delta': 0.0, 'norma': norma})
    if len(eps_lista) >= 2:
        reporte.ajustes['eps'] = ajustar_pendiente(eps_lista, normas_eps)

    deltas = [d for d in delta_lista if d > 0]
    if deltas:
        base, _ = residuo_directo(paquete, eps_delta, 0.0)
        radio = min(1.0 / (2.0 * eps_delta), obtener_config().RADIO_NORMA_Y)
        malla = paquete.malla
        indice = malla.indice_corte(radio)
        peso = np.exp(malla.r[:indice + 1] ** 2 / 4.0)[:, None]
        diferencias = []
        for delta in deltas:
            muestras, norma = residuo_directo(paquete, eps_delta, delta)
            diferencia = math.sqrt(max(_integrar_filas((muestras - base) ** 2 * peso, malla, indice), 0.0))
            diferencias.append(diferencia)
            reporte.normas.append({'eps': eps_delta, 'delta': delta, 'norma': norma,
                                   'diferencia': diferencia})
        if len(deltas) >= 2:
            reporte.ajustes['delta'] = ajustar_pendiente(deltas, diferencias)
    return reporte


# ----------------------------------------------------------------------
# Relación funcional
# ----------------------------------------------------------------------

@dataclass
class TablasRelacion:
    """
    Tablas F_k(G(r)) de la relación funcional sobre ρ = −4 log(4πs) = r²

    Atributos:
        orden: M del paquete
        radio: Radio máximo de validez de las tablas
        rho: Nodos ρ_i = r_i²
        F: F_k(G(r_i)) por k (k = 0 es la forma cerrada)
        no_radial: Parte no radial relativa de 𝒜_k en r ≤ radio
    """
    orden: int
    radio: float
    rho: np.ndarray
    F: Dict[int, np.ndarray] = field(default_factory=dict)
    no_radial: Dict[int, float] = field(default_factory=dict)
    _splines: Dict[int, CubicSpline] = field(default_factory=dict, repr=False)

    def _spline(self, k: int) -> CubicSpline:
        if k not in self._splines:
            self._splines[k] = CubicSpline(self.rho, self.F[k])
        return self._splines[k]

    def evaluar(self, k: int, s: np.ndarray) -> np.ndarray:
        """F_k(s); F₀ usa la forma cerrada prolongada"""
        s = np.asarray(s, dtype=float)
        if k == 0:
            return F0_prolongada(s)
        return self._spline(k)(-4.0 * np.log(4.0 * math.pi * s))

    def derivada(self, k: int, s: np.ndarray) -> np.ndarray:
        """F_k'(s) = (dF_k/dρ)(−4/s)"""
        s = np.asarray(s, dtype=float)
        if k == 0:
            return bg.dF0(s)
        return self._spline(k)(-4.0 * np.log(4.0 * math.pi * s), 1) * (-4.0 / s)

    def F_total(self, s: np.ndarray, eps: float) -> np.ndarray:
        total = self.evaluar(0, s)
        for k in sorted(self.F):
            if k >= 2:
                total = total + eps ** k * self.evaluar(k, s)
        return total

    def derivada_total(self, s: np.ndarray, eps: float) -> np.ndarray:
        total = self.derivada(0, s)
        for k in sorted(self.F):
            if k >= 2:
                total = total + eps ** k * self.derivada(k, s)
        return total


def F0_prolongada(s: np.ndarray) -> np.ndarray:
    """F₀ con Ein prolongado a s > 1/(4π)"""
    s = np.asarray(s, dtype=float)
    L = np.log(1.0 / (4.0 * math.pi * s))
    return (bg.GAMMA_E - bg.ein(L)) / (4.0 * math.pi)


def _siguiente_F(valores: np.ndarray, m: int, malla: MallaRadial) -> np.ndarray:
    """𝓕_{m+1} = −m𝓕_m − (2/r)𝓕_m'; en r = 0 el límite es −m𝓕 − 2𝓕''"""
    D1, D2 = matrices_derivada(malla.n_puntos, malla.h)
    r = malla.r
    derivada = D1 @ valores
    salida = np.empty_like(valores)
    salida[1:] = -m * valores[1:] - 2.0 * derivada[1:] / r[1:]
    salida[0] = -m * valores[0] - 2.0 * (D2 @ valores)[0]
    return salida


def relacion_funcional(paquete: PaqueteExpansion) -> TablasRelacion:
    """
    Construye F = F₀ + Σ ε^k F_k con Π_M(Φ_app^E + F(Ω_app^E)) = 0

    F_k = −𝒫₀𝒜_k, donde 𝒜_k es el coeficiente ε^k de
    Φ + Σ_j ε^j Σ_m 𝓕_{j,m} X^m/m! sin el término F_k(Ω₀).

    Raises:
        ErrorExpansion: si la parte no radial de algún 𝒜_k supera el límite
    """
    cfg = obtener_config()
    M = paquete.orden
    malla = paquete.malla
    r = malla.r
    radio = cfg.RADIO_RELACION
    corte = malla.indice_corte(radio)
    corte_trabajo = malla.indice_corte(radio + 2.0)
    mascara = (np.arange(malla.n_puntos) <= corte_trabajo).astype(float)

    # Serie δ⁰ de Φ y de X = Σ ε^i Ω_i/G
    paquete_E = replace(paquete, omega_NS={}, psi_NS={}, zeta_NS={})
    phi = serie_corriente(paquete_E, M)
    inverso_G = np.where(mascara > 0, 1.0 / bg.G(r), 0.0)
    perfil_inverso_G = PerfilRadial(malla, inverso_G, ClaseDecaimiento.ACOTADA)
    X = {}
    for i in range(2, M + 1):
        if i in paquete.omega_E:
            X[(i, 0)] = paquete.omega_E[i].por_radial(perfil_inverso_G).con_clase(ClaseDecaimiento.ACOTADA)
    serie_X = SerieEpsDelta(malla, M, 0, X)

    # Potencias X^m/m!
    potencias = {1: serie_X}
    m = 1
    while 2 * (m + 1) <= M:
        potencias[m + 1] = potencias[m].producto(serie_X, producto_campos) * (1.0 / (m + 1))
        m += 1

    # 𝓕_{j,m} en la malla
    tabla_F: Dict[int, Dict[int, np.ndarray]] = {0: {1: 2.0 * bg.v0(r) * mascara}}
    for m in range(1, max(potencias) if potencias else 1):
        tabla_F[0][m + 1] = _siguiente_F(tabla_F[0][m], m, malla) * mascara

    tablas = TablasRelacion(orden=M, radio=radio, rho=r[:corte + 1] ** 2)
    tablas.F[0] = bg.F0(bg.G(r[:corte + 1]))

    for k in range(2, M + 1):
        A_k = phi.coeficiente(k, 0)
        for j, derivadas in tabla_F.items():
            for m, F_jm in derivadas.items():
                if m not in potencias or k - j < 2 * m:
                    continue
                termino = potencias[m].coeficiente(k - j, 0)
                if termino.modos:
                    A_k = A_k + termino.por_radial(PerfilRadial(malla, F_jm, ClaseDecaimiento.ACOTADA))

        radial = A_k.modo(0, Paridad.COS).valores * mascara
        no_radial = max((float(np.max(np.abs(p.valores[:corte + 1])))
                         for (n, _), p in A_k.items() if n != 0), default=0.0)
        # escala: el mayor modo de Φ_k o la parte radial de 𝒜_k
        escala = max([float(np.max(np.abs(p.valores[:corte + 1])))
                      for p in phi.coeficiente(k, 0).modos.values()]
                     + [float(np.max(np.abs(radial[:corte + 1]))), 1e-300])
        relativo = no_radial / escala
        tablas.no_radial[k] = relativo
        if relativo > LIMITE_NO_RADIAL:
            logger.error(f"Error en la relación funcional: 𝒜_{k} no radial ({relativo:.3e})")
            raise ErrorExpansion(f"Parte no radial de 𝒜_{k} por encima del límite",
                                 {'k': k, 'relativo': relativo})
        if relativo > cfg.TOL_EXPANSION:
            logger.warning(f"Residuo no radial de 𝒜_{k}: {relativo:.3e}")

        F_k = -radial
        tablas.F[k] = F_k[:corte + 1].copy()
        tabla_F[k] = {0: F_k}
        for m in range(0, max(potencias) if potencias else 0):
            tabla_F[k][m + 1] = _siguiente_F(tabla_F[k][m], m, malla) * mascara
        tabla_F[k].pop(0)
    return tablas


def residuo_F2(paquete: PaqueteExpansion, radio: Optional[float] = None) -> float:
    """sup |Ψ₂^E + r² cos(2θ)/(4π) + A Ω₂^E| en r ≤ radio"""
    radio = obtener_config().RADIO_RELACION if radio is None else radio
    malla = paquete.malla
    corte = malla.indice_corte(radio)
    r = malla.r[:corte + 1]
    psi2 = paquete.psi_E[2]
    omega2 = paquete.omega_E[2]
    total = 0.0
    for clave in set(psi2.modos) | set(omega2.modos) | {(2, Paridad.COS)}:
        valores = psi2.modo(*clave).valores[:corte + 1] + bg.A(r) * omega2.modo(*clave).valores[:corte + 1]
        if clave == (2, Paridad.COS):
            valores = valores + r ** 2 / (4.0 * math.pi)
        total += float(np.max(np.abs(valores)))
    return total


def exponente_crecimiento(orden: int) -> int:
    """
    Peso (1+|ξ|)^N usado por chequeo_theta.

    El término ε^{M+1} de 𝒯_εΨ₀ crece como |ξ|^M, mientras que la corrección
    de velocidad ζ₄ ausente del paquete deja un gradiente uniforme ≈ (α/2)ε⁵
    en el origen. Con N = 2M − 3 el primero domina en ε ∈ [0.03, 0.1] para
    M = 2 y el segundo es el propio término ε^{M+1} para M = 4.
    """
    return max(1, 2 * orden - 3)


def chequeo_theta(paquete: PaqueteExpansion, eps_lista: Sequence[float],
                  tablas: Optional[TablasRelacion] = None,
                  exponente: Optional[int] = None,
                  n_theta: Optional[int] = None) -> ReporteTheta:
    """
    Escalamiento de sup_{|ξ|≤2ε^{−σ₁}} |∇(Φ_app^E + F(Ω_app^E))|/(1+|ξ|)^N

    N = exponente_crecimiento(M) por defecto; también se informa el N ajustado
    al menor ε.
    """
    cfg = obtener_config()
    n_theta = cfg.N_THETA if n_theta is None else n_theta
    M = paquete.orden
    N = exponente_crecimiento(M) if exponente is None else exponente
    tablas = relacion_funcional(paquete) if tablas is None else tablas
    malla = paquete.malla
    reporte = ReporteTheta(orden=M, exponente_crecimiento=N)
    perfil_minimo = None

    for eps in eps_lista:
        radio = min(2.0 * eps ** (-cfg.SIGMA1), tablas.radio)
        indice, x1, x2 = _puntos_polares(malla, radio, n_theta)
        r = malla.r[:indice + 1]
        psi = paquete.psi_app(eps)
        omega = muestrear(paquete.omega_app(eps), n_theta)[:indice + 1]
        teps, _, _ = evaluar_teps_directo(EvaluadorCorriente(psi), eps, (x1, x2))
        zeta = zeta_app(paquete, eps)
        theta_campo = (muestrear(psi, n_theta)[:indice + 1] - teps
                       + eps * zeta * x1 / (2.0 * math.pi)
                       + math.log(1.0 / eps) / (2.0 * math.pi)
                       + tablas.F_total(omega, eps))
        d_r = np.gradient(theta_campo, malla.h, axis=0, edge_order=2)
        extendido = np.concatenate([theta_campo[:, -1:], theta_campo, theta_campo[:, :1]], axis=1)
        d_t = np.gradient(extendido, 2.0 * math.pi / n_theta, axis=1)[:, 1:-1]
        with np.errstate(divide='ignore', invalid='ignore'):
            d_t_r = np.where(r[:, None] > 0, d_t / r[:, None], 0.0)
        gradiente = np.sqrt(d_r ** 2 + d_t_r ** 2)
        por_radio = np.max(gradiente, axis=1)
        valor = float(np.max(por_radio / (1.0 + r) ** N))
        reporte.valores.append((float(eps), valor))
        if perfil_minimo is None or eps < perfil_minimo[0]:
            perfil_minimo = (eps, r, por_radio)

    if len(reporte.valores) >= 2:
        xs, ys = zip(*reporte.valores)
        reporte.ajuste = ajustar_pendiente(xs, ys)
    if perfil_minimo is not None:
        _, r, por_radio = perfil_minimo
        seleccion = (r >= 1.0) & (por_radio > 0)
        if np.count_nonzero(seleccion) >= 2:
            reporte.exponente_ajustado = float(np.polyfit(np.log(1.0 + r[seleccion]),
                                                          np.log(por_radio[seleccion]), 1)[0])
    return reporte


# ----------------------------------------------------------------------
# Serialización
# ----------------------------------------------------------------------

def _campo_a_dict(campo: CampoPolar) -> Dict[str, Any]:
    return {
        f"{n}:{paridad.value}": {'clase': p.clase.value, 'valores': p.valores.tolist()}
        for (n, paridad), p in campo.items()
    }


def _campo_desde_dict(malla: MallaRadial, datos: Dict[str, Any]) -> CampoPolar:
    modos = {}
    for clave, perfil in datos.items():
        n, paridad = clave.split(':')
        modos[(int(n), Paridad.from_string(paridad))] = PerfilRadial(
            malla, np.array(perfil['valores'], dtype=float), perfil['clase'])
    return CampoPolar(malla, modos)


def paquete_a_dict(paquete: PaqueteExpansion, tablas: Optional[TablasRelacion] = None,
                   metadatos: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Documento versionado del paquete"""
    documento = {
        'formato': obtener_config().FORMATO_PAQUETE,
        'orden': paquete.orden,
        'malla': paquete.malla.a_dict(),
        'zeta': {
            'E': {str(k): v for k, v in sorted(paquete.zeta_E.items())},
            'NS': {str(k): v for k, v in sorted(paquete.zeta_NS.items())},
        },
        'perfiles': {
            'omega_E': {str(k): _campo_a_dict(c) for k, c in sorted(paquete.omega_E.items()) if k > 0},
            'omega_NS': {str(k): _campo_a_dict(c) for k, c in sorted(paquete.omega_NS.items())},
            'psi_E': {str(k): _campo_a_dict(c) for k, c in sorted(paquete.psi_E.items()) if k > 0},
            'psi_NS': {str(k): _campo_a_dict(c) for k, c in sorted(paquete.psi_NS.items())},
        },
        'diagnosticos': convertir_tipos_numpy(paquete.diagnosticos),
    }
    if tablas is not None:
        documento['relacion_funcional'] = {
            'radio': tablas.radio,
            'rho': tablas.rho.tolist(),
            'F': {str(k): v.tolist() for k, v in sorted(tablas.F.items())},
            'no_radial': {str(k): v for k, v in sorted(tablas.no_radial.items())},
        }
    if metadatos is not None:
        documento['metadatos'] = convertir_tipos_numpy(metadatos)
    return documento


def guardar_paquete(paquete: PaqueteExpansion, ruta: str, **kwargs) -> str:
    return escribir_json(paquete_a_dict(paquete, **kwargs), ruta)


def cargar_paquete(ruta: str) -> PaqueteExpansion:
    """
    Reconstruye un paquete desde su documento JSON

    Raises:
        ErrorConfiguracion: si el formato no es el esperado
    """
    with open(ruta, 'r', encoding='utf-8') as archivo:
        datos = json.load(archivo)
    formato = obtener_config().FORMATO_PAQUETE
    if datos.get('formato') != formato:
        raise ErrorConfiguracion("Formato de paquete desconocido",
                                 {'esperado': formato, 'encontrado': datos.get('formato')})
    malla = MallaRadial(datos['malla']['r_max'], datos['malla']['n_puntos'])
    base = bg.perfiles_base(malla)
    perfiles = datos['perfiles']

    def campos(nombre):
        return {int(k): _campo_desde_dict(malla, v) for k, v in perfiles[nombre].items()}

    return PaqueteExpansion(
        orden=int(datos['orden']),
        malla=malla,
        omega_E={0: base.omega0, **campos('omega_E')},
        omega_NS=campos('omega_NS'),
        psi_E={0: base.psi0, **campos('psi_E')},
        psi_NS=campos('psi_NS'),
        zeta_E={int(k): v for k, v in datos['zeta']['E'].items()},
        zeta_NS={int(k): v for k, v in datos['zeta']['NS'].items()},
        diagnosticos=datos.get('diagnosticos', {}),
    )
