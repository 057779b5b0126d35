"""
Módulo de campos cartesianos del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional

Ensambla Ω_app, Ψ_app y Φ_app^E sobre mallas cartesianas, construye el
dipolo físico ω_app^ν y extrae curvas de nivel con contourpy.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from contourpy import LineType, contour_generator
from scipy.interpolate import CubicSpline

from .base_gaussiana import G
from .expansion import PaqueteExpansion, serie_corriente, zeta_app
from .modelos import (
    ClaseDecaimiento,
    ErrorConfiguracion,
    ErrorMalla,
    ParametrosDipolo,
    Paridad,
    configurar_logger,
)
from .nucleo_polar import CampoPolar
from .operadores import EvaluadorCorriente, derivada_modo, evaluar_teps_directo
from .reportes import escribir_csv

logger = configurar_logger(__name__)


@dataclass(frozen=True)
class Malla2D:
    """
    Malla cartesiana uniforme [x_min, x_max] × [y_min, y_max]

    Las muestras se indexan como (i, j) ↔ (x_i, y_j).
    """
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx % 2 or self.ny % 2 or self.nx < 4 or self.ny < 4:
            raise ErrorConfiguracion("La resolución debe ser par y ≥ 4",
                                     {'nx': self.nx, 'ny': self.ny})
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ErrorConfiguracion("Extensión vacía de la malla 2D")

    @classmethod
    def centrada(cls, semiancho: float, n: int) -> 'Malla2D':
        return cls(-semiancho, semiancho, -semiancho, semiancho, n, n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    def puntos(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing='ij')

    def a_dict(self) -> Dict[str, float]:
        return {'x_min': self.x_min, 'x_max': self.x_max, 'y_min': self.y_min,
                'y_max': self.y_max, 'nx': self.nx, 'ny': self.ny}


# ----------------------------------------------------------------------
# Evaluación fuera de la malla radial
# ----------------------------------------------------------------------

class EvaluadorVorticidad:
    """
    Evalúa un campo con decaimiento gaussiano en puntos arbitrarios

    Más allá de r_max se prolonga con a(R)(r/R)ⁿ e^{−(r² − R²)/4}.
    """

    def __init__(self, campo: CampoPolar):
        if campo.clase is not ClaseDecaimiento.GAUSSIANA:
            raise ErrorMalla("Sólo los campos gaussianos admiten la prolongación gaussiana")
        self.campo = campo
        self.malla = campo.malla
        r = self.malla.r
        self.splines = {}
        for (n, paridad), perfil in campo.items():
            derivada = derivada_modo(perfil, n)
            self.splines[(n, paridad)] = CubicSpline(
                r, perfil.valores, bc_type=((1, derivada[0]), (1, derivada[-1])))

    def evaluar(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        rho = np.hypot(x1, x2)
        theta = np.arctan2(x2, x1)
        R = self.malla.r_max
        dentro = rho <= R
        salida = np.zeros_like(rho, dtype=float)
        for (n, paridad), spline in self.splines.items():
            radial = np.empty_like(rho, dtype=float)
            radial[dentro] = spline(rho[dentro])
            fuera = ~dentro
            if np.any(fuera):
                radial[fuera] = (float(spline(R)) * (rho[fuera] / R) ** n
                                 * np.exp(-(rho[fuera] ** 2 - R ** 2) / 4.0))
            trig = np.cos(n * theta) if paridad is Paridad.COS else np.sin(n * theta)
            salida += radial * trig
        return salida


def _evaluar_campo(campo: CampoPolar, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    if not campo.modos:
        return np.zeros_like(x1, dtype=float)
    if campo.clase is ClaseDecaimiento.GAUSSIANA:
        return EvaluadorVorticidad(campo).evaluar(x1, x2)
    return EvaluadorCorriente(campo).evaluar(x1, x2)[0]


# ----------------------------------------------------------------------
# Ensamblado
# ----------------------------------------------------------------------

CANTIDADES = ('omega', 'psi', 'phi', 'phi_serie')


def phi_directo(paquete: PaqueteExpansion, eps: float,
                x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Φ_app^E = Ψ − 𝒯_εΨ + εξ₁ζ/(2π) + log(1/ε)/(2π), con 𝒯_ε evaluado por reflexión"""
    evaluador = EvaluadorCorriente(paquete.psi_app(eps))
    psi, _, _ = evaluador.evaluar(x1, x2)
    teps, _, _ = evaluar_teps_directo(evaluador, eps, (x1, x2))
    return (psi - teps + eps * zeta_app(paquete, eps) * x1 / (2.0 * math.pi)
            + math.log(1.0 / eps) / (2.0 * math.pi))


def phi_serie(paquete: PaqueteExpansion, eps: float) -> CampoPolar:
    """Σ ε^k Φ_k con el paquete euleriano"""
    euleriano = replace(paquete, omega_NS={}, psi_NS={}, zeta_NS={})
    return serie_corriente(euleriano, paquete.orden).evaluar(eps)


def ensamblar(objeto: Union[CampoPolar, PaqueteExpansion], eps: float, delta: float,
              malla: Malla2D, cantidad: str = 'omega') -> np.ndarray:
    """
    Muestras cartesianas de un campo polar o de una cantidad del paquete

    Args:
        objeto: CampoPolar (se evalúa tal cual) o PaqueteExpansion
        eps, delta: Parámetros de la expansión
        malla: Malla cartesiana en variables autosemejantes
        cantidad: 'omega', 'psi', 'phi' (directa) o 'phi_serie'

    Returns:
        Array (nx, ny)
    """
    x1, x2 = malla.puntos()
    if isinstance(objeto, CampoPolar):
        return _evaluar_campo(objeto, x1, x2)
    if cantidad not in CANTIDADES:
        raise ErrorConfiguracion("Cantidad desconocida", {'cantidad': cantidad,
                                                          'opciones': list(CANTIDADES)})
    if cantidad == 'omega':
        return _evaluar_campo(objeto.omega_app(eps, delta), x1, x2)
    if cantidad == 'psi':
        return _evaluar_campo(objeto.psi_app(eps, delta), x1, x2)
    if cantidad == 'phi':
        return phi_directo(objeto, eps, x1, x2)
    return _evaluar_campo(phi_serie(objeto, eps), x1, x2)


def dipolo_fisico(parametros: ParametrosDipolo, t: float, Z2: float, malla: Malla2D,
                  paquete: Optional[PaqueteExpansion] = None) -> np.ndarray:
    """
    ω_app^ν(x, t) = −(Γ/νt)Ω(ξ_r) + (Γ/νt)Ω(ξ_ℓ)

    El vórtice derecho, de circulación −Γ, está en (d/2, Z₂); el izquierdo
    es su reflejo. Sin paquete se usa Ω = G.
    """
    if not t > 0:
        raise ErrorConfiguracion("El tiempo debe ser positivo", {'t': t})
    escala = math.sqrt(parametros.viscosidad * t)
    eps = parametros.eps(t)
    x1, x2 = malla.puntos()
    d = parametros.separacion
    xi_r = ((x1 - d / 2.0) / escala, (x2 - Z2) / escala)
    xi_l = ((-x1 - d / 2.0) / escala, (x2 - Z2) / escala)
    if paquete is None:
        omega_r, omega_l = G(np.hypot(*xi_r)), G(np.hypot(*xi_l))
    else:
        evaluador = EvaluadorVorticidad(paquete.omega_app(eps, parametros.delta))
        omega_r, omega_l = evaluador.evaluar(*xi_r), evaluador.evaluar(*xi_l)
    amplitud = parametros.circulacion / (parametros.viscosidad * t)
    return amplitud * (omega_l - omega_r)


def velocidad(psi: np.ndarray, malla: Malla2D) -> Tuple[np.ndarray, np.ndarray]:
    """u = ∇⊥ψ = (−∂₂ψ, ∂₁ψ) por diferencias centradas"""
    d1, d2 = np.gradient(psi, malla.dx, malla.dy, edge_order=2)
    return -d2, d1


def nivel_separatriz(paquete: PaqueteExpansion, eps: float) -> float:
    """Valor constante de Φ_app^E sobre la recta ξ₁ = −1/(2ε)"""
    return -zeta_app(paquete, eps) / (4.0 * math.pi) + math.log(1.0 / eps) / (2.0 * math.pi)


# ----------------------------------------------------------------------
# Curvas de nivel
# ----------------------------------------------------------------------

@dataclass
class Polilinea:
    nivel: float
    puntos: np.ndarray
    cerrada: bool

    @property
    def longitud(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.puntos, axis=0).T)))


def extraer_contornos(muestras: np.ndarray, niveles: Sequence[float],
                      malla: Malla2D) -> List[Polilinea]:
    """
    Curvas de nivel con el generador de contornos de matplotlib (contourpy)

    Args:
        muestras: Array (nx, ny) indexado como la malla
        niveles: Valores de las curvas
        malla: Malla cartesiana de las muestras

    Returns:
        Lista de Polilinea; vacía si ningún nivel corta el campo
    """
    muestras = np.asarray(muestras, dtype=float)
    if muestras.shape != (malla.nx, malla.ny):
        raise ErrorMalla("Muestras y malla 2D incompatibles",
                         {'forma': list(muestras.shape), 'malla': [malla.nx, malla.ny]})
    # contourpy espera z[j, i] ↔ (x_i, y_j)
    generador = contour_generator(malla.x, malla.y, muestras.T, line_type=LineType.Separate)
    salida = []
    for nivel in niveles:
        for puntos in generador.lines(float(nivel)):
            if len(puntos) < 2:
                continue
            cerrada = len(puntos) > 2 and bool(np.allclose(puntos[0], puntos[-1]))
            salida.append(Polilinea(float(nivel), np.asarray(puntos, dtype=float), cerrada))
    logger.debug(f"{len(salida)} polilíneas para {len(niveles)} niveles")
    return salida


# ----------------------------------------------------------------------
# Exportación
# ----------------------------------------------------------------------

def tabla_campo(muestras: np.ndarray, malla: Malla2D, columna: str = 'valor') -> pd.DataFrame:
    x1, x2 = malla.puntos()
    return pd.DataFrame({'x': x1.ravel(), 'y': x2.ravel(), columna: np.asarray(muestras).ravel()})


def exportar_campo_csv(muestras: np.ndarray, malla: Malla2D, ruta: str,
                       metadatos: Optional[Dict] = None) -> str:
    """Columnas (x, y, valor)"""
    return escribir_csv(tabla_campo(muestras, malla), ruta, metadatos)


def tabla_polilineas(polilineas: Sequence[Polilinea]) -> pd.DataFrame:
    filas = []
    for indice, polilinea in enumerate(polilineas):
        for x, y in polilinea.puntos:
            filas.append({'polilinea': indice, 'nivel': polilinea.nivel,
                          'cerrada': polilinea.cerrada, 'x': x, 'y': y})
    return pd.DataFrame(filas, columns=['polilinea', 'nivel', 'cerrada', 'x', 'y'])


def exportar_polilineas_csv(polilineas: Sequence[Polilinea], ruta: str,
                            metadatos: Optional[Dict] = None) -> str:
    """Columnas (polilinea, nivel, cerrada, x, y)"""
    return escribir_csv(tabla_polilineas(polilineas), ruta, metadatos)


def exportar_svg(polilineas: Sequence[Polilinea], generador, nombre: str,
                 eps: Optional[float] = None, separatriz: Optional[float] = None) -> str:
    """Figura de contornos con el centro del vórtice y su reflejo marcados"""
    marcadores = [(0.0, 0.0)]
    titulo = 'Líneas de corriente en el marco comóvil'
    if eps is not None:
        marcadores.append((-1.0 / eps, 0.0))
        titulo += f' (ε = {eps:g})'
    return generador.svg_contornos(list(polilineas), nombre, titulo, marcadores, separatriz)
