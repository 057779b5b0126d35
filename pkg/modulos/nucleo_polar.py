"""
Módulo núcleo polar: mallas radiales, campos por modos angulares,
cuadraturas, momentos y normas ponderadas
Grupo de Mecánica de Fluidos Computacional

Un campo plano se representa como una suma finita
Σ a_n(r) cos(nθ) + b_n(r) sin(nθ); todos los demás módulos trabajan
sobre esta representación.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import newton_cotes

from config import obtener_config
from .modelos import (
    ClaseDecaimiento,
    ErrorConfiguracion,
    ErrorDecaimiento,
    ErrorMalla,
    Paridad,
    configurar_logger,
)
from .reportes import escribir_csv, metadatos_base

logger = configurar_logger(__name__)

Clave = Tuple[int, Paridad]


# ----------------------------------------------------------------------
# Malla radial
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MallaRadial:
    """Malla uniforme 0 = r_0 < r_1 < ... < r_{N-1} = r_max"""
    r_max: float = 25.0
    n_puntos: int = 4096

    def __post_init__(self):
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ErrorConfiguracion("r_max debe ser positivo", {'r_max': self.r_max})
        if int(self.n_puntos) != self.n_puntos or self.n_puntos < 16:
            raise ErrorConfiguracion("n_puntos debe ser un entero ≥ 16",
                                     {'n_puntos': self.n_puntos})

    @property
    def h(self) -> float:
        return self.r_max / (self.n_puntos - 1)

    @property
    def r(self) -> np.ndarray:
        return _nodos(self.r_max, self.n_puntos)

    def indice_corte(self, radio: float) -> int:
        """Último índice con r_i ≤ radio"""
        return int(min(self.n_puntos - 1, math.floor(radio / self.h + 1e-9)))

    def a_dict(self) -> Dict[str, float]:
        return {'r_max': self.r_max, 'n_puntos': self.n_puntos}

    @classmethod
    def por_defecto(cls) -> 'MallaRadial':
        cfg = obtener_config()
        return cls(cfg.R_MAX, cfg.N_PUNTOS)


@lru_cache(maxsize=16)
def _nodos(r_max: float, n: int) -> np.ndarray:
    r = np.linspace(0.0, r_max, n)
    r.flags.writeable = False
    return r


def _verificar_malla(a: MallaRadial, b: MallaRadial):
    if a != b:
        raise ErrorMalla("Mallas incompatibles", {'a': a.a_dict(), 'b': b.a_dict()})


# ----------------------------------------------------------------------
# Perfil radial
# ----------------------------------------------------------------------

def _clase_suma(a: ClaseDecaimiento, b: ClaseDecaimiento) -> ClaseDecaimiento:
    if ClaseDecaimiento.POLINOMICA in (a, b):
        return ClaseDecaimiento.POLINOMICA
    if ClaseDecaimiento.ACOTADA in (a, b):
        return ClaseDecaimiento.ACOTADA
    return ClaseDecaimiento.GAUSSIANA


@dataclass(frozen=True, eq=False)
class PerfilRadial:
    """
    Función real a(r) muestreada en una malla radial

    Args:
        malla: Malla radial
        valores: Muestras a(r_i)
        clase: Clase de decaimiento
        derivada: Derivada exacta a'(r_i), si se conoce
    """
    malla: MallaRadial
    valores: np.ndarray
    clase: ClaseDecaimiento = ClaseDecaimiento.GAUSSIANA
    derivada: Optional[np.ndarray] = None

    def __post_init__(self):
        valores = np.array(self.valores, dtype=float)
        if valores.shape != (self.malla.n_puntos,):
            raise ErrorMalla("Longitud de valores distinta de n_puntos",
                             {'longitud': int(valores.size), 'n_puntos': self.malla.n_puntos})
        valores.flags.writeable = False
        object.__setattr__(self, 'valores', valores)
        if self.derivada is not None:
            derivada = np.array(self.derivada, dtype=float)
            derivada.flags.writeable = False
            object.__setattr__(self, 'derivada', derivada)
        object.__setattr__(self, 'clase', ClaseDecaimiento.from_string(self.clase))

    @classmethod
    def desde_funcion(cls, malla: MallaRadial, funcion: Callable[[np.ndarray], np.ndarray],
                      clase=ClaseDecaimiento.GAUSSIANA,
                      derivada: Optional[Callable[[np.ndarray], np.ndarray]] = None
                      ) -> 'PerfilRadial':
        r = malla.r
        return cls(malla, funcion(r), clase, derivada(r) if derivada is not None else None)

    @classmethod
    def cero(cls, malla: MallaRadial) -> 'PerfilRadial':
        return cls(malla, np.zeros(malla.n_puntos), ClaseDecaimiento.GAUSSIANA,
                   np.zeros(malla.n_puntos))

    @classmethod
    def potencia(cls, malla: MallaRadial, k: int, coeficiente: float = 1.0) -> 'PerfilRadial':
        """Perfil polinómico c·r^k con derivada exacta"""
        r = malla.r
        valores = coeficiente * r ** k
        derivada = coeficiente * k * r ** (k - 1) if k > 0 else np.zeros_like(r)
        clase = ClaseDecaimiento.POLINOMICA if k > 0 else ClaseDecaimiento.ACOTADA
        return cls(malla, valores, clase, derivada)

    # Aritmética
    def __add__(self, otro: 'PerfilRadial') -> 'PerfilRadial':
        _verificar_malla(self.malla, otro.malla)
        derivada = None
        if self.derivada is not None and otro.derivada is not None:
            derivada = self.derivada + otro.derivada
        return PerfilRadial(self.malla, self.valores + otro.valores,
                            _clase_suma(self.clase, otro.clase), derivada)

    def __sub__(self, otro: 'PerfilRadial') -> 'PerfilRadial':
        return self + (-1.0) * otro

    def __neg__(self) -> 'PerfilRadial':
        return (-1.0) * self

    def __mul__(self, otro) -> 'PerfilRadial':
        if isinstance(otro, PerfilRadial):
            _verificar_malla(self.malla, otro.malla)
            derivada = None
            if self.derivada is not None and otro.derivada is not None:
                derivada = self.derivada * otro.valores + self.valores * otro.derivada
            return PerfilRadial(self.malla, self.valores * otro.valores,
                                ClaseDecaimiento.combinar(self.clase, otro.clase), derivada)
        c = float(otro)
        derivada = None if self.derivada is None else c * self.derivada
        return PerfilRadial(self.malla, c * self.valores, self.clase, derivada)

    __rmul__ = __mul__

    def con_clase(self, clase: ClaseDecaimiento) -> 'PerfilRadial':
        return PerfilRadial(self.malla, self.valores, clase, self.derivada)

    def sin_derivada(self) -> 'PerfilRadial':
        return PerfilRadial(self.malla, self.valores, self.clase)

    def recortar(self, radio: float) -> 'PerfilRadial':
        """Anula el perfil para r > radio"""
        valores = np.where(self.malla.r > radio, 0.0, self.valores)
        derivada = None
        if self.derivada is not None:
            derivada = np.where(self.malla.r > radio, 0.0, self.derivada)
        return PerfilRadial(self.malla, valores, self.clase, derivada)

    @property
    def es_cero(self) -> bool:
        return not np.any(self.valores)

    def sup(self) -> float:
        return float(np.max(np.abs(self.valores)))

    def magnitud_cola(self) -> float:
        """|a(r_max)|·exp(r_max²/8), el monitor de cola de perfiles gaussianos"""
        r_max = self.malla.r_max
        return float(abs(self.valores[-1]) * math.exp(min(r_max ** 2 / 8.0, 700.0)))

    def verificar_cola(self, tolerancia: Optional[float] = None) -> float:
        """Registra una advertencia si la cola de un perfil gaussiano es grande"""
        tolerancia = obtener_config().TOL_COLA if tolerancia is None else tolerancia
        cola = self.magnitud_cola()
        if self.clase is ClaseDecaimiento.GAUSSIANA and cola > tolerancia:
            logger.warning(f"Cola gaussiana por encima de la tolerancia: {cola:.3e}")
        return cola


# ----------------------------------------------------------------------
# Cuadratura radial
# ----------------------------------------------------------------------

@lru_cache(maxsize=64)
def _pesos_compuestos(n_intervalos: int) -> np.ndarray:
    """Pesos (para h = 1) de Newton–Cotes compuesto de 6 puntos"""
    pesos = np.zeros(n_intervalos + 1)
    panel, _ = newton_cotes(5, 1)
    n_paneles, resto = divmod(n_intervalos, 5)
    for p in range(n_paneles):
        pesos[5 * p:5 * p + 6] += panel
    if resto:
        cola, _ = newton_cotes(resto, 1)
        inicio = 5 * n_paneles
        pesos[inicio:inicio + resto + 1] += cola
    pesos.flags.writeable = False
    return pesos


def integrar_muestras(valores: np.ndarray, h: float, indice_final: Optional[int] = None) -> float:
    """∫ de muestras uniformes desde el índice 0 hasta indice_final"""
    valores = np.asarray(valores, dtype=float)
    if indice_final is None:
        indice_final = valores.shape[0] - 1
    if indice_final <= 0:
        return 0.0
    pesos = _pesos_compuestos(indice_final)
    return h * math.fsum(pesos * valores[:indice_final + 1])


def cuadratura_radial(perfil: PerfilRadial, potencia: int, radio: Optional[float] = None) -> float:
    """
    ∫₀^{r_max} a(r) r^potencia dr por Newton–Cotes compuesto

    Args:
        perfil: Perfil radial
        potencia: Exponente entero ≥ 0 del peso r^potencia
        radio: Radio de corte opcional

    Returns:
        float con el valor de la integral
    """
    if potencia < 0 or int(potencia) != potencia:
        raise ErrorConfiguracion("La potencia debe ser un entero ≥ 0", {'potencia': potencia})
    if perfil.clase is ClaseDecaimiento.POLINOMICA:
        raise ErrorDecaimiento("Integrando sin decaimiento: perfil de crecimiento polinómico")
    malla = perfil.malla
    final = None if radio is None else malla.indice_corte(radio)
    return integrar_muestras(perfil.valores * malla.r ** potencia, malla.h, final)


def momentos(campo: 'CampoPolar') -> Tuple[float, float, float]:
    """
    Masa y primeros momentos (M, m₁, m₂) de un campo polar

    Returns:
        Tuple (M, m1, m2)
    """
    a0 = campo.modos.get((0, Paridad.COS))
    a1 = campo.modos.get((1, Paridad.COS))
    b1 = campo.modos.get((1, Paridad.SIN))
    masa = 2.0 * math.pi * cuadratura_radial(a0, 1) if a0 is not None else 0.0
    m1 = math.pi * cuadratura_radial(a1, 2) if a1 is not None else 0.0
    m2 = math.pi * cuadratura_radial(b1, 2) if b1 is not None else 0.0
    return masa, m1, m2


def _factor_angular(n: int) -> float:
    return 2.0 * math.pi if n == 0 else math.pi


def producto_interno_y(f: 'CampoPolar', g: 'CampoPolar', radio: Optional[float] = None) -> float:
    """⟨f, g⟩ con peso e^{r²/4}, modo por modo, hasta el radio dado"""
    _verificar_malla(f.malla, g.malla)
    malla = f.malla
    radio = obtener_config().RADIO_NORMA_Y if radio is None else radio
    final = malla.indice_corte(radio)
    peso = np.exp(malla.r[:final + 1] ** 2 / 4.0) * malla.r[:final + 1]
    total = []
    for clave in sorted(set(f.modos) & set(g.modos), key=_orden_clave):
        pf, pg = f.modos[clave], g.modos[clave]
        for p in (pf, pg):
            if p.clase is ClaseDecaimiento.POLINOMICA:
                raise ErrorDecaimiento("La norma 𝒴 no admite perfiles de crecimiento polinómico")
        integrando = pf.valores[:final + 1] * pg.valores[:final + 1] * peso
        total.append(_factor_angular(clave[0]) * integrar_muestras(integrando, malla.h))
    return math.fsum(total)


def norma_y(campo: 'CampoPolar', radio: Optional[float] = None) -> float:
    """
    ‖f‖_𝒴 = (∫|f|² e^{|ξ|²/4} dξ)^{1/2} por Parseval modal

    La integral se trunca en RADIO_NORMA_Y (o el radio dado).
    """
    for p in campo.modos.values():
        if p.clase is ClaseDecaimiento.POLINOMICA:
            raise ErrorDecaimiento("La norma 𝒴 no admite perfiles de crecimiento polinómico")
    radio = obtener_config().RADIO_NORMA_Y if radio is None else radio
    valor = producto_interno_y(campo, campo, radio)
    if logger.isEnabledFor(logging.DEBUG) and campo.modos:
        inicio = campo.malla.indice_corte(radio)
        cola = max(float(np.max(np.abs(p.valores[inicio:]))) for p in campo.modos.values())
        logger.debug(f"Norma 𝒴 truncada en r = {radio:g}; sup de la cola omitida {cola:.3e}")
    return math.sqrt(max(valor, 0.0))


# ----------------------------------------------------------------------
# Campo polar
# ----------------------------------------------------------------------

def _orden_clave(clave: Clave) -> Tuple[int, int]:
    return clave[0], 0 if clave[1] is Paridad.COS else 1


@dataclass(frozen=True, eq=False)
class CampoPolar:
    """Suma finita de modos angulares; los modos ausentes son cero"""
    malla: MallaRadial
    modos: Dict[Clave, PerfilRadial] = field(default_factory=dict)

    def __post_init__(self):
        modos = {}
        for (n, paridad), perfil in self.modos.items():
            paridad = Paridad.from_string(paridad)
            if n < 0:
                raise ErrorConfiguracion("Modo angular negativo", {'n': n})
            if n == 0 and paridad is Paridad.SIN:
                raise ErrorConfiguracion("No existe modo seno para n = 0")
            _verificar_malla(self.malla, perfil.malla)
            clave = (int(n), paridad)
            modos[clave] = modos[clave] + perfil if clave in modos else perfil
        object.__setattr__(self, 'modos', dict(sorted(modos.items(), key=lambda kv: _orden_clave(kv[0]))))

    @classmethod
    def cero(cls, malla: MallaRadial) -> 'CampoPolar':
        return cls(malla, {})

    @classmethod
    def modo_unico(cls, n: int, paridad, perfil: PerfilRadial) -> 'CampoPolar':
        return cls(perfil.malla, {(n, Paridad.from_string(paridad)): perfil})

    @property
    def n_max(self) -> int:
        return max((n for n, _ in self.modos), default=0)

    @property
    def clase(self) -> ClaseDecaimiento:
        clase = ClaseDecaimiento.GAUSSIANA
        for p in self.modos.values():
            clase = _clase_suma(clase, p.clase)
        return clase

    def modo(self, n: int, paridad) -> PerfilRadial:
        return self.modos.get((n, Paridad.from_string(paridad)), PerfilRadial.cero(self.malla))

    def items(self) -> Iterator[Tuple[Clave, PerfilRadial]]:
        return iter(self.modos.items())

    def __add__(self, otro: 'CampoPolar') -> 'CampoPolar':
        _verificar_malla(self.malla, otro.malla)
        modos = dict(self.modos)
        for clave, perfil in otro.modos.items():
            modos[clave] = modos[clave] + perfil if clave in modos else perfil
        return CampoPolar(self.malla, modos)

    def __sub__(self, otro: 'CampoPolar') -> 'CampoPolar':
        return self + (-1.0) * otro

    def __neg__(self) -> 'CampoPolar':
        return (-1.0) * self

    def __mul__(self, escalar) -> 'CampoPolar':
        c = float(escalar)
        return CampoPolar(self.malla, {k: c * p for k, p in self.modos.items()})

    __rmul__ = __mul__

    def por_radial(self, perfil: PerfilRadial) -> 'CampoPolar':
        """Multiplica cada modo por una función radial"""
        return CampoPolar(self.malla, {k: p * perfil for k, p in self.modos.items()})

    def radial(self) -> 'CampoPolar':
        """Proyección 𝒫₀ sobre funciones radiales"""
        return CampoPolar(self.malla, {k: p for k, p in self.modos.items() if k[0] == 0})

    def sin_radial(self) -> 'CampoPolar':
        """(1 − 𝒫₀)f"""
        return CampoPolar(self.malla, {k: p for k, p in self.modos.items() if k[0] != 0})

    def filtrar(self, paridad) -> 'CampoPolar':
        paridad = Paridad.from_string(paridad)
        return CampoPolar(self.malla, {k: p for k, p in self.modos.items() if k[1] is paridad})

    def limpiar(self) -> 'CampoPolar':
        """Elimina modos idénticamente nulos"""
        return CampoPolar(self.malla, {k: p for k, p in self.modos.items() if not p.es_cero})

    def recortar(self, radio: float) -> 'CampoPolar':
        return CampoPolar(self.malla, {k: p.recortar(radio) for k, p in self.modos.items()})

    def con_clase(self, clase: ClaseDecaimiento) -> 'CampoPolar':
        return CampoPolar(self.malla, {k: p.con_clase(clase) for k, p in self.modos.items()})

    def sup(self) -> float:
        """Cota de la norma del supremo: Σ_n sup|a_n|"""
        return math.fsum(p.sup() for p in self.modos.values())

    def sup_modos(self) -> float:
        """Máximo de sup|a_n| sobre los modos"""
        return max((p.sup() for p in self.modos.values()), default=0.0)

    def paridad_xi2(self) -> Optional[str]:
        """'par' si sólo hay cosenos, 'impar' si sólo hay senos, None si mezcla"""
        activos = [k for k, p in self.modos.items() if not p.es_cero]
        if not activos:
            return 'par'
        if all(p is Paridad.COS for _, p in activos):
            return 'par'
        if all(p is Paridad.SIN for _, p in activos):
            return 'impar'
        return None


def producto_trig(m: int, pm: Paridad, n: int, pn: Paridad) -> List[Tuple[int, Paridad, float]]:
    """
    Expande trig_m(θ)·trig_n(θ) como combinación de cos(kθ), sin(kθ)

    Returns:
        Lista de (k, paridad, coeficiente) con k ≥ 0
    """
    suma, dif = m + n, m - n
    if pm is Paridad.COS and pn is Paridad.COS:
        terminos = [(suma, Paridad.COS, 0.5), (dif, Paridad.COS, 0.5)]
    elif pm is Paridad.SIN and pn is Paridad.SIN:
        terminos = [(dif, Paridad.COS, 0.5), (suma, Paridad.COS, -0.5)]
    elif pm is Paridad.SIN and pn is Paridad.COS:
        terminos = [(suma, Paridad.SIN, 0.5), (dif, Paridad.SIN, 0.5)]
    else:
        terminos = [(suma, Paridad.SIN, 0.5), (dif, Paridad.SIN, -0.5)]

    salida = []
    for k, paridad, c in terminos:
        if k < 0:
            k = -k
            if paridad is Paridad.SIN:
                c = -c
        if k == 0 and paridad is Paridad.SIN:
            continue
        salida.append((k, paridad, c))
    return salida


def combinar_modos(malla: MallaRadial,
                   terminos: Iterable[Tuple[int, Paridad, float, np.ndarray]],
                   clase: ClaseDecaimiento) -> CampoPolar:
    """Acumula términos (k, paridad, c, valores) en un campo polar"""
    acumulado: Dict[Clave, List[np.ndarray]] = {}
    for k, paridad, c, valores in terminos:
        acumulado.setdefault((k, paridad), []).append(c * valores)
    modos = {}
    for clave in sorted(acumulado, key=_orden_clave):
        valores = np.sum(np.stack(acumulado[clave]), axis=0)
        modos[clave] = PerfilRadial(malla, valores, clase)
    return CampoPolar(malla, modos)


def producto_campos(f: CampoPolar, g: CampoPolar) -> CampoPolar:
    """Producto puntual fg con acoplamiento exacto de modos (m ± n)"""
    _verificar_malla(f.malla, g.malla)
    terminos = []
    for (m, pm), a in f.items():
        for (n, pn), b in g.items():
            producto = a.valores * b.valores
            for k, paridad, c in producto_trig(m, pm, n, pn):
                terminos.append((k, paridad, c, producto))
    clase = ClaseDecaimiento.combinar(f.clase, g.clase)
    return combinar_modos(f.malla, terminos, clase)


# ----------------------------------------------------------------------
# Muestreo en la malla polar
# ----------------------------------------------------------------------

def angulos(n_theta: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(n_theta) / n_theta


def muestrear(campo: CampoPolar, n_theta: Optional[int] = None) -> np.ndarray:
    """Valores del campo en (r_i, θ_j); forma (n_r, n_theta)"""
    n_theta = obtener_config().N_THETA if n_theta is None else n_theta
    theta = angulos(n_theta)
    salida = np.zeros((campo.malla.n_puntos, n_theta))
    for (n, paridad), perfil in campo.items():
        trig = np.cos(n * theta) if paridad is Paridad.COS else np.sin(n * theta)
        salida += np.outer(perfil.valores, trig)
    return salida


def descomponer(muestras: np.ndarray, malla: MallaRadial, n_max: int,
                clase: ClaseDecaimiento = ClaseDecaimiento.GAUSSIANA) -> CampoPolar:
    """Inversa de muestrear mediante FFT real en θ"""
    n_theta = muestras.shape[1]
    if n_max >= n_theta // 2:
        raise ErrorConfiguracion("n_max demasiado grande para la malla angular",
                                 {'n_max': n_max, 'n_theta': n_theta})
    coef = np.fft.rfft(muestras, axis=1) / n_theta
    modos = {(0, Paridad.COS): PerfilRadial(malla, coef[:, 0].real, clase)}
    for n in range(1, n_max + 1):
        modos[(n, Paridad.COS)] = PerfilRadial(malla, 2.0 * coef[:, n].real, clase)
        modos[(n, Paridad.SIN)] = PerfilRadial(malla, -2.0 * coef[:, n].imag, clase)
    return CampoPolar(malla, modos)


def integrar_polar(muestras: np.ndarray, malla: MallaRadial, radio: Optional[float] = None) -> float:
    """∫ f dξ de muestras polares: trapecio en θ y Newton–Cotes en r"""
    n_theta = muestras.shape[1]
    radial = muestras.sum(axis=1) * (2.0 * math.pi / n_theta)
    final = None if radio is None else malla.indice_corte(radio)
    return integrar_muestras(radial * malla.r, malla.h, final)


# ----------------------------------------------------------------------
# Serie doble en (ε, δ)
# ----------------------------------------------------------------------

ClaveSerie = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class SerieEpsDelta:
    """
    Serie truncada Σ ε^k δ^j C_{k,j} con coeficientes CampoPolar

    Los términos que exceden los órdenes declarados se descartan y se
    cuentan en `truncados`.
    """
    malla: MallaRadial
    orden_eps: int
    orden_delta: int = 2
    coefs: Dict[ClaveSerie, CampoPolar] = field(default_factory=dict)
    truncados: int = 0

    def __post_init__(self):
        if self.orden_delta > 2 or self.orden_delta < 0:
            raise ErrorConfiguracion("orden_delta debe estar entre 0 y 2",
                                     {'orden_delta': self.orden_delta})
        coefs = {}
        descartados = 0
        for (k, j), campo in sorted(self.coefs.items()):
            if k > self.orden_eps or j > self.orden_delta or k < 0 or j < 0:
                descartados += 1
                continue
            _verificar_malla(self.malla, campo.malla)
            coefs[(k, j)] = coefs[(k, j)] + campo if (k, j) in coefs else campo
        object.__setattr__(self, 'coefs', coefs)
        object.__setattr__(self, 'truncados', self.truncados + descartados)

    @classmethod
    def constante(cls, campo: CampoPolar, orden_eps: int, orden_delta: int = 2) -> 'SerieEpsDelta':
        return cls(campo.malla, orden_eps, orden_delta, {(0, 0): campo})

    def coeficiente(self, k: int, j: int = 0) -> CampoPolar:
        return self.coefs.get((k, j), CampoPolar.cero(self.malla))

    def __add__(self, otra: 'SerieEpsDelta') -> 'SerieEpsDelta':
        _verificar_malla(self.malla, otra.malla)
        coefs = dict(self.coefs)
        for clave, campo in sorted(otra.coefs.items()):
            coefs[clave] = coefs[clave] + campo if clave in coefs else campo
        return SerieEpsDelta(self.malla, min(self.orden_eps, otra.orden_eps),
                             min(self.orden_delta, otra.orden_delta), coefs,
                             self.truncados + otra.truncados)

    def __mul__(self, escalar) -> 'SerieEpsDelta':
        c = float(escalar)
        return SerieEpsDelta(self.malla, self.orden_eps, self.orden_delta,
                             {k: c * v for k, v in self.coefs.items()}, self.truncados)

    __rmul__ = __mul__

    def escalar(self, c: float) -> 'SerieEpsDelta':
        return self * c

    def desplazar_eps(self, potencia: int) -> 'SerieEpsDelta':
        """Multiplica por ε^potencia"""
        return SerieEpsDelta(self.malla, self.orden_eps, self.orden_delta,
                             {(k + potencia, j): v for (k, j), v in self.coefs.items()},
                             self.truncados)

    def multiplicar_delta(self, potencia: int = 1) -> 'SerieEpsDelta':
        """Multiplica por δ^potencia"""
        return SerieEpsDelta(self.malla, self.orden_eps, self.orden_delta,
                             {(k, j + potencia): v for (k, j), v in self.coefs.items()},
                             self.truncados)

    def producto(self, otra: 'SerieEpsDelta',
                 operacion: Callable[[CampoPolar, CampoPolar], CampoPolar]) -> 'SerieEpsDelta':
        """Producto bilineal coeficiente a coeficiente (p. ej. un corchete)"""
        orden_eps = min(self.orden_eps, otra.orden_eps)
        orden_delta = min(self.orden_delta, otra.orden_delta)
        coefs: Dict[ClaveSerie, CampoPolar] = {}
        descartados = 0
        for (a, i), f in sorted(self.coefs.items()):
            for (b, j), g in sorted(otra.coefs.items()):
                clave = (a + b, i + j)
                if clave[0] > orden_eps or clave[1] > orden_delta:
                    descartados += 1
                    continue
                valor = operacion(f, g)
                coefs[clave] = coefs[clave] + valor if clave in coefs else valor
        return SerieEpsDelta(self.malla, orden_eps, orden_delta, coefs,
                             self.truncados + otra.truncados + descartados)

    def evaluar(self, eps: float, delta: float = 0.0) -> CampoPolar:
        """Colapsa la serie en un campo para (ε, δ) concretos"""
        total = CampoPolar.cero(self.malla)
        for (k, j), campo in sorted(self.coefs.items()):
            total = total + (eps ** k) * (delta ** j) * campo
        return total


# ----------------------------------------------------------------------
# Exportación
# ----------------------------------------------------------------------

def exportar_csv(perfil: PerfilRadial, ruta: str, metadatos: Optional[Dict] = None) -> str:
    """Escribe el perfil como CSV con columnas (r, valor)"""
    tabla = pd.DataFrame({'r': perfil.malla.r, 'valor': perfil.valores})
    metadatos = metadatos_base(malla=perfil.malla) if metadatos is None else metadatos
    return escribir_csv(tabla, ruta, metadatos)
