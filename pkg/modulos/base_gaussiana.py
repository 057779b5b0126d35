"""
Módulo de la base gaussiana: vórtice de Lamb–Oseen, funciones especiales
y polinomios homogéneos Q_n
Grupo de Mecánica de Fluidos Computacional
"""

import math
from typing import Callable, Dict, Tuple, Union

import numpy as np
from scipy.special import eval_genlaguerre, exp1

from config import obtener_config
from .modelos import ClaseDecaimiento, ErrorConfiguracion, Paridad, configurar_logger
from .nucleo_polar import CampoPolar, MallaRadial, PerfilRadial

logger = configurar_logger(__name__)

GAMMA_E = 0.57721566490153286061
CORTE_EIN = 8.0

Numero = Union[float, np.ndarray]


# ----------------------------------------------------------------------
# Funciones especiales
# ----------------------------------------------------------------------

def _ein_serie(s: np.ndarray) -> np.ndarray:
    # Σ_{k≥1} (−1)^{k+1} s^k / (k·k!)
    total = np.zeros_like(s)
    termino = np.ones_like(s)
    for k in range(1, 80):
        termino = termino * (-s) / k
        total = total - termino / k
    return total


def ein(s: Numero) -> Numero:
    """
    Integral exponencial entera Ein(s) = ∫₀^s (1 − e^{−τ})/τ dτ

    Serie de potencias para s < 8; log s + γ_E + E₁(s) a partir de ahí.
    """
    escalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=float))
    salida = np.empty_like(s)
    cerca = s < CORTE_EIN
    salida[cerca] = _ein_serie(s[cerca])
    lejos = ~cerca
    salida[lejos] = np.log(s[lejos]) + GAMMA_E + exp1(s[lejos])
    return float(salida[0]) if escalar else salida


def _cociente(u: np.ndarray, rama: Callable, taylor: Callable) -> np.ndarray:
    """Evalúa rama(u) con la rama de Taylor para |u| pequeño"""
    umbral = obtener_config().UMBRAL_TAYLOR
    u = np.asarray(u, dtype=float)
    salida = np.empty_like(u)
    cerca = np.abs(u) < umbral ** 2 / 4.0
    with np.errstate(divide='ignore', invalid='ignore'):
        salida[~cerca] = rama(u[~cerca])
    salida[cerca] = taylor(u[cerca])
    return salida


def _uno_menos_exp_sobre(u):
    # (1 − e^{−u})/u
    return _cociente(u, lambda x: -np.expm1(-x) / x,
                     lambda x: 1.0 - x / 2.0 + x ** 2 / 6.0)


def _exp_menos_uno_sobre(u):
    # (e^u − 1)/u
    return _cociente(u, lambda x: np.expm1(x) / x,
                     lambda x: 1.0 + x / 2.0 + x ** 2 / 6.0)


def _escalar_si(entrada, salida):
    return float(salida) if np.ndim(entrada) == 0 else salida


# ----------------------------------------------------------------------
# Perfiles del vórtice de Lamb–Oseen
# ----------------------------------------------------------------------

def G(r: Numero) -> Numero:
    """Ω₀ = G = e^{−r²/4}/(4π)"""
    return np.exp(-np.asarray(r, dtype=float) ** 2 / 4.0) / (4.0 * math.pi)


def dG(r: Numero) -> Numero:
    return -np.asarray(r, dtype=float) * g(r)


def g(r: Numero) -> Numero:
    return np.exp(-np.asarray(r, dtype=float) ** 2 / 4.0) / (8.0 * math.pi)


def v0(r: Numero) -> Numero:
    """v₀ = (1 − e^{−r²/4})/(2πr²)"""
    u = np.atleast_1d(np.asarray(r, dtype=float) ** 2 / 4.0)
    valor = _uno_menos_exp_sobre(u) / (8.0 * math.pi)
    return _escalar_si(r, valor.reshape(np.shape(r)))


def h(r: Numero) -> Numero:
    """h = g/v₀ = (r²/4)/(e^{r²/4} − 1)"""
    u = np.atleast_1d(np.asarray(r, dtype=float) ** 2 / 4.0)
    with np.errstate(over='ignore'):
        valor = 1.0 / _exp_menos_uno_sobre(u)
    return _escalar_si(r, valor.reshape(np.shape(r)))


def A(r: Numero) -> Numero:
    """A = F₀'(G) = 4(e^{r²/4} − 1)/r²"""
    u = np.atleast_1d(np.asarray(r, dtype=float) ** 2 / 4.0)
    with np.errstate(over='ignore'):
        valor = _exp_menos_uno_sobre(u)
    return _escalar_si(r, valor.reshape(np.shape(r)))


def UG(r: Numero) -> Numero:
    """Velocidad azimutal del vórtice: r·v₀"""
    return np.asarray(r, dtype=float) * v0(r)


def Psi0(r: Numero) -> Numero:
    """Ψ₀ = (Ein(r²/4) − γ_E)/(4π)"""
    r_arr = np.asarray(r, dtype=float)
    return (ein(r_arr ** 2 / 4.0) - GAMMA_E) / (4.0 * math.pi)


def dPsi0(r: Numero) -> Numero:
    return UG(r)


def _log_inverso(s: np.ndarray) -> np.ndarray:
    return np.log(1.0 / (4.0 * math.pi * s))


def F0(s: Numero) -> Numero:
    """
    F₀(s) = (γ_E − Ein(log(1/(4πs))))/(4π), definida para 0 < s ≤ 1/(4π)

    Raises:
        ErrorConfiguracion: si algún s cae fuera del dominio
    """
    s_arr = np.asarray(s, dtype=float)
    tope = 1.0 / (4.0 * math.pi)
    if np.any(s_arr <= 0.0) or np.any(s_arr > tope * (1.0 + 1e-14)):
        raise ErrorConfiguracion("F₀ sólo está definida en (0, 1/(4π)]",
                                 {'min': float(np.min(s_arr)), 'max': float(np.max(s_arr))})
    L = np.maximum(_log_inverso(s_arr), 0.0)
    return (GAMMA_E - ein(L)) / (4.0 * math.pi)


def dF0(s: Numero) -> Numero:
    """
    F₀'(s) = (1 − e^{−L})/(4π L s) con L = log(1/(4πs))

    La fórmula se prolonga analíticamente a s > 1/(4π), donde L < 0.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0.0):
        raise ErrorConfiguracion("F₀' requiere s > 0", {'min': float(np.min(s_arr))})
    L = np.atleast_1d(_log_inverso(s_arr))
    valor = _uno_menos_exp_sobre(L).reshape(np.shape(s_arr)) / (4.0 * math.pi * s_arr)
    return _escalar_si(s, valor)


PERFILES: Dict[str, Callable[[Numero], Numero]] = {
    'G': G,
    'UG': UG,
    'Psi0': Psi0,
    'v0': v0,
    'g': g,
    'h': h,
    'F0': F0,
    'dF0': dF0,
    'A': A,
}


def eval_base(nombre: str, r: Numero) -> Numero:
    """
    Evalúa un perfil base por nombre

    Args:
        nombre: Uno de G, UG, Psi0, v0, g, h, F0, dF0, A
        r: Radio (o valor s para F0 y dF0)

    Returns:
        Valor puntual o array
    """
    if nombre not in PERFILES:
        raise ErrorConfiguracion(f"Perfil base desconocido: {nombre}",
                                 {'disponibles': sorted(PERFILES)})
    if nombre not in ('F0', 'dF0') and np.any(np.asarray(r) < 0):
        raise ErrorConfiguracion("El radio debe ser no negativo")
    return PERFILES[nombre](r)


class PerfilesBase:
    """Perfiles base muestreados sobre una malla, con derivadas exactas"""

    def __init__(self, malla: MallaRadial):
        self.malla = malla
        r = malla.r
        self.G = PerfilRadial(malla, G(r), ClaseDecaimiento.GAUSSIANA, dG(r))
        self.g = PerfilRadial(malla, g(r), ClaseDecaimiento.GAUSSIANA, -r * g(r) / 2.0)
        self.Psi0 = PerfilRadial(malla, Psi0(r), ClaseDecaimiento.POLINOMICA, dPsi0(r))
        self.v0 = PerfilRadial(malla, v0(r), ClaseDecaimiento.ACOTADA)
        self.h = PerfilRadial(malla, h(r), ClaseDecaimiento.GAUSSIANA)
        self.UG = PerfilRadial(malla, UG(r), ClaseDecaimiento.ACOTADA)

    @property
    def omega0(self) -> CampoPolar:
        return CampoPolar.modo_unico(0, Paridad.COS, self.G)

    @property
    def psi0(self) -> CampoPolar:
        return CampoPolar.modo_unico(0, Paridad.COS, self.Psi0)


def perfiles_base(malla: MallaRadial) -> PerfilesBase:
    return PerfilesBase(malla)


# ----------------------------------------------------------------------
# Polinomios homogéneos Q_n
# ----------------------------------------------------------------------

def q_poly(n: int, tipo, x: Tuple[Numero, Numero]) -> Numero:
    """
    Q_n^c = Re(x₁ + i x₂)ⁿ, Q_n^s = Im(x₁ + i x₂)ⁿ por multiplicación compleja iterada
    """
    if n < 0:
        raise ErrorConfiguracion("n debe ser ≥ 0", {'n': n})
    tipo = Paridad.from_string(tipo)
    z = np.asarray(x[0], dtype=float) + 1j * np.asarray(x[1], dtype=float)
    potencia = np.ones_like(z)
    for _ in range(n):
        potencia = potencia * z
    valor = potencia.real if tipo is Paridad.COS else potencia.imag
    return float(valor) if np.ndim(valor) == 0 else valor


def q_series_check(x: Tuple[float, float], n_terminos: int) -> Dict[str, float]:
    """
    Residuos de las sumas parciales de las identidades de Q_n

    Compara Σ(−1)ⁿQ_n^c, Σ(−1)^{n−1}Q_n^s y Σ(−1)^{n−1}Q_n^c/n con sus
    formas cerradas.

    Raises:
        ErrorConfiguracion: si |x| ≥ 1
    """
    x1, x2 = float(x[0]), float(x[1])
    if x1 * x1 + x2 * x2 >= 1.0:
        raise ErrorConfiguracion("Las series de Q_n requieren |x| < 1", {'x': [x1, x2]})
    z = complex(x1, x2)
    denominador = 1.0 + 2.0 * x1 + x1 * x1 + x2 * x2

    suma_c, suma_s, suma_log = 0.0, 0.0, 0.0
    potencia = complex(1.0, 0.0)
    for n in range(0, n_terminos + 1):
        signo = -1.0 if n % 2 else 1.0
        suma_c += signo * potencia.real
        if n >= 1:
            suma_s -= signo * potencia.imag
            suma_log -= signo * potencia.real / n
        potencia *= z

    return {
        'coseno': abs(suma_c - (1.0 + x1) / denominador),
        'seno': abs(suma_s - x2 / denominador),
        'logaritmo': abs(suma_log - 0.5 * math.log(denominador)),
    }


# ----------------------------------------------------------------------
# Familias de Hermite y coeficientes del residuo trivial
# ----------------------------------------------------------------------

def hermite_laguerre(malla: MallaRadial, n: int, j: int) -> PerfilRadial:
    """r^n L_j^{(n)}(r²/4) e^{−r²/4}; autofunción de 𝓛 con autovalor −(n/2 + j)"""
    r = malla.r
    x = r ** 2 / 4.0
    valores = r ** n * eval_genlaguerre(j, n, x) * np.exp(-x)
    return PerfilRadial(malla, valores, ClaseDecaimiento.GAUSSIANA)


def modo_q_gaussiano(malla: MallaRadial, n: int, tipo) -> CampoPolar:
    """Q_n^{c,s} G como campo polar: rⁿG en el modo n"""
    tipo = Paridad.from_string(tipo)
    if n == 0 and tipo is Paridad.SIN:
        return CampoPolar.cero(malla)
    r = malla.r
    derivada = (n * r ** (n - 1) - r ** (n + 1) / 2.0) * G(r) if n > 0 else dG(r)
    perfil = PerfilRadial(malla, r ** n * G(r), ClaseDecaimiento.GAUSSIANA, derivada)
    return CampoPolar.modo_unico(n, tipo, perfil)


def autofunciones_hermite(malla: MallaRadial) -> Dict[str, Tuple[CampoPolar, float]]:
    """Autofunciones de 𝓛 conocidas en forma cerrada y sus autovalores"""
    r = malla.r
    x = r ** 2 / 4.0
    lap_G = PerfilRadial(malla, (x - 1.0) * G(r))
    bilap_G = PerfilRadial(malla, (x ** 2 - 4.0 * x + 2.0) * G(r))
    medio_rG = PerfilRadial(malla, -r * G(r) / 2.0)
    return {
        'G': (CampoPolar.modo_unico(0, Paridad.COS, PerfilRadial(malla, G(r), derivada=dG(r))), 0.0),
        'd1G': (CampoPolar.modo_unico(1, Paridad.COS, medio_rG), -0.5),
        'd2G': (CampoPolar.modo_unico(1, Paridad.SIN, medio_rG), -0.5),
        'xi1xi2G': (CampoPolar.modo_unico(2, Paridad.SIN, PerfilRadial(malla, r ** 2 * G(r) / 2.0)), -1.0),
        'lapG': (CampoPolar.modo_unico(0, Paridad.COS, lap_G), -1.0),
        'bilapG': (CampoPolar.modo_unico(0, Paridad.COS, bilap_G), -2.0),
        'Q3cG': (modo_q_gaussiano(malla, 3, Paridad.COS), -1.5),
        'Q3sG': (modo_q_gaussiano(malla, 3, Paridad.SIN), -1.5),
    }


def coeficiente_residuo_trivial(malla: MallaRadial, n: int) -> CampoPolar:
    """
    Coeficiente de εⁿ en 𝓡₀ = (1/4π) Σ_{n≥2} (−1)^{n−1} εⁿ Q_n^s G

    n = 2 da −ξ₁ξ₂G/(2π) y n = 3 da Q₃^s G/(4π).
    """
    if n < 2:
        return CampoPolar.cero(malla)
    signo = 1.0 if (n - 1) % 2 == 0 else -1.0
    return (signo / (4.0 * math.pi)) * modo_q_gaussiano(malla, n, Paridad.SIN)
