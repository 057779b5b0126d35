"""
Módulo de operadores: 𝓛, Λ, 𝒯_ε, Biot–Savart por modo y corchete de Poisson
Grupo de Mecánica de Fluidos Computacional

Cada perfil del modo n se escribe a = rⁿψ con ψ par; las derivadas usan
diferencias finitas de sexto orden sobre ψ con valores fantasma por
paridad en el origen y filas descentradas en r_max.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.sparse.linalg import splu
from scipy.special import comb, ive

from config import obtener_config
from . import base_gaussiana as bg
from .modelos import (
    ClaseDecaimiento,
    ErrorConfiguracion,
    ErrorDecaimiento,
    ErrorNumerico,
    ErrorSolvencia,
    Paridad,
    ReporteLambda,
    configurar_logger,
)
from .nucleo_polar import (
    CampoPolar,
    ClaveSerie,
    MallaRadial,
    PerfilRadial,
    SerieEpsDelta,
    _pesos_compuestos,
    cuadratura_radial,
    producto_trig,
)

logger = configurar_logger(__name__)


# ----------------------------------------------------------------------
# Representación de regularidad y plantillas
# ----------------------------------------------------------------------

def a_psi(valores: np.ndarray, n: int, r: np.ndarray) -> np.ndarray:
    """ψ = a/rⁿ con el valor en el origen extrapolado como función par"""
    valores = np.asarray(valores, dtype=float)
    if n == 0:
        return valores.copy()
    psi = np.empty_like(valores)
    psi[1:] = valores[1:] / r[1:] ** n
    psi[0] = 1.5 * psi[1] - 0.6 * psi[2] + 0.1 * psi[3]
    return psi


def psi_a(psi: np.ndarray, n: int, r: np.ndarray) -> np.ndarray:
    return psi if n == 0 else psi * r ** n


def _pesos_plantilla(desplazamientos: np.ndarray, derivada: int) -> np.ndarray:
    """Pesos de diferencias finitas (en unidades de h) por condiciones de momentos"""
    k = np.arange(len(desplazamientos))
    A = desplazamientos[None, :].astype(float) ** k[:, None]
    b = np.zeros(len(desplazamientos))
    b[derivada] = math.factorial(derivada)
    return np.linalg.solve(A, b)


@lru_cache(maxsize=8)
def matrices_derivada(n_puntos: int, h: float) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """
    Matrices D1, D2 de sexto orden para funciones pares en r

    Cerca del origen los nodos fantasma ψ_{−k} = ψ_k se pliegan sobre la
    malla; en r_max se usan plantillas descentradas de 7 y 8 puntos.

    Returns:
        Tuple (D1, D2) en formato CSR
    """
    N = n_puntos
    centrada = np.arange(-3, 4)
    pesos_c1 = _pesos_plantilla(centrada, 1) / h
    pesos_c2 = _pesos_plantilla(centrada, 2) / h ** 2
    filas1, cols1, vals1 = [], [], []
    filas2, cols2, vals2 = [], [], []

    for i in range(N):
        if i + 3 < N:
            cols = np.abs(i + centrada)
            p1, p2 = pesos_c1, pesos_c2
            cols1_i = cols2_i = cols
        else:
            cols1_i = np.arange(N - 7, N)
            cols2_i = np.arange(N - 8, N)
            p1 = _pesos_plantilla(cols1_i - i, 1) / h
            p2 = _pesos_plantilla(cols2_i - i, 2) / h ** 2
        filas1.extend([i] * len(cols1_i))
        cols1.extend(cols1_i)
        vals1.extend(p1)
        filas2.extend([i] * len(cols2_i))
        cols2.extend(cols2_i)
        vals2.extend(p2)

    # columnas repetidas por el pliegue se suman al convertir a CSR
    D1 = sparse.coo_matrix((vals1, (filas1, cols1)), shape=(N, N)).tocsr()
    D2 = sparse.coo_matrix((vals2, (filas2, cols2)), shape=(N, N)).tocsr()
    D1.data[np.abs(D1.data) < 1e-12 / h] = 0.0
    D1.eliminate_zeros()
    return D1, D2


def _inverso_r(r: np.ndarray) -> np.ndarray:
    inv = np.zeros_like(r)
    inv[1:] = 1.0 / r[1:]
    return inv


def matriz_laplaciano(malla: MallaRadial, n: int) -> sparse.csr_matrix:
    """Δ_n en espacio ψ: ψ'' + (2n+1)ψ'/r, con (2n+2)ψ''(0) en el origen"""
    D1, D2 = matrices_derivada(malla.n_puntos, malla.h)
    r = malla.r
    escala = np.ones_like(r)
    escala[0] = 2.0 * n + 2.0
    return (sparse.diags(escala) @ D2 + sparse.diags((2.0 * n + 1.0) * _inverso_r(r)) @ D1).tocsr()


def matriz_L(malla: MallaRadial, n: int) -> sparse.csr_matrix:
    """𝓛 en espacio ψ: Δ_n + (r/2)ψ' + (1 + n/2)ψ"""
    D1, _ = matrices_derivada(malla.n_puntos, malla.h)
    r = malla.r
    identidad = sparse.identity(malla.n_puntos, format='csr')
    return (matriz_laplaciano(malla, n) + sparse.diags(r / 2.0) @ D1
            + (1.0 + n / 2.0) * identidad).tocsr()


def fila_robin(malla: MallaRadial, n: int) -> np.ndarray:
    """Condición de Robin en r_max para el decaimiento armónico del modo n"""
    D1, _ = matrices_derivada(malla.n_puntos, malla.h)
    fila = D1.getrow(malla.n_puntos - 1).toarray().ravel()
    R = malla.r_max
    if n >= 1:
        fila[-1] += 2.0 * n / R
    else:
        fila[-1] -= 1.0 / (R * math.log(R))
    return fila


def fila_dirichlet(malla: MallaRadial) -> np.ndarray:
    fila = np.zeros(malla.n_puntos)
    fila[-1] = 1.0
    return fila


def _con_fila_final(matriz: sparse.spmatrix, fila: np.ndarray) -> sparse.csc_matrix:
    A = matriz.tolil()
    A[A.shape[0] - 1, :] = fila
    return A.tocsc()


class Factorizacion:
    """LU dispersa con estimación de condición a partir de diag(U)"""

    def __init__(self, matriz: sparse.spmatrix, nombre: str):
        self.nombre = nombre
        try:
            self.lu = splu(sparse.csc_matrix(matriz))
        except RuntimeError as e:
            logger.error(f"Error factorizando {nombre}: {str(e)}")
            raise ErrorNumerico(f"Factorización singular en {nombre}",
                                {'condicion': float('inf')})
        diagonal = np.abs(self.lu.U.diagonal())
        minimo = float(diagonal.min())
        self.condicion = float(diagonal.max() / minimo) if minimo > 0 else float('inf')
        if not math.isfinite(self.condicion):
            logger.error(f"Error en {nombre}: matriz singular")
            raise ErrorNumerico(f"Matriz singular en {nombre}", {'condicion': self.condicion})

    def resolver(self, rhs: np.ndarray) -> np.ndarray:
        sol = self.lu.solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(sol)):
            raise ErrorNumerico(f"Solución no finita en {self.nombre}",
                                {'condicion': self.condicion})
        return sol


@lru_cache(maxsize=64)
def _factor_laplaciano(malla: MallaRadial, n: int) -> Factorizacion:
    return Factorizacion(_con_fila_final(matriz_laplaciano(malla, n), fila_robin(malla, n)),
                         f"Δ_{n}")


@lru_cache(maxsize=64)
def _factor_L_desplazado(malla: MallaRadial, n: int, c: float) -> Factorizacion:
    identidad = sparse.identity(malla.n_puntos, format='csr')
    matriz = matriz_L(malla, n) - c * identidad
    return Factorizacion(_con_fila_final(matriz, fila_dirichlet(malla)), f"𝓛 − {c:g} (n={n})")


@lru_cache(maxsize=64)
def _factor_lambda(malla: MallaRadial, n: int) -> Factorizacion:
    matriz = matriz_laplaciano(malla, n) + sparse.diags(bg.h(malla.r))
    matriz = _con_fila_final(matriz, fila_robin(malla, n))
    if n != 1:
        return Factorizacion(matriz, f"Λ_{n}")

    # Sistema orlado: núcleo ψ = v₀ y momento nulo de la vorticidad
    r = malla.r
    pesos = _pesos_compuestos(malla.n_puntos - 1) * malla.h
    z = pesos * r ** 3 * bg.v0(r)
    z[-1] = 0.0
    restriccion = pesos * r ** 3 * bg.h(r)
    orlada = sparse.bmat([[matriz, sparse.csc_matrix(z.reshape(-1, 1))],
                          [sparse.csr_matrix(restriccion.reshape(1, -1)), None]])
    return Factorizacion(orlada, "Λ_1 orlada")


# ----------------------------------------------------------------------
# Derivadas
# ----------------------------------------------------------------------

def derivada_modo(perfil: PerfilRadial, n: int) -> np.ndarray:
    """a'(r) del perfil del modo n; exacta si el perfil la trae"""
    if perfil.derivada is not None:
        return perfil.derivada
    malla = perfil.malla
    r = malla.r
    D1, _ = matrices_derivada(malla.n_puntos, malla.h)
    psi = a_psi(perfil.valores, n, r)
    dpsi = D1 @ psi
    if n == 0:
        return dpsi
    return n * r ** (n - 1) * psi + r ** n * dpsi


def con_derivada(perfil: PerfilRadial, n: int) -> PerfilRadial:
    return PerfilRadial(perfil.malla, perfil.valores, perfil.clase, derivada_modo(perfil, n))


# ----------------------------------------------------------------------
# 𝓛 y su inversa desplazada
# ----------------------------------------------------------------------

def _rechazar_polinomico(campo: CampoPolar, operacion: str):
    for (n, paridad), p in campo.items():
        if p.clase is ClaseDecaimiento.POLINOMICA:
            raise ErrorDecaimiento(f"{operacion} no admite perfiles de crecimiento polinómico",
                                   {'modo': n, 'paridad': paridad.value})


def aplicar_L(campo: CampoPolar) -> CampoPolar:
    """
    𝓛f = Δf + ξ·∇f/2 + f modo a modo

    Raises:
        ErrorDecaimiento: si algún modo tiene crecimiento polinómico
    """
    _rechazar_polinomico(campo, "𝓛")
    malla = campo.malla
    r = malla.r
    modos = {}
    for (n, paridad), perfil in campo.items():
        psi = a_psi(perfil.valores, n, r)
        modos[(n, paridad)] = PerfilRadial(malla, psi_a(matriz_L(malla, n) @ psi, n, r),
                                           perfil.clase)
    return CampoPolar(malla, modos)


def aplicar_laplaciano(campo: CampoPolar) -> CampoPolar:
    malla = campo.malla
    r = malla.r
    modos = {}
    for (n, paridad), perfil in campo.items():
        psi = a_psi(perfil.valores, n, r)
        modos[(n, paridad)] = PerfilRadial(malla, psi_a(matriz_laplaciano(malla, n) @ psi, n, r),
                                           perfil.clase)
    return CampoPolar(malla, modos)


def resolver_L_desplazado(n: int, paridad, c: float, rhs: PerfilRadial) -> PerfilRadial:
    """
    Resuelve (𝓛 − c)u = rhs en el modo n con u(r_max) = 0

    Args:
        n: Modo angular
        paridad: Paridad del modo (no altera la ecuación radial)
        c: Desplazamiento positivo
        rhs: Perfil del lado derecho, con decaimiento gaussiano

    Returns:
        PerfilRadial u, anulado más allá de RADIO_SOPORTE
    """
    Paridad.from_string(paridad)
    if not c > 0:
        raise ErrorConfiguracion("El desplazamiento c debe ser positivo", {'c': c})
    if rhs.clase is not ClaseDecaimiento.GAUSSIANA:
        raise ErrorDecaimiento("(𝓛 − c)⁻¹ requiere un lado derecho gaussiano")
    malla = rhs.malla
    r = malla.r
    b = a_psi(rhs.valores, n, r)
    b[-1] = 0.0
    psi = _factor_L_desplazado(malla, n, float(c)).resolver(b)
    u = PerfilRadial(malla, psi_a(psi, n, r), ClaseDecaimiento.GAUSSIANA)
    u = u.recortar(obtener_config().RADIO_SOPORTE)
    u.verificar_cola()
    return u


# ----------------------------------------------------------------------
# Biot–Savart
# ----------------------------------------------------------------------

def biot_savart_modo(n: int, paridad, w: PerfilRadial) -> PerfilRadial:
    """
    φ con Δ_nφ = w, regular en el origen y armónico en r_max

    Para n = 0 la normalización es φ(r) = ∫ log(max(r, s)) s w(s) ds.
    """
    Paridad.from_string(paridad)
    malla = w.malla
    if w.es_cero:
        return PerfilRadial.cero(malla).con_clase(ClaseDecaimiento.ACOTADA)
    if w.clase is ClaseDecaimiento.POLINOMICA:
        raise ErrorDecaimiento("Biot–Savart requiere vorticidad con decaimiento")
    r = malla.r
    b = a_psi(w.valores, n, r)
    b[-1] = 0.0
    psi = _factor_laplaciano(malla, n).resolver(b)
    clase = ClaseDecaimiento.POLINOMICA if n == 0 else ClaseDecaimiento.ACOTADA
    return PerfilRadial(malla, psi_a(psi, n, r), clase)


def _mapear(funcion: Callable, elementos: Sequence) -> List:
    """Aplica funcion en paralelo conservando el orden de entrada"""
    if len(elementos) <= 1:
        return [funcion(e) for e in elementos]
    with ThreadPoolExecutor(max_workers=min(8, len(elementos))) as ejecutor:
        return list(ejecutor.map(funcion, elementos))


def biot_savart(campo: CampoPolar) -> CampoPolar:
    """Δ⁻¹ de un campo de vorticidad, modo a modo"""
    items = list(campo.items())
    perfiles = _mapear(lambda kv: biot_savart_modo(kv[0][0], kv[0][1], kv[1]), items)
    return CampoPolar(campo.malla, {k: p for (k, _), p in zip(items, perfiles)})


# ----------------------------------------------------------------------
# Corchete de Poisson
# ----------------------------------------------------------------------

def _derivada_trig(n: int, paridad: Paridad) -> Optional[Tuple[Paridad, float]]:
    if n == 0:
        return None
    if paridad is Paridad.COS:
        return Paridad.SIN, -float(n)
    return Paridad.COS, float(n)


def corchete_poisson(f: CampoPolar, g: CampoPolar) -> CampoPolar:
    """
    {f, g} = ∇⊥f·∇g = (1/r)(∂_r f ∂_θ g − ∂_θ f ∂_r g)

    Acoplamiento exacto de modos m ± n. En r = 0 los modos k ≥ 1 se
    anulan y el modo radial se extrapola.

    Raises:
        ErrorDecaimiento: si ambos argumentos crecen polinómicamente
    """
    if f.clase is ClaseDecaimiento.POLINOMICA and g.clase is ClaseDecaimiento.POLINOMICA:
        raise ErrorDecaimiento("Corchete de dos campos sin decaimiento")
    malla = f.malla
    inv_r = _inverso_r(malla.r)
    derivadas_f = {k: derivada_modo(p, k[0]) for k, p in f.items()}
    derivadas_g = {k: derivada_modo(p, k[0]) for k, p in g.items()}

    acumulado: Dict[Tuple[int, Paridad], np.ndarray] = {}

    def sumar(terminos, valores):
        for k, paridad, c in terminos:
            clave = (k, paridad)
            acumulado[clave] = acumulado.get(clave, 0.0) + c * valores

    for (m, pm), a in f.items():
        for (n, pn), b in g.items():
            dtrig_n = _derivada_trig(n, pn)
            if dtrig_n is not None:
                paridad, c = dtrig_n
                sumar([(k, p, c * s) for k, p, s in producto_trig(m, pm, n, paridad)],
                      derivadas_f[(m, pm)] * b.valores * inv_r)
            dtrig_m = _derivada_trig(m, pm)
            if dtrig_m is not None:
                paridad, c = dtrig_m
                sumar([(k, p, -c * s) for k, p, s in producto_trig(m, paridad, n, pn)],
                      a.valores * derivadas_g[(n, pn)] * inv_r)

    clase = ClaseDecaimiento.combinar(f.clase, g.clase)
    modos = {}
    for (k, paridad), valores in acumulado.items():
        valores = np.array(valores, dtype=float)
        if k == 0:
            valores[0] = 1.5 * valores[1] - 0.6 * valores[2] + 0.1 * valores[3]
        else:
            valores[0] = 0.0
        modos[(k, paridad)] = PerfilRadial(malla, valores, clase)
    return CampoPolar(malla, modos)


def muestrear_gradiente(campo: CampoPolar, n_theta: Optional[int] = None
                        ) -> Tuple[np.ndarray, np.ndarray]:
    """
    (∂₁f, ∂₂f) en la malla polar (r_i, θ_j)

    En r = 0 sólo contribuye el modo 1: ∇f(0) = (a₁'(0), b₁'(0)).
    """
    n_theta = obtener_config().N_THETA if n_theta is None else n_theta
    malla = campo.malla
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    inv_r = _inverso_r(malla.r)[:, None]
    d_r = np.zeros((malla.n_puntos, n_theta))
    d_t = np.zeros_like(d_r)
    origen = np.zeros(2)
    for (n, paridad), perfil in campo.items():
        derivada = derivada_modo(perfil, n)
        if paridad is Paridad.COS:
            trig, dtrig = np.cos(n * theta), -n * np.sin(n * theta)
        else:
            trig, dtrig = np.sin(n * theta), n * np.cos(n * theta)
        d_r += np.outer(derivada, trig)
        d_t += np.outer(perfil.valores, dtrig) * inv_r
        if n == 1:
            origen[0 if paridad is Paridad.COS else 1] = derivada[0]
    c, s = np.cos(theta)[None, :], np.sin(theta)[None, :]
    d1 = c * d_r - s * d_t
    d2 = s * d_r + c * d_t
    d1[0, :] = origen[0]
    d2[0, :] = origen[1]
    return d1, d2


# ----------------------------------------------------------------------
# Λ y su inversa
# ----------------------------------------------------------------------

def aplicar_Lambda(campo: CampoPolar) -> CampoPolar:
    """Λf = {Ψ₀, f} + {Δ⁻¹f, Ω₀}; en el modo n: ∓n(v₀w + φg) con paridad conjugada"""
    malla = campo.malla
    r = malla.r
    v0, g = bg.v0(r), bg.g(r)
    modos = {}
    for (n, paridad), w in campo.items():
        if n == 0:
            continue
        phi = biot_savart_modo(n, paridad, w)
        valores = n * (v0 * w.valores + phi.valores * g)
        if paridad is Paridad.COS:
            modos[(n, Paridad.SIN)] = PerfilRadial(malla, -valores, w.clase)
        else:
            modos[(n, Paridad.COS)] = PerfilRadial(malla, valores, w.clase)
    return CampoPolar(malla, modos)


def _defecto_solvencia(b: PerfilRadial) -> Tuple[float, float]:
    """π∫b r² dr y su escala π∫|b| r² dr"""
    escala = math.pi * cuadratura_radial(PerfilRadial(b.malla, np.abs(b.valores)), 2)
    return math.pi * cuadratura_radial(b, 2), escala


def proyectar_solvencia(b: PerfilRadial, tolerancia: Optional[float] = None) -> Tuple[PerfilRadial, float]:
    """
    Elimina el momento ∫b r² dr a lo largo de r·g (perfil n = 1 de ∂G)

    Raises:
        ErrorSolvencia: si el defecto relativo supera la tolerancia
    """
    cfg = obtener_config()
    tolerancia = cfg.TOL_EXPANSION if tolerancia is None else tolerancia
    defecto, escala = _defecto_solvencia(b)
    malla = b.malla
    rg = PerfilRadial(malla, malla.r * bg.g(malla.r))
    momento_rg = math.pi * cuadratura_radial(rg, 2)
    # fuentes casi nulas se miden contra la escala de r·g
    relativo = abs(defecto) / max(escala, momento_rg)
    if relativo > tolerancia:
        logger.error(f"Error de solvencia en n = 1: defecto relativo {relativo:.3e}")
        raise ErrorSolvencia("Violación de la condición de solvencia en n = 1",
                             {'defecto': defecto, 'relativo': relativo})
    if relativo > cfg.TOL_SOLVENCIA:
        logger.warning(f"Defecto de solvencia proyectado: {defecto:.3e} (relativo {relativo:.3e})")
    return b - (defecto / momento_rg) * rg, defecto


def invertir_Lambda(n: int, paridad, b: PerfilRadial) -> ReporteLambda:
    """
    Resuelve ΛΩ = b·trig_n(θ) para Ω en el modo n

    Una entrada seno produce Ω = w cos(nθ); una entrada coseno produce
    Ω = −w sin(nθ). Los perfiles del reporte ya llevan ese signo, de modo
    que Ω = reporte.w·trig(reporte.paridad) y Ψ = reporte.phi·trig(reporte.paridad).

    Args:
        n: Modo angular ≥ 1
        paridad: Paridad del lado derecho
        b: Perfil radial del lado derecho

    Returns:
        ReporteLambda con φ, w, residuos de frontera y condición
    """
    paridad = Paridad.from_string(paridad)
    if n < 1:
        raise ErrorConfiguracion("Λ sólo es invertible en modos n ≥ 1", {'n': n})
    if b.clase is ClaseDecaimiento.POLINOMICA:
        raise ErrorDecaimiento("Λ⁻¹ requiere un lado derecho con decaimiento")
    malla = b.malla
    r = malla.r
    salida = paridad.conjugada()
    signo = 1.0 if paridad is Paridad.SIN else -1.0

    if b.es_cero:
        cero = PerfilRadial.cero(malla)
        return ReporteLambda(n, salida, cero.con_clase(ClaseDecaimiento.ACOTADA), cero,
                             {'ecuacion': 0.0, 'infinito': 0.0}, 0.0 if n == 1 else None, 1.0)

    defecto = None
    if n == 1:
        b, defecto = proyectar_solvencia(b)

    v0, h = bg.v0(r), bg.h(r)
    fuente = -b.valores / (n * v0)
    rhs = a_psi(fuente, n, r)
    rhs[-1] = 0.0
    factor = _factor_lambda(malla, n)
    residuos = {}
    if n == 1:
        pesos = _pesos_compuestos(malla.n_puntos - 1) * malla.h
        kappa = -math.fsum(pesos * r ** 2 * b.valores / v0)
        solucion = factor.resolver(np.append(rhs, kappa))
        psi = solucion[:-1]
        residuos['multiplicador'] = float(solucion[-1])
    else:
        psi = factor.resolver(rhs)

    phi = psi_a(psi, n, r)
    w = -phi * h - b.valores / (n * v0)
    interior = (matriz_laplaciano(malla, n) @ psi + h * psi - rhs)[:-1]
    residuos['ecuacion'] = float(np.max(np.abs(interior)))
    residuos['infinito'] = float(abs(fila_robin(malla, n) @ psi))

    soporte = obtener_config().RADIO_SOPORTE
    perfil_w = PerfilRadial(malla, signo * w, ClaseDecaimiento.GAUSSIANA).recortar(soporte)
    perfil_w.verificar_cola()
    perfil_phi = PerfilRadial(malla, signo * phi, ClaseDecaimiento.ACOTADA)
    logger.debug(f"Λ⁻¹ en n = {n}: condición {factor.condicion:.3e}")
    return ReporteLambda(n, salida, perfil_phi, perfil_w, residuos, defecto, factor.condicion)


def invertir_Lambda_campo(campo: CampoPolar) -> Tuple[CampoPolar, CampoPolar, List[ReporteLambda]]:
    """
    Λ⁻¹ de un campo sin parte radial, modos en paralelo

    Returns:
        Tuple (Ω, Ψ, reportes) con los reportes en orden de modos
    """
    items = [(k, p) for k, p in campo.items() if not p.es_cero]
    if any(k[0] == 0 for k, _ in items):
        raise ErrorSolvencia("Λ no es invertible sobre funciones radiales")
    reportes = _mapear(lambda kv: invertir_Lambda(kv[0][0], kv[0][1], kv[1]), items)
    malla = campo.malla
    omega = CampoPolar(malla, {(rep.modo, rep.paridad): rep.w for rep in reportes})
    psi = CampoPolar(malla, {(rep.modo, rep.paridad): rep.phi for rep in reportes})
    return omega, psi, reportes


# ----------------------------------------------------------------------
# Desarrollo de 𝒯_ε
# ----------------------------------------------------------------------

@dataclass
class ExpansionTeps:
    """
    𝒯_εΨ = C log(1/ε) + Σ εⁿ P_n para cada coeficiente de una serie de vorticidad

    Atributos:
        orden: N, número de polinomios P_n
        constantes: C = M[Ω]/(2π) por coeficiente (k, j)
        polinomios: P_1..P_N por coeficiente (k, j)
        serie: Σ ε^{k+n} δ^j P_n[Ω_{k,j}] sin la constante logarítmica
    """
    orden: int
    constantes: Dict[ClaveSerie, float] = field(default_factory=dict)
    polinomios: Dict[ClaveSerie, List[CampoPolar]] = field(default_factory=dict)
    serie: Optional[SerieEpsDelta] = None


def momentos_complejos(campo: CampoPolar, j_max: int) -> List[complex]:
    """μ_j = ∫ η̄^j Ω dη; μ₀ = M[Ω]"""
    mu = []
    for j in range(j_max + 1):
        if j == 0:
            a0 = campo.modos.get((0, Paridad.COS))
            mu.append(complex(2.0 * math.pi * cuadratura_radial(a0, 1) if a0 is not None else 0.0))
            continue
        a = campo.modos.get((j, Paridad.COS))
        b = campo.modos.get((j, Paridad.SIN))
        real = math.pi * cuadratura_radial(a, j + 1) if a is not None else 0.0
        imag = -math.pi * cuadratura_radial(b, j + 1) if b is not None else 0.0
        mu.append(complex(real, imag))
    return mu


def polinomio_teps(campo: CampoPolar, n: int, mu: Optional[List[complex]] = None) -> CampoPolar:
    """
    P_n = ((−1)^{n−1}/(2πn)) Re Σ_j C(n, j) z^{n−j} μ_j

    El modo k = n − j lleva cos: c·C·Re μ_j·r^k y sin: −c·C·Im μ_j·r^k.
    """
    malla = campo.malla
    mu = momentos_complejos(campo, n) if mu is None else mu
    c = (-1.0) ** (n - 1) / (2.0 * math.pi * n)
    modos = {}
    for j in range(n + 1):
        k = n - j
        coef = c * comb(n, j, exact=True) * mu[j]
        if coef.real != 0.0:
            modos[(k, Paridad.COS)] = PerfilRadial.potencia(malla, k, coef.real)
        if k > 0 and coef.imag != 0.0:
            modos[(k, Paridad.SIN)] = PerfilRadial.potencia(malla, k, -coef.imag)
    return CampoPolar(malla, modos)


def polinomios_teps(campo: CampoPolar, N: int) -> Tuple[float, List[CampoPolar]]:
    """Constante C y polinomios P_1..P_N de un campo de vorticidad"""
    _verificar_orden_teps(N)
    _rechazar_polinomico(campo, "𝒯_ε")
    mu = momentos_complejos(campo, N)
    return mu[0].real / (2.0 * math.pi), [polinomio_teps(campo, n, mu) for n in range(1, N + 1)]


def _verificar_orden_teps(N: int):
    tope = obtener_config().N_MAX_TEPS
    if N < 1 or N > tope:
        raise ErrorConfiguracion("Orden de 𝒯_ε fuera del presupuesto de precisión de los momentos",
                                 {'N': N, 'maximo': tope})


def expandir_teps(serie: SerieEpsDelta, N: int) -> ExpansionTeps:
    """
    Desarrollo de 𝒯_ε aplicado a una serie de vorticidad

    Raises:
        ErrorConfiguracion: si N supera N_MAX_TEPS
    """
    _verificar_orden_teps(N)
    resultado = ExpansionTeps(orden=N)
    coefs = {}
    for (k, j), campo in sorted(serie.coefs.items()):
        if k + 1 > serie.orden_eps:
            resultado.constantes[(k, j)], resultado.polinomios[(k, j)] = polinomios_teps(campo, 1)
            continue
        n_util = max(1, min(N, serie.orden_eps - k))
        C, polinomios = polinomios_teps(campo, n_util)
        resultado.constantes[(k, j)] = C
        resultado.polinomios[(k, j)] = polinomios
        for n, P in enumerate(polinomios, start=1):
            clave = (k + n, j)
            coefs[clave] = coefs[clave] + P if clave in coefs else P
    resultado.serie = SerieEpsDelta(serie.malla, serie.orden_eps, serie.orden_delta, coefs)
    return resultado


# ----------------------------------------------------------------------
# Evaluación directa de 𝒯_ε
# ----------------------------------------------------------------------

class EvaluadorCorriente:
    """
    Evalúa una función de corriente polar y su gradiente en puntos arbitrarios

    Dentro de r_max usa splines cúbicos de φ_n; fuera, la cola armónica
    φ_n(R)(R/r)ⁿ (n ≥ 1) o φ₀(R) + Rφ₀'(R) log(r/R) (n = 0).
    """

    def __init__(self, campo: CampoPolar):
        self.campo = campo
        self.malla = campo.malla
        r = self.malla.r
        self.splines = {}
        for (n, paridad), perfil in campo.items():
            derivada = derivada_modo(perfil, n)
            self.splines[(n, paridad)] = CubicSpline(r, perfil.valores, bc_type=((1, derivada[0]), (1, derivada[-1])))

    def _radial(self, clave, rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = clave[0]
        spline = self.splines[clave]
        R = self.malla.r_max
        dentro = rho <= R
        valor = np.empty_like(rho)
        deriv = np.empty_like(rho)
        valor[dentro] = spline(rho[dentro])
        deriv[dentro] = spline(rho[dentro], 1)
        fuera = ~dentro
        if np.any(fuera):
            phi_R = float(spline(R))
            if n >= 1:
                valor[fuera] = phi_R * (R / rho[fuera]) ** n
                deriv[fuera] = -n * phi_R * R ** n / rho[fuera] ** (n + 1)
            else:
                dphi_R = float(spline(R, 1))
                valor[fuera] = phi_R + R * dphi_R * np.log(rho[fuera] / R)
                deriv[fuera] = R * dphi_R / rho[fuera]
        return valor, deriv

    def evaluar(self, x1: np.ndarray, x2: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Returns:
            Tuple (Ψ, ∂₁Ψ, ∂₂Ψ) en los puntos dados
        """
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        rho = np.hypot(x1, x2)
        theta = np.arctan2(x2, x1)
        valor = np.zeros_like(rho)
        d_r = np.zeros_like(rho)
        d_t = np.zeros_like(rho)
        for (n, paridad) in self.splines:
            radial, dradial = self._radial((n, paridad), rho.ravel())
            radial = radial.reshape(rho.shape)
            dradial = dradial.reshape(rho.shape)
            if paridad is Paridad.COS:
                trig, dtrig = np.cos(n * theta), -n * np.sin(n * theta)
            else:
                trig, dtrig = np.sin(n * theta), n * np.cos(n * theta)
            valor += radial * trig
            d_r += dradial * trig
            d_t += radial * dtrig
        with np.errstate(divide='ignore', invalid='ignore'):
            d_t_r = np.where(rho > 0, d_t / rho, 0.0)
        c, s = np.cos(theta), np.sin(theta)
        return valor, c * d_r - s * d_t_r, s * d_r + c * d_t_r


def evaluar_teps_directo(campo_corriente, eps: float, puntos: Tuple[np.ndarray, np.ndarray]
                         ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (𝒯_εΨ)(ξ) = Ψ(−ξ₁ − 1/ε, ξ₂) y su gradiente respecto de ξ

    Args:
        campo_corriente: CampoPolar o EvaluadorCorriente ya construido
        eps: Razón de aspecto ε > 0
        puntos: Coordenadas (ξ₁, ξ₂)

    Returns:
        Tuple (𝒯Ψ, ∂₁𝒯Ψ, ∂₂𝒯Ψ)
    """
    if not eps > 0:
        raise ErrorConfiguracion("ε debe ser positivo", {'eps': eps})
    evaluador = (campo_corriente if isinstance(campo_corriente, EvaluadorCorriente)
                 else EvaluadorCorriente(campo_corriente))
    xi1, xi2 = (np.asarray(p, dtype=float) for p in puntos)
    valor, d1, d2 = evaluador.evaluar(-xi1 - 1.0 / eps, xi2)
    return valor, -d1, d2


# ----------------------------------------------------------------------
# Oráculos independientes
# ----------------------------------------------------------------------

def semigrupo_modo(n: int, tau: float, fuente: Callable[[float], float], r: float) -> float:
    """(S(τ)f)(r) para f(s)·trig(nθ), por el núcleo del calor en variables autosemejantes"""
    a = -math.expm1(-tau)
    b = math.exp(-tau / 2.0)
    ancho = 12.0 * math.sqrt(a)
    inferior = max(0.0, (r - ancho) / b)
    superior = (r + ancho) / b

    def integrando(s):
        x = r * b * s / (2.0 * a)
        return math.exp(-(r - b * s) ** 2 / (4.0 * a)) * ive(n, x) * fuente(s) * s / (2.0 * a)

    centro = min(max(r / b, inferior), superior)
    valor, _ = quad(integrando, inferior, superior, points=[centro], limit=400,
                    epsabs=1e-14, epsrel=1e-12)
    return valor


def oraculo_laplace(n: int, c: float, fuente: Callable[[float], float],
                    radios: Iterable[float]) -> np.ndarray:
    """
    u = −∫₀^∞ e^{−cτ} S(τ)f dτ, solución de (𝓛 − c)u = f

    Integración adaptativa anidada; pensado para unos pocos radios.
    """
    tope = 40.0 / c
    salida = []
    for r in radios:
        valor, _ = quad(lambda tau: math.exp(-c * tau) * semigrupo_modo(n, tau, fuente, r),
                        0.0, tope, limit=200, epsabs=1e-13, epsrel=1e-11)
        salida.append(-valor)
    return np.array(salida)


def oraculo_disparo(n: int, fuente: Callable[[np.ndarray], np.ndarray], r_max: float,
                    radios: Iterable[float],
                    potencial: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                    r0: float = 1e-4) -> np.ndarray:
    """
    φ'' + φ'/r − n²φ/r² + V(r)φ = f(r) por disparo

    Datos de Frobenius regulares en r0, DOP853 hasta r_max y brentq sobre
    el residuo de la condición de Robin lejana.
    """
    V = potencial if potencial is not None else (lambda r: 0.0 * r)

    def sistema(r, y):
        return [y[1], -y[1] / r + n * n * y[0] / (r * r) - V(r) * y[0] + fuente(r)]

    def datos_iniciales(A):
        p = (fuente(r0) / r0 ** n - V(r0) * A) / (4.0 * n + 4.0)
        return [A * r0 ** n + p * r0 ** (n + 2),
                A * n * r0 ** max(n - 1, 0) + (n + 2) * p * r0 ** (n + 1)]

    def integrar(A):
        sol = solve_ivp(sistema, (r0, r_max), datos_iniciales(A), method='DOP853',
                        rtol=1e-12, atol=1e-30, dense_output=True)
        if not sol.success:
            raise ErrorNumerico("Fallo del integrador en el oráculo de disparo",
                                {'mensaje': sol.message})
        return sol

    def residuo(A):
        phi, dphi = integrar(A).y[:, -1]
        if n >= 1:
            return dphi + n * phi / r_max
        return dphi - phi / (r_max * math.log(r_max))

    r_0, r_1 = residuo(0.0), residuo(1.0)
    estimado = -r_0 / (r_1 - r_0)
    margen = 1.0 + abs(estimado)
    A = brentq(residuo, estimado - margen, estimado + margen, xtol=1e-15 * margen, rtol=1e-14)
    sol = integrar(A)
    radios = np.asarray(list(radios), dtype=float)
    return sol.sol(np.maximum(radios, r0))[0]
