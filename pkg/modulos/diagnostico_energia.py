"""
Módulo de diagnóstico de energía
Grupo de Mecánica de Fluidos Computacional

Regiones I/II/III, peso W_ε, función ρ_ε, norma 𝒳_ε, energía E_ε y
funcional de difusión D_ε evaluados por cuadratura polar sobre
perturbaciones de prueba con momentos nulos.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import obtener_config
from . import base_gaussiana as bg
from .campos2d import EvaluadorVorticidad
from .expansion import (
    PaqueteExpansion,
    TablasRelacion,
    ajustar_pendiente,
    construir_base,
    relacion_funcional,
)
from .modelos import (
    ClaseDecaimiento,
    ErrorConfiguracion,
    ErrorMomentos,
    ParametrosPeso,
    Paridad,
    Region,
    ReporteCoercividad,
    configurar_logger,
)
from .nucleo_polar import (
    CampoPolar,
    MallaRadial,
    PerfilRadial,
    angulos,
    cuadratura_radial,
    integrar_polar,
    momentos,
    muestrear,
)
from .operadores import (
    EvaluadorCorriente,
    aplicar_L,
    biot_savart,
    derivada_modo,
    evaluar_teps_directo,
)

TOL_MOMENTOS = 1e-10


# ----------------------------------------------------------------------
# Perturbaciones de prueba
# ----------------------------------------------------------------------

def _base_momentos(malla: MallaRadial) -> Tuple[CampoPolar, CampoPolar, CampoPolar]:
    r = malla.r
    g = bg.g(r)
    perfil_G = PerfilRadial(malla, bg.G(r))
    perfil_dG = PerfilRadial(malla, -r * g)
    return (CampoPolar.modo_unico(0, Paridad.COS, perfil_G),
            CampoPolar.modo_unico(1, Paridad.COS, perfil_dG),
            CampoPolar.modo_unico(1, Paridad.SIN, perfil_dG))


def proyectar_momentos(w: CampoPolar) -> CampoPolar:
    """w − M[w]G + m₁[w]∂₁G + m₂[w]∂₂G, que anula M, m₁ y m₂"""
    G, d1G, d2G = _base_momentos(w.malla)
    masa, m1, m2 = momentos(w)
    return w - masa * G + m1 * d1G + m2 * d2G


@dataclass(frozen=True, eq=False)
class PerturbacionPrueba:
    """Vorticidad w con momentos nulos y su función de corriente φ = Δ⁻¹w"""
    w: CampoPolar
    phi: CampoPolar

    @classmethod
    def desde_campo(cls, w: CampoPolar) -> 'PerturbacionPrueba':
        """
        Raises:
            ErrorMomentos: si algún momento supera TOL_MOMENTOS
        """
        defectos = momentos(w)
        if max(abs(m) for m in defectos) > TOL_MOMENTOS:
            raise ErrorMomentos("La perturbación tiene momentos no nulos",
                                {'M': defectos[0], 'm1': defectos[1], 'm2': defectos[2]})
        return cls(w, biot_savart(w))

    @classmethod
    def aleatoria(cls, malla: MallaRadial, rng: np.random.Generator,
                  n_max: int = 4) -> 'PerturbacionPrueba':
        """
        Combinación aleatoria de funciones de Hermite–Laguerre rⁿL_j^{(n)}(r²/4)e^{−r²/4}

        j ≤ 1 para n ≤ 1 y j = 0 para n ≥ 2; se excluyen (0,0) y (1,0).
        """
        modos = {}
        for n in range(n_max + 1):
            for j in ((0, 1) if n <= 1 else (0,)):
                if (n, j) in ((0, 0), (1, 0)):
                    continue
                perfil = bg.hermite_laguerre(malla, n, j)
                for paridad in ((Paridad.COS,) if n == 0 else (Paridad.COS, Paridad.SIN)):
                    c = float(rng.standard_normal())
                    clave = (n, paridad)
                    modos[clave] = modos[clave] + c * perfil if clave in modos else c * perfil
        w = proyectar_momentos(CampoPolar(malla, modos))
        return cls.desde_campo(w)


# ----------------------------------------------------------------------
# ρ_ε y regiones
# ----------------------------------------------------------------------

def rho(r: Union[float, np.ndarray], eps: float,
        parametros: Optional[ParametrosPeso] = None) -> Union[float, np.ndarray]:
    """ρ_ε: |ξ| hasta ε^{−σ₁}, constante hasta ε^{−σ₂}, |ξ|^γ después"""
    parametros = parametros or ParametrosPeso()
    r_arr = np.asarray(r, dtype=float)
    interior = eps ** (-parametros.sigma1)
    exterior = eps ** (-parametros.sigma2)
    salida = np.where(r_arr < interior, r_arr,
                      np.where(r_arr <= exterior, interior, r_arr ** parametros.gamma))
    return float(salida) if np.ndim(r) == 0 else salida


_CODIGOS = {1: Region.I, 2: Region.II, 3: Region.III}


class DiagnosticoEnergia:
    """
    Diagnósticos del marco de estabilidad para un paquete dado

    Args:
        paquete: Paquete de expansión; por defecto el paquete base (M = 2)
        parametros: σ₁, σ₂ del peso
        tablas: Tablas F_k de la relación funcional del paquete
        n_theta: Resolución angular de las cuadraturas
    """

    def __init__(self, paquete: Optional[PaqueteExpansion] = None,
                 parametros: Optional[ParametrosPeso] = None,
                 tablas: Optional[TablasRelacion] = None,
                 n_theta: Optional[int] = None):
        cfg = obtener_config()
        self.paquete = paquete if paquete is not None else construir_base()
        self.parametros = parametros or ParametrosPeso(cfg.SIGMA1, cfg.SIGMA2)
        self.tablas = tablas if tablas is not None else relacion_funcional(self.paquete)
        self.n_theta = n_theta or cfg.N_THETA
        self.malla = self.paquete.malla
        self.radio = cfg.RADIO_NORMA_Y
        self.indice = self.malla.indice_corte(self.radio)
        self._pesos: Dict[float, Dict[str, np.ndarray]] = {}
        self.logger = self._configurar_logger()

    def _configurar_logger(self):
        return configurar_logger(__name__)

    # ------------------------------------------------------------------
    # Peso
    # ------------------------------------------------------------------

    def _umbral(self, eps: float) -> float:
        return math.exp(eps ** (-2.0 * self.parametros.sigma1) / 4.0)

    def _codigos(self, r: np.ndarray, omega: np.ndarray, eps: float) -> Tuple[np.ndarray, np.ndarray]:
        """Códigos de región (1, 2, 3) y F'(Ω_app^E) donde está definido"""
        p = self.parametros
        candidato = (r < 2.0 * eps ** (-p.sigma1)) & (omega > 0)
        derivada = np.full(r.shape, np.inf)
        derivada[candidato] = self.tablas.derivada_total(omega[candidato], eps)
        codigos = np.where(r <= eps ** (-p.sigma2), 2, 3)
        codigos[candidato & (derivada < self._umbral(eps))] = 1
        return codigos, derivada

    def _peso_desde(self, r: np.ndarray, codigos: np.ndarray, derivada: np.ndarray,
                    eps: float) -> np.ndarray:
        return np.where(codigos == 1, derivada,
                        np.where(codigos == 2, self._umbral(eps),
                                 np.exp(r ** (2.0 * self.parametros.gamma) / 4.0)))

    def _omega_puntos(self, x1: np.ndarray, x2: np.ndarray, eps: float) -> np.ndarray:
        return EvaluadorVorticidad(self.paquete.omega_app(eps)).evaluar(x1, x2)

    def clasificar_region(self, xi: Tuple, eps: float):
        """Región I, II o III del punto (o puntos) ξ"""
        x1, x2 = (np.asarray(c, dtype=float) for c in xi)
        r = np.hypot(x1, x2)
        codigos, _ = self._codigos(r, self._omega_puntos(x1, x2, eps), eps)
        if codigos.ndim == 0:
            return _CODIGOS[int(codigos)]
        return np.vectorize(_CODIGOS.get, otypes=[object])(codigos)

    def peso(self, xi: Tuple, eps: float) -> Union[float, np.ndarray]:
        """W_ε(ξ) según la definición por regiones"""
        x1, x2 = (np.asarray(c, dtype=float) for c in xi)
        r = np.hypot(x1, x2)
        codigos, derivada = self._codigos(r, self._omega_puntos(x1, x2, eps), eps)
        valor = self._peso_desde(r, codigos, derivada, eps)
        return float(valor) if valor.ndim == 0 else valor

    def _muestras_peso(self, eps: float) -> Dict[str, np.ndarray]:
        """W, ∂_rW, ∂_θW/r, t∂_tW y regiones en la malla polar; se guardan por ε"""
        if eps in self._pesos:
            return self._pesos[eps]
        n = self.indice + 1
        r = self.malla.r[:n, None] * np.ones((1, self.n_theta))

        def peso_en(e):
            omega = muestrear(self.paquete.omega_app(e), self.n_theta)[:n]
            codigos, derivada = self._codigos(r, omega, e)
            return self._peso_desde(r, codigos, derivada, e), codigos

        W, codigos = peso_en(eps)
        d_r = np.gradient(W, self.malla.h, axis=0, edge_order=2)
        extendido = np.concatenate([W[:, -1:], W, W[:, :1]], axis=1)
        d_t = np.gradient(extendido, 2.0 * math.pi / self.n_theta, axis=1)[:, 1:-1]
        with np.errstate(divide='ignore', invalid='ignore'):
            d_t_r = np.where(r > 0, d_t / r, 0.0)

        # t∂_t = (ε/2)∂_ε; en I por diferencias centradas, en II explícito, en III nulo
        paso = 1e-4 * eps
        W_mas, _ = peso_en(eps + paso)
        W_menos, _ = peso_en(eps - paso)
        t_dt = np.zeros_like(W)
        region_I = codigos == 1
        t_dt[region_I] = (eps / 2.0) * (W_mas[region_I] - W_menos[region_I]) / (2.0 * paso)
        region_II = codigos == 2
        t_dt[region_II] = -(self.parametros.sigma1 / 4.0) * eps ** (-2.0 * self.parametros.sigma1) * W[region_II]

        muestras = {'W': W, 'W_r': d_r, 'W_t': d_t_r, 't_dt': t_dt, 'codigos': codigos,
                    'rho': rho(r, eps, self.parametros)}
        self._pesos[eps] = muestras
        return muestras

    # ------------------------------------------------------------------
    # Cuadraturas
    # ------------------------------------------------------------------

    def _integral(self, muestras: np.ndarray) -> float:
        filas = np.zeros((self.malla.n_puntos, muestras.shape[1]))
        filas[:muestras.shape[0]] = muestras
        return integrar_polar(filas, self.malla, self.radio)

    def _derivadas(self, campo: CampoPolar) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(f, ∂_rf, ∂_θf/r) en la malla polar recortada"""
        n = self.indice + 1
        r = self.malla.r[:n]
        theta = angulos(self.n_theta)
        valor = np.zeros((n, self.n_theta))
        d_r = np.zeros_like(valor)
        d_t = np.zeros_like(valor)
        with np.errstate(divide='ignore', invalid='ignore'):
            inv_r = np.where(r > 0, 1.0 / r, 0.0)[:, None]
        for (k, paridad), perfil in campo.items():
            derivada = derivada_modo(perfil, k)[:n]
            if paridad is Paridad.COS:
                trig, dtrig = np.cos(k * theta), -k * np.sin(k * theta)
            else:
                trig, dtrig = np.sin(k * theta), k * np.cos(k * theta)
            valor += np.outer(perfil.valores[:n], trig)
            d_r += np.outer(derivada, trig)
            d_t += np.outer(perfil.valores[:n], dtrig) * inv_r
        return valor, d_r, d_t

    def _teps(self, phi: CampoPolar, eps: float) -> np.ndarray:
        n = self.indice + 1
        r = self.malla.r[:n]
        theta = angulos(self.n_theta)
        R, T = np.meshgrid(r, theta, indexing='ij')
        valor, _, _ = evaluar_teps_directo(EvaluadorCorriente(phi), eps, (R * np.cos(T), R * np.sin(T)))
        return valor

    def _recortar(self, muestras: np.ndarray) -> np.ndarray:
        return muestras[:self.indice + 1]

    def norma_x(self, w: Union[CampoPolar, PerturbacionPrueba], eps: float) -> float:
        """‖w‖_{𝒳_ε} = (∫W_ε w²)^{1/2}"""
        campo = w.w if isinstance(w, PerturbacionPrueba) else w
        W = self._muestras_peso(eps)['W']
        valores = self._recortar(muestrear(campo, self.n_theta))
        return math.sqrt(max(self._integral(W * valores ** 2), 0.0))

    def comparar_normas(self, w: Union[CampoPolar, PerturbacionPrueba], eps: float) -> Dict[str, float]:
        """Cocientes ‖w‖_{𝒳_ε}/‖w‖_{exp} y ‖w‖_{𝒳_ε}/‖w‖_{𝒳₀}"""
        campo = w.w if isinstance(w, PerturbacionPrueba) else w
        n = self.indice + 1
        r = self.malla.r[:n, None]
        cuadrado = self._recortar(muestrear(campo, self.n_theta)) ** 2
        norma_x = self.norma_x(campo, eps)
        norma_exp = math.sqrt(self._integral(np.exp(r ** (2.0 * self.parametros.gamma) / 4.0) * cuadrado))
        norma_x0 = math.sqrt(self._integral(bg.A(r) * cuadrado))
        return {
            'norma_x': norma_x,
            'norma_exp': norma_exp,
            'norma_x0': norma_x0,
            'razon_exp': norma_x / norma_exp,
            'razon_x0': norma_x / norma_x0,
        }

    # ------------------------------------------------------------------
    # Energía y difusión
    # ------------------------------------------------------------------

    def energia(self, perturbacion: PerturbacionPrueba, eps: float) -> Dict[str, float]:
        """
        E_ε[w] = ½(‖w‖²_{𝒳_ε} + ⟨φ − 𝒯_εφ, w⟩)

        Returns:
            Dict con 'energia' y sus términos
        """
        W = self._muestras_peso(eps)['W']
        w = self._recortar(muestrear(perturbacion.w, self.n_theta))
        phi = self._recortar(muestrear(perturbacion.phi, self.n_theta))
        teps = self._teps(perturbacion.phi, eps)
        norma2 = self._integral(W * w ** 2)
        phi_w = self._integral(phi * w)
        teps_w = self._integral(teps * w)
        return {
            'energia': 0.5 * (norma2 + phi_w - teps_w),
            'norma_x2': norma2,
            'phi_w': phi_w,
            'teps_w': teps_w,
        }

    def energia_cero(self, perturbacion: PerturbacionPrueba, metodo: str = 'modos') -> float:
        """E₀[w] = ½(‖w‖²_{𝒳₀} + ⟨φ, w⟩), por Parseval en modos o por cuadratura 2-D"""
        if metodo == 'modos':
            total = 0.0
            A = PerfilRadial(self.malla, bg.A(self.malla.r), ClaseDecaimiento.ACOTADA)
            for (n, paridad), a in perturbacion.w.items():
                factor = 2.0 * math.pi if n == 0 else math.pi
                phi = perturbacion.phi.modo(n, paridad)
                total += factor * (cuadratura_radial(A * a * a, 1, self.radio)
                                   + cuadratura_radial(phi * a, 1, self.radio))
            return 0.5 * total
        if metodo == 'polar':
            r = self.malla.r[:self.indice + 1, None]
            w = self._recortar(muestrear(perturbacion.w, self.n_theta))
            phi = self._recortar(muestrear(perturbacion.phi, self.n_theta))
            return 0.5 * self._integral(bg.A(r) * w ** 2 + phi * w)
        raise ErrorConfiguracion("Método desconocido", {'metodo': metodo})

    def difusion(self, perturbacion: PerturbacionPrueba, eps: float) -> Dict[str, float]:
        """
        D_ε[w] en forma explícita, con el contraste de la forma directa

        Forma explícita: ‖∇w‖²_𝒳 + ⟨w, ∇w·∇W⟩ + ¼⟨w, w ξ·∇W⟩ − ‖w‖²_{L²} − ½‖w‖²_𝒳,
        más (σ₁/8)‖1_II ρw‖²_𝒳, −½∫_I (t∂_tW)w² y ⟨𝓛w, 𝒯_εφ⟩.
        """
        pesos = self._muestras_peso(eps)
        W, W_r, W_t = pesos['W'], pesos['W_r'], pesos['W_t']
        n = self.indice + 1
        r = self.malla.r[:n, None]
        w, w_r, w_t = self._derivadas(perturbacion.w)
        gradiente2 = w_r ** 2 + w_t ** 2
        teps = self._teps(perturbacion.phi, eps)
        Lw = self._recortar(muestrear(aplicar_L(perturbacion.w), self.n_theta))
        phi = self._recortar(muestrear(perturbacion.phi, self.n_theta))

        terminos = {
            'gradiente_x': self._integral(W * gradiente2),
            'cruzado': self._integral(w * (w_r * W_r + w_t * W_t)),
            'radial': 0.25 * self._integral(w ** 2 * r * W_r),
            'l2': -self._integral(w ** 2),
            'norma_x': -0.5 * self._integral(W * w ** 2),
        }
        forma_L = sum(terminos.values())
        region_II = pesos['codigos'] == 2
        region_I = pesos['codigos'] == 1
        terminos['region_II'] = (self.parametros.sigma1 / 8.0) * self._integral(
            np.where(region_II, pesos['rho'] ** 2 * W * w ** 2, 0.0))
        terminos['region_I'] = -0.5 * self._integral(np.where(region_I, pesos['t_dt'] * w ** 2, 0.0))
        terminos['acoplamiento'] = self._integral(Lw * teps)
        explicita = forma_L + terminos['region_II'] + terminos['region_I'] + terminos['acoplamiento']

        directa = (-self._integral(Lw * (W * w + phi - teps))
                   - 0.5 * self._integral(pesos['t_dt'] * w ** 2))
        cota = (self._integral(W * gradiente2)
                + self._integral(pesos['rho'] ** 2 * W * w ** 2)
                + self._integral(W * w ** 2))
        discrepancia = abs(explicita - directa) / max(abs(directa), 1e-300)
        if discrepancia > 1e-3:
            self.logger.warning(f"Formas de D_ε discrepantes en ε = {eps}: {discrepancia:.3e}")
        return {
            'difusion': explicita,
            'directa': directa,
            'discrepancia': discrepancia,
            'cota': cota,
            'razon': explicita / cota,
            **terminos,
        }

    # ------------------------------------------------------------------
    # Reporte de coercividad
    # ------------------------------------------------------------------

    def _evaluar_muestra(self, perturbacion: PerturbacionPrueba, eps: float) -> Dict[str, float]:
        energia = self.energia(perturbacion, eps)
        difusion = self.difusion(perturbacion, eps)
        norma2 = energia['norma_x2']
        return {
            'energia': energia['energia'],
            'kappa1': energia['energia'] / norma2,
            'kappa_d': difusion['razon'],
            'teps_relativo': abs(energia['teps_w']) / norma2,
            'discrepancia_d': difusion['discrepancia'],
        }

    def reporte_coercividad(self, eps_lista: Sequence[float], muestras: int = 100,
                            semilla: Optional[int] = None) -> ReporteCoercividad:
        """
        κ₁ y κ_D medidos sobre perturbaciones aleatorias admisibles

        Las constantes se miden y se registran; no se comparan con valores teóricos.
        """
        semilla = obtener_config().SEMILLA if semilla is None else semilla
        rng = np.random.default_rng(semilla)
        perturbaciones = [PerturbacionPrueba.aleatoria(self.malla, rng) for _ in range(muestras)]
        reporte = ReporteCoercividad(semilla=semilla, muestras=muestras)

        for eps in eps_lista:
            self._muestras_peso(eps)
            with ThreadPoolExecutor(max_workers=4) as ejecutor:
                resultados = list(ejecutor.map(lambda p: self._evaluar_muestra(p, eps), perturbaciones))
            kappa1 = min(res['kappa1'] for res in resultados)
            kappa_d = min(res['kappa_d'] for res in resultados)
            reporte.kappa1[eps] = kappa1
            reporte.kappa_d[eps] = kappa_d
            reporte.energia_positiva &= all(res['energia'] > 0 for res in resultados)
            reporte.razones_normas[eps] = {
                'teps_relativo_medio': float(np.mean([res['teps_relativo'] for res in resultados])),
                'discrepancia_d_max': max(res['discrepancia_d'] for res in resultados),
                **{k: float(np.mean([self.comparar_normas(p, eps)[k] for p in perturbaciones[:10]]))
                   for k in ('razon_exp', 'razon_x0')},
            }
            self.logger.info(f"ε = {eps}: κ₁ = {kappa1:.4f}, κ_D = {kappa_d:.4f}")

        for nombre, valores in (('kappa1', reporte.kappa1), ('kappa_d', reporte.kappa_d)):
            lista = list(valores.values())
            if lista:
                media = float(np.mean(lista))
                reporte.estabilidad[nombre] = max(abs(v - media) for v in lista) / abs(media)
        if len(eps_lista) >= 2:
            reporte.ajuste_teps = ajustar_pendiente(
                list(eps_lista), [reporte.razones_normas[e]['teps_relativo_medio'] for e in eps_lista])
        return reporte


@lru_cache(maxsize=2)
def _diagnostico_en_cache(sigma1: float, sigma2: float, n_theta: int,
                         r_max: float, n_puntos: int) -> DiagnosticoEnergia:
    return DiagnosticoEnergia()


def diagnostico_por_defecto() -> DiagnosticoEnergia:
    """Diagnóstico del paquete base, compartido mientras la configuración no cambie"""
    cfg = obtener_config()
    return _diagnostico_en_cache(cfg.SIGMA1, cfg.SIGMA2, cfg.N_THETA, cfg.R_MAX, cfg.N_PUNTOS)


def clasificar_region(xi: Tuple, eps: float, diagnostico: Optional[DiagnosticoEnergia] = None):
    return (diagnostico or diagnostico_por_defecto()).clasificar_region(xi, eps)


def peso(xi: Tuple, eps: float, diagnostico: Optional[DiagnosticoEnergia] = None):
    return (diagnostico or diagnostico_por_defecto()).peso(xi, eps)
