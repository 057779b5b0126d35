"""
Módulo de simulación pseudo-espectral 2-D del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional

Forma vorticidad ∂_tω + u·∇ω = νΔω en una caja doblemente periódica,
factor integrante para νΔ, RK4 para la advección y regla de 2/3.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import obtener_config
from .campos2d import Malla2D, dipolo_fisico
from .expansion import PaqueteExpansion, ajustar_pendiente, alpha, velocidad_gaussiana
from .modelos import (
    ErrorConfiguracion,
    ErrorNumerico,
    ParametrosDipolo,
    ReporteValidacionDNS,
    configurar_logger,
)
from .reportes import escribir_csv

logger = configurar_logger(__name__)


@dataclass(frozen=True)
class ConfiguracionDNS:
    """
    Parámetros de una corrida

    Args:
        parametros: Γ, d, ν del dipolo
        eps0: Razón de aspecto inicial ε₀ ∈ [0.02, 0.15]
        n: Puntos por lado
        L: Lado de la caja (≥ 16d)
        cfl: Número de Courant
        sigma: Exponente del horizonte T_adv·max(1, δ^{−σ})
        t_final: Tope adicional de la duración, medido desde t₀
        intervalo: Pasos entre mediciones
        solo_difusion: Apaga la advección
    """
    parametros: ParametrosDipolo
    eps0: float = 0.05
    n: int = 512
    L: float = 24.0
    cfl: float = 0.5
    sigma: float = 0.0
    t_final: Optional[float] = None
    intervalo: int = 5
    solo_difusion: bool = False

    def __post_init__(self):
        if not 0.02 <= self.eps0 <= 0.15:
            raise ErrorConfiguracion("ε₀ debe estar en [0.02, 0.15]", {'eps0': self.eps0})
        if self.n % 2 or self.n < 16:
            raise ErrorConfiguracion("n debe ser par y ≥ 16", {'n': self.n})
        if self.L < 16.0 * self.parametros.separacion:
            raise ErrorConfiguracion("La caja debe medir al menos 16d",
                                     {'L': self.L, 'd': self.parametros.separacion})
        if not 0.0 < self.cfl <= 1.0:
            raise ErrorConfiguracion("CFL fuera de (0, 1]", {'cfl': self.cfl})

    @classmethod
    def desde_config(cls, **cambios) -> 'ConfiguracionDNS':
        cfg = obtener_config()
        base = cls(parametros=ParametrosDipolo.desde_reynolds(cfg.DNS_RE),
                   eps0=cfg.DNS_EPS0, n=cfg.DNS_N, L=cfg.DNS_L,
                   cfl=cfg.DNS_CFL, sigma=cfg.DNS_SIGMA)
        return replace(base, **cambios)

    @property
    def t0(self) -> float:
        return self.parametros.tiempo(self.eps0)

    @property
    def duracion(self) -> float:
        p = self.parametros
        duracion = p.t_adveccion * max(1.0, p.delta ** (-self.sigma))
        return duracion if self.t_final is None else min(duracion, self.t_final)

    @property
    def malla(self) -> Malla2D:
        dx = self.L / self.n
        return Malla2D(-self.L / 2.0, self.L / 2.0 - dx, -self.L / 2.0, self.L / 2.0 - dx,
                       self.n, self.n)

    def a_dict(self) -> Dict:
        p = self.parametros
        return {'circulacion': p.circulacion, 'separacion': p.separacion,
                'viscosidad': p.viscosidad, 'eps0': self.eps0, 'n': self.n, 'L': self.L,
                'cfl': self.cfl, 'sigma': self.sigma, 't_final': self.t_final,
                'solo_difusion': self.solo_difusion}


@dataclass
class EstadoEspectral:
    """Modos de vorticidad (rfft2) en la caja [−L/2, L/2)², con ν y el tiempo actual"""
    omega_hat: np.ndarray
    n: int
    L: float
    viscosidad: float
    t: float
    kx: np.ndarray = field(init=False, repr=False)
    ky: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    mascara: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = 2.0 * math.pi / self.L
        self.kx = (k * np.fft.fftfreq(self.n, 1.0 / self.n))[:, None]
        self.ky = (k * np.fft.rfftfreq(self.n, 1.0 / self.n))[None, :]
        self.k2 = self.kx ** 2 + self.ky ** 2
        k_max = k * self.n / 2.0
        self.mascara = ((np.abs(self.kx) < (2.0 / 3.0) * k_max)
                        & (np.abs(self.ky) < (2.0 / 3.0) * k_max)).astype(float)

    @classmethod
    def desde_campo(cls, omega: np.ndarray, L: float, viscosidad: float, t: float) -> 'EstadoEspectral':
        omega = np.asarray(omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise ErrorConfiguracion("La vorticidad debe ser una matriz cuadrada")
        return cls(np.fft.rfft2(omega), omega.shape[0], L, viscosidad, t)

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.L / 2.0 + self.dx * np.arange(self.n)

    def omega(self) -> np.ndarray:
        return np.fft.irfft2(self.omega_hat, s=(self.n, self.n))

    def psi_hat(self) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            psi = np.where(self.k2 > 0, -self.omega_hat / self.k2, 0.0)
        return psi

    def velocidad(self, omega_hat: Optional[np.ndarray] = None):
        """u = ∇⊥ψ = (−∂₂ψ, ∂₁ψ), Δψ = ω"""
        omega_hat = self.omega_hat if omega_hat is None else omega_hat
        with np.errstate(divide='ignore', invalid='ignore'):
            psi = np.where(self.k2 > 0, -omega_hat / self.k2, 0.0)
        forma = (self.n, self.n)
        u1 = np.fft.irfft2(-1j * self.ky * psi, s=forma)
        u2 = np.fft.irfft2(1j * self.kx * psi, s=forma)
        return u1, u2

    # Invariantes
    def circulacion(self) -> float:
        return float(self.omega_hat[0, 0].real) * self.dx ** 2

    def enstrofia(self) -> float:
        return float(np.sum(self.omega() ** 2)) * self.dx ** 2

    def norma_l1(self) -> float:
        return float(np.sum(np.abs(self.omega()))) * self.dx ** 2

    def momento_m1(self) -> float:
        """∫x₁ω, conservado por la simetría impar"""
        return float(np.sum(self.x[:, None] * self.omega())) * self.dx ** 2

    def defecto_simetria(self) -> float:
        """sup|ω(x₁, x₂) + ω(−x₁, x₂)| relativo a sup|ω|"""
        omega = self.omega()
        espejo = np.roll(omega[::-1, :], 1, axis=0)
        return float(np.max(np.abs(omega + espejo)) / max(np.max(np.abs(omega)), 1e-300))


class SimuladorDNS:
    """Integración temporal y mediciones de una corrida"""

    def __init__(self, configuracion: ConfiguracionDNS, paquete: Optional[PaqueteExpansion] = None):
        self.configuracion = configuracion
        self.paquete = paquete
        self.parametros = configuracion.parametros
        self.logger = self._configurar_logger()

    def _configurar_logger(self):
        return configurar_logger(__name__)

    # ------------------------------------------------------------------
    # Estado inicial
    # ------------------------------------------------------------------

    def iniciar_desde_dipolo(self, Z2: float = 0.0) -> EstadoEspectral:
        """
        Muestrea ω_app^ν en t₀ y lo transforma

        Raises:
            ErrorConfiguracion: si la vorticidad no es despreciable en el borde de la caja
        """
        cfg = self.configuracion
        omega = dipolo_fisico(self.parametros, cfg.t0, Z2, cfg.malla, self.paquete)
        borde = max(np.max(np.abs(omega[0, :])), np.max(np.abs(omega[:, 0])),
                    np.max(np.abs(omega[-1, :])), np.max(np.abs(omega[:, -1])))
        relativo = borde / np.max(np.abs(omega))
        if relativo > 1e-12:
            raise ErrorConfiguracion("El dipolo no cabe en la caja", {'cola_relativa': float(relativo)})
        estado = EstadoEspectral.desde_campo(omega, cfg.L, self.parametros.viscosidad, cfg.t0)
        self.logger.info(f"Estado inicial: ε₀ = {cfg.eps0}, N = {cfg.n}, L = {cfg.L}, "
                         f"circulación total = {estado.circulacion():.3e}")
        return estado

    # ------------------------------------------------------------------
    # Paso temporal
    # ------------------------------------------------------------------

    def _no_lineal(self, estado: EstadoEspectral, omega_hat: np.ndarray) -> np.ndarray:
        """−P(u·∇ω) con la máscara de 2/3"""
        if self.configuracion.solo_difusion:
            return np.zeros_like(omega_hat)
        forma = (estado.n, estado.n)
        u1, u2 = estado.velocidad(omega_hat)
        d1 = np.fft.irfft2(1j * estado.kx * omega_hat, s=forma)
        d2 = np.fft.irfft2(1j * estado.ky * omega_hat, s=forma)
        return -estado.mascara * np.fft.rfft2(u1 * d1 + u2 * d2)

    def paso_cfl(self, estado: EstadoEspectral) -> float:
        u1, u2 = estado.velocidad()
        maximo = float(np.max(np.hypot(u1, u2)))
        if maximo == 0.0:
            return self.configuracion.cfl * estado.dx ** 2 / max(estado.viscosidad, 1e-300)
        return self.configuracion.cfl * estado.dx / maximo

    def paso(self, estado: EstadoEspectral, dt: Optional[float] = None) -> EstadoEspectral:
        """
        Un paso RK4 con factor integrante e^{−νk²dt}

        Raises:
            ErrorNumerico: si aparecen NaN o desbordamientos
        """
        dt = self.paso_cfl(estado) if dt is None else dt
        E = np.exp(-estado.viscosidad * estado.k2 * dt / 2.0)
        E2 = E * E
        v = estado.omega_hat
        k1 = self._no_lineal(estado, v)
        k2 = self._no_lineal(estado, E * (v + 0.5 * dt * k1))
        k3 = self._no_lineal(estado, E * v + 0.5 * dt * k2)
        k4 = self._no_lineal(estado, E2 * v + dt * E * k3)
        nuevo = E2 * v + (dt / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)
        if not np.all(np.isfinite(nuevo)):
            self.logger.error(f"Error en el paso temporal: valores no finitos en t = {estado.t}")
            raise ErrorNumerico("Valores no finitos en la vorticidad",
                                {'t': estado.t, 'dt': dt})
        return replace(estado, omega_hat=nuevo, t=estado.t + dt)

    # ------------------------------------------------------------------
    # Mediciones
    # ------------------------------------------------------------------

    def centroide(self, estado: EstadoEspectral, Z_previo: float = 0.0) -> float:
        """Z₂ = m₂/M sobre el semiplano derecho, desenvolviendo la periodicidad"""
        omega = estado.omega()
        x = estado.x
        derecha = omega[x > 0, :]
        L = estado.L
        y = ((x - Z_previo + L / 2.0) % L) - L / 2.0 + Z_previo
        return float(np.sum(derecha * y[None, :]) / np.sum(derecha))

    def distancia_l1(self, estado: EstadoEspectral, Z2: float) -> float:
        """‖ω − ω_app‖₁/(Γε²)"""
        omega_app = dipolo_fisico(self.parametros, estado.t, Z2, self.configuracion.malla, self.paquete)
        distancia = float(np.sum(np.abs(estado.omega() - omega_app))) * estado.dx ** 2
        eps2 = self.parametros.eps(estado.t) ** 2
        return distancia / (self.parametros.circulacion * eps2)

    def _registro(self, estado: EstadoEspectral, Z2: float) -> Dict[str, float]:
        return {
            't': estado.t,
            'eps': self.parametros.eps(estado.t),
            'Z2': Z2,
            'circulacion': estado.circulacion(),
            'circulacion_derecha': float(np.sum(estado.omega()[estado.x > 0, :])) * estado.dx ** 2,
            'm1': estado.momento_m1(),
            'enstrofia': estado.enstrofia(),
            'norma_l1': estado.norma_l1(),
            'razon_L1': self.distancia_l1(estado, Z2),
        }

    def ejecutar(self, estado: Optional[EstadoEspectral] = None) -> List[Dict[str, float]]:
        """Integra hasta t₀ + duración registrando la trayectoria"""
        cfg = self.configuracion
        estado = self.iniciar_desde_dipolo() if estado is None else estado
        t_fin = cfg.t0 + cfg.duracion
        Z2 = self.centroide(estado) if not cfg.solo_difusion else 0.0
        trayectoria = [self._registro(estado, Z2)]
        pasos = 0
        while estado.t < t_fin - 1e-14 * t_fin:
            dt = min(self.paso_cfl(estado), t_fin - estado.t)
            estado = self.paso(estado, dt)
            pasos += 1
            if pasos % cfg.intervalo == 0 or estado.t >= t_fin - 1e-14 * t_fin:
                if not cfg.solo_difusion:
                    Z2 = self.centroide(estado, Z2)
                trayectoria.append(self._registro(estado, Z2))
        self.estado_final = estado
        self.logger.info(f"Corrida terminada: {pasos} pasos, t = {estado.t:.6g}")
        return trayectoria


def velocidades(trayectoria: Sequence[Dict[str, float]], ventana: int = 5) -> np.ndarray:
    """Z₂' por regresión lineal en ventanas centradas de `ventana` muestras"""
    t = np.array([r['t'] for r in trayectoria])
    Z2 = np.array([r['Z2'] for r in trayectoria])
    if t.size < 2:
        raise ErrorConfiguracion("Trayectoria demasiado corta para medir la velocidad")
    medio = max(1, ventana // 2)
    salida = np.empty_like(t)
    for i in range(t.size):
        a, b = max(0, i - medio), min(t.size, i + medio + 1)
        if b - a < 2:
            a, b = max(0, b - 2), max(2, b)
        salida[i] = np.polyfit(t[a:b], Z2[a:b], 1)[0]
    return salida


def medir(trayectoria: Sequence[Dict[str, float]], paquete: PaqueteExpansion,
          parametros: ParametrosDipolo, ventana: int = 5,
          correccion_imagenes: float = 0.0) -> ReporteValidacionDNS:
    """
    Déficit de velocidad frente a 2παε⁴ y distancia L¹ a lo largo de la corrida

    Args:
        correccion_imagenes: Diferencia relativa de estimar_efecto_imagenes;
            la velocidad medida se divide por (1 + correccion_imagenes)
    """
    valor_alpha = alpha(paquete)
    velocidad = velocidades(trayectoria, ventana) / (1.0 + correccion_imagenes)
    reporte = ReporteValidacionDNS(alpha=valor_alpha, efecto_imagenes=correccion_imagenes)
    for registro, v in zip(trayectoria, velocidad):
        eps = registro['eps']
        deficit = 1.0 - 2.0 * math.pi * parametros.separacion * v / parametros.circulacion
        prediccion = 2.0 * math.pi * valor_alpha * eps ** 4
        reporte.muestras.append({**registro, 'velocidad': float(v), 'deficit': deficit,
                                 'prediccion': prediccion, 'razon': deficit / prediccion})
    razones = [m['razon'] for m in reporte.muestras]
    reporte.razon_deficit = {'min': float(np.min(razones)), 'max': float(np.max(razones)),
                             'media': float(np.mean(razones))}
    reporte.razon_l1_max = float(max(m['razon_L1'] for m in reporte.muestras))
    eps = [m['eps'] for m in reporte.muestras]
    deficits = [m['deficit'] for m in reporte.muestras]
    if max(eps) > 1.2 * min(eps) and all(d > 0 for d in deficits):
        reporte.ajuste_deficit = ajustar_pendiente(eps, deficits)
    return reporte


def barrido_deficit(configuracion: ConfiguracionDNS, eps0_lista: Sequence[float],
                    paquete: PaqueteExpansion, corregir_imagenes: bool = True) -> ReporteValidacionDNS:
    """
    Una corrida por ε₀; el ajuste del déficit se hace sobre la media de cada corrida

    Con corregir_imagenes cada corrida descuenta el efecto de las imágenes
    periódicas estimado en su propio ε₀.
    """
    reporte = ReporteValidacionDNS(alpha=alpha(paquete))
    efectos = []
    for eps0 in eps0_lista:
        configuracion_eps = replace(configuracion, eps0=eps0)
        efecto = estimar_efecto_imagenes(configuracion_eps)['diferencia_relativa'] if corregir_imagenes else 0.0
        efectos.append(efecto)
        simulador = SimuladorDNS(configuracion_eps, paquete)
        parcial = medir(simulador.ejecutar(), paquete, configuracion.parametros, correccion_imagenes=efecto)
        reporte.muestras.append({
            'eps': float(np.mean([m['eps'] for m in parcial.muestras])),
            'deficit': float(np.mean([m['deficit'] for m in parcial.muestras])),
            'razon': parcial.razon_deficit['media'],
            'razon_L1': parcial.razon_l1_max,
            'efecto_imagenes': efecto,
        })
        logger.info(f"ε₀ = {eps0}: efecto de imágenes {efecto:+.3e}, "
                    f"déficit medio {reporte.muestras[-1]['deficit']:.4e}")
    reporte.efecto_imagenes = float(np.mean(efectos)) if efectos else None
    razones = [m['razon'] for m in reporte.muestras]
    reporte.razon_deficit = {'min': min(razones), 'max': max(razones), 'media': float(np.mean(razones))}
    reporte.razon_l1_max = max(m['razon_L1'] for m in reporte.muestras)
    if len(eps0_lista) >= 2:
        reporte.ajuste_deficit = ajustar_pendiente([m['eps'] for m in reporte.muestras],
                                                   [abs(m['deficit']) for m in reporte.muestras])
    return reporte


def estimar_efecto_imagenes(configuracion: ConfiguracionDNS) -> Dict[str, float]:
    """
    Velocidad periódica media sobre el vórtice derecho frente a la del par gaussiano libre

    El campo propio del vórtice no contribuye a la media; la diferencia
    mide la contaminación de las imágenes periódicas (y de la malla).
    """
    simulador = SimuladorDNS(replace(configuracion, solo_difusion=False))
    estado = simulador.iniciar_desde_dipolo()
    omega = estado.omega()
    _, u2 = estado.velocidad()
    derecha = estado.x > 0
    periodica = float(np.sum(u2[derecha] * omega[derecha]) / np.sum(omega[derecha]))
    p = configuracion.parametros
    libre = p.circulacion / p.separacion * velocidad_gaussiana(configuracion.eps0)
    return {'periodica': periodica, 'libre': libre, 'diferencia_relativa': (periodica - libre) / libre}


def tabla_trayectoria(reporte: ReporteValidacionDNS) -> pd.DataFrame:
    columnas = ['t', 'eps', 'Z2', 'velocidad', 'deficit', 'razon_L1']
    return pd.DataFrame([{c: m.get(c, float('nan')) for c in columnas} for m in reporte.muestras],
                        columns=columnas)


def exportar_trayectoria(reporte: ReporteValidacionDNS, ruta: str, metadatos: Optional[Dict] = None) -> str:
    """Columnas (t, eps, Z2, velocidad, deficit, razon_L1)"""
    return escribir_csv(tabla_trayectoria(reporte), ruta, metadatos)


def exportar_instantanea(estado: EstadoEspectral, ruta: str, metadatos: Optional[Dict] = None) -> str:
    """Columnas (x, y, omega)"""
    x1, x2 = np.meshgrid(estado.x, estado.x, indexing='ij')
    tabla = pd.DataFrame({'x': x1.ravel(), 'y': x2.ravel(), 'omega': estado.omega().ravel()})
    return escribir_csv(tabla, ruta, metadatos)
