"""
Modelos de datos para el sistema de expansión del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional

Enumeraciones, reportes y jerarquía de errores compartidos por todos
los módulos.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

try:
    import colorlog
    COLORLOG_DISPONIBLE = True
except ImportError:
    colorlog = None
    COLORLOG_DISPONIBLE = False

FORMATO_LOG = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configurar_logger(nombre: str, nivel: Optional[str] = None) -> logging.Logger:
    """
    Logger con un único StreamHandler (coloreado si colorlog está instalado)

    Args:
        nombre: Nombre del logger, normalmente __name__
        nivel: Nivel de log; por defecto el de la configuración activa

    Returns:
        logging.Logger listo para usar
    """
    if nivel is None:
        from config import obtener_config
        nivel = obtener_config().LOG_LEVEL

    logger = logging.getLogger(nombre)
    logger.setLevel(getattr(logging, str(nivel).upper(), logging.INFO))

    if not logger.handlers:
        handler = logging.StreamHandler()
        if COLORLOG_DISPONIBLE:
            formatter = colorlog.ColoredFormatter('%(log_color)s' + FORMATO_LOG)
        else:
            formatter = logging.Formatter(FORMATO_LOG)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


# ----------------------------------------------------------------------
# Enumeraciones
# ----------------------------------------------------------------------

class Paridad(Enum):
    """Paridad angular de un modo de Fourier"""
    COS = "cos"
    SIN = "sin"

    @classmethod
    def from_string(cls, valor: str):
        """Crear Paridad desde string con flexibilidad"""
        if isinstance(valor, cls):
            return valor
        mapeo = {
            'cos': cls.COS,
            'coseno': cls.COS,
            'c': cls.COS,
            'sin': cls.SIN,
            'sen': cls.SIN,
            'seno': cls.SIN,
            's': cls.SIN,
        }
        clave = str(valor).strip().lower()
        if clave not in mapeo:
            raise ErrorConfiguracion(f"Paridad desconocida: {valor}")
        return mapeo[clave]

    def conjugada(self) -> 'Paridad':
        """cos <-> sin"""
        return Paridad.SIN if self is Paridad.COS else Paridad.COS


class ClaseDecaimiento(Enum):
    """Clase de decaimiento de un perfil radial"""
    GAUSSIANA = "gaussiana"
    POLINOMICA = "polinomica"
    ACOTADA = "acotada"

    @classmethod
    def from_string(cls, valor: str):
        """Crear ClaseDecaimiento desde string"""
        if isinstance(valor, cls):
            return valor
        mapeo = {
            'gaussiana': cls.GAUSSIANA,
            'gaussian_weighted': cls.GAUSSIANA,
            'polinomica': cls.POLINOMICA,
            'polynomial_growth': cls.POLINOMICA,
            'acotada': cls.ACOTADA,
            'bounded': cls.ACOTADA,
        }
        clave = str(valor).strip().lower()
        if clave not in mapeo:
            raise ErrorConfiguracion(f"Clase de decaimiento desconocida: {valor}")
        return mapeo[clave]

    @staticmethod
    def combinar(a: 'ClaseDecaimiento', b: 'ClaseDecaimiento') -> 'ClaseDecaimiento':
        """Clase del producto de dos perfiles"""
        if ClaseDecaimiento.GAUSSIANA in (a, b):
            return ClaseDecaimiento.GAUSSIANA
        if ClaseDecaimiento.POLINOMICA in (a, b):
            return ClaseDecaimiento.POLINOMICA
        return ClaseDecaimiento.ACOTADA


class Region(Enum):
    """Regiones del peso de la energía"""
    I = "I"
    II = "II"
    III = "III"


# ----------------------------------------------------------------------
# Errores
# ----------------------------------------------------------------------

class ErrorDipolo(Exception):
    """Error base del sistema; lleva detalles legibles por máquina"""

    codigo_salida = 3

    def __init__(self, mensaje: str, detalles: Optional[Dict[str, Any]] = None):
        super().__init__(mensaje)
        self.mensaje = mensaje
        self.detalles = detalles or {}

    def a_dict(self) -> Dict[str, Any]:
        return {
            'tipo': type(self).__name__,
            'mensaje': self.mensaje,
            'detalles': self.detalles,
        }


class ErrorConfiguracion(ErrorDipolo):
    """Parámetros, mallas o archivos de configuración inválidos"""
    codigo_salida = 2


class ErrorMalla(ErrorDipolo):
    """Mallas incompatibles o evaluación fuera del soporte radial"""


class ErrorDecaimiento(ErrorDipolo):
    """La clase de decaimiento no es admitida por la operación"""


class ErrorSolvencia(ErrorDipolo):
    """Violación de la condición de solvencia de Λ"""


class ErrorNumerico(ErrorDipolo):
    """Fallo de un resolvedor (matriz singular, NaN, desbordamiento)"""


class ErrorExpansion(ErrorDipolo):
    """Falla de consistencia interna de la expansión"""


class ErrorMomentos(ErrorDipolo):
    """Perturbación con momentos no nulos"""


# ----------------------------------------------------------------------
# Parámetros y reportes
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ParametrosPeso:
    """Parámetros σ₁, σ₂ del peso W_ε; γ = σ₁/σ₂"""
    sigma1: float = 0.2
    sigma2: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.sigma1 < 0.5):
            raise ErrorConfiguracion("σ₁ debe estar en (0, 1/2)", {'sigma1': self.sigma1})
        if not self.sigma2 > 1.0:
            raise ErrorConfiguracion("σ₂ debe ser mayor que 1", {'sigma2': self.sigma2})
        if not self.gamma < 0.5:
            raise ErrorConfiguracion("γ = σ₁/σ₂ debe ser menor que 1/2")

    @property
    def gamma(self) -> float:
        return self.sigma1 / self.sigma2


@dataclass(frozen=True)
class ParametrosDipolo:
    """Circulación Γ, separación d y viscosidad ν del dipolo"""
    circulacion: float
    separacion: float
    viscosidad: float

    def __post_init__(self):
        for nombre in ('circulacion', 'separacion', 'viscosidad'):
            valor = getattr(self, nombre)
            if not (valor > 0 and math.isfinite(valor)):
                raise ErrorConfiguracion(f"{nombre} debe ser positivo", {nombre: valor})

    @property
    def delta(self) -> float:
        """Inverso del número de Reynolds ν/Γ"""
        return self.viscosidad / self.circulacion

    @property
    def t_adveccion(self) -> float:
        return self.separacion ** 2 / self.circulacion

    @property
    def t_difusion(self) -> float:
        return self.separacion ** 2 / self.viscosidad

    def eps(self, t: float) -> float:
        """Razón de aspecto √(νt)/d"""
        return math.sqrt(self.viscosidad * t) / self.separacion

    def tiempo(self, eps: float) -> float:
        """Tiempo en que la razón de aspecto vale eps"""
        return (eps * self.separacion) ** 2 / self.viscosidad

    @classmethod
    def desde_reynolds(cls, reynolds: float, circulacion: float = 2 * math.pi,
                       separacion: float = 1.0) -> 'ParametrosDipolo':
        return cls(circulacion, separacion, circulacion / reynolds)


@dataclass
class ReporteLambda:
    """Resultado de invertir Λ en un modo"""
    modo: int
    paridad: Paridad
    phi: Any
    w: Any
    residuos_frontera: Dict[str, float] = field(default_factory=dict)
    defecto: Optional[float] = None
    condicion: Optional[float] = None


@dataclass
class AjustePendiente:
    """Ajuste log-log por mínimos cuadrados con su ventana"""
    pendiente: float
    ordenada: float
    ventana: Tuple[float, float]
    muestras: List[Tuple[float, float]] = field(default_factory=list)

    def a_dict(self) -> Dict[str, Any]:
        return {
            'pendiente': self.pendiente,
            'ordenada': self.ordenada,
            'ventana': list(self.ventana),
            'muestras': [list(m) for m in self.muestras],
        }


@dataclass
class ReporteResiduo:
    """Forma en serie del residuo y normas medidas"""
    orden: int
    serie: Any
    h0: Any
    h1: Any
    residuo_delta2: Dict[int, Any] = field(default_factory=dict)
    defectos_consistencia: Dict[str, float] = field(default_factory=dict)
    normas: List[Dict[str, float]] = field(default_factory=list)
    ajustes: Dict[str, AjustePendiente] = field(default_factory=dict)


@dataclass
class ReporteTheta:
    """Escalamiento de ∇(Φ_app + F(Ω_app))"""
    orden: int
    exponente_crecimiento: int
    valores: List[Tuple[float, float]] = field(default_factory=list)
    ajuste: Optional[AjustePendiente] = None
    exponente_ajustado: Optional[float] = None


@dataclass
class ReporteCoercividad:
    """Constantes de coercividad medidas sobre perturbaciones aleatorias"""
    semilla: int
    muestras: int
    kappa1: Dict[float, float] = field(default_factory=dict)
    kappa_d: Dict[float, float] = field(default_factory=dict)
    energia_positiva: bool = True
    estabilidad: Dict[str, float] = field(default_factory=dict)
    ajuste_teps: Optional[AjustePendiente] = None
    razones_normas: Dict[float, Dict[str, float]] = field(default_factory=dict)

    def a_dict(self) -> Dict[str, Any]:
        return {
            'semilla': self.semilla,
            'muestras': self.muestras,
            'kappa1': {str(k): v for k, v in self.kappa1.items()},
            'kappa_d': {str(k): v for k, v in self.kappa_d.items()},
            'energia_positiva': self.energia_positiva,
            'estabilidad': self.estabilidad,
            'ajuste_teps': self.ajuste_teps.a_dict() if self.ajuste_teps else None,
            'razones_normas': {str(k): v for k, v in self.razones_normas.items()},
        }


@dataclass
class ReporteValidacionDNS:
    """Comparación de la simulación con la ley de velocidad"""
    alpha: float
    muestras: List[Dict[str, float]] = field(default_factory=list)
    razon_deficit: Dict[str, float] = field(default_factory=dict)
    ajuste_deficit: Optional[AjustePendiente] = None
    razon_l1_max: float = float('nan')
    efecto_imagenes: Optional[float] = None
