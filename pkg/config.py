# Configuración del sistema de expansión del dipolo viscoso
import os

from dotenv import load_dotenv

load_dotenv()


def _flotante(nombre: str, defecto: float) -> float:
    return float(os.environ.get(nombre) or defecto)


def _entero(nombre: str, defecto: int) -> int:
    return int(os.environ.get(nombre) or defecto)


class Config:
    """Configuración base del sistema"""

    VERSION = '1.0.0'
    FORMATO_PAQUETE = 'dipolo-viscoso/1'

    # Malla radial
    R_MAX = _flotante('DIPOLO_R_MAX', 25.0)
    N_PUNTOS = _entero('DIPOLO_N_PUNTOS', 4096)
    N_THETA = _entero('DIPOLO_N_THETA', 256)

    # Radios de trabajo (en unidades autosemejantes)
    RADIO_NORMA_Y = _flotante('DIPOLO_RADIO_NORMA_Y', 12.0)
    RADIO_SOPORTE = _flotante('DIPOLO_RADIO_SOPORTE', 20.0)
    RADIO_RELACION = _flotante('DIPOLO_RADIO_RELACION', 8.0)

    # Tolerancias
    TOL_SOLVENCIA = _flotante('DIPOLO_TOL_SOLVENCIA', 1e-10)
    TOL_EXPANSION = _flotante('DIPOLO_TOL_EXPANSION', 1e-6)
    TOL_COLA = _flotante('DIPOLO_TOL_COLA', 1e-12)
    UMBRAL_TAYLOR = 1e-3

    # Expansión asintótica
    ORDEN = _entero('DIPOLO_ORDEN', 6)
    N_MAX_TEPS = _entero('DIPOLO_N_MAX_TEPS', 16)

    # Peso de la energía
    SIGMA1 = _flotante('DIPOLO_SIGMA1', 0.2)
    SIGMA2 = _flotante('DIPOLO_SIGMA2', 2.0)

    # Simulación espectral
    DNS_N = _entero('DIPOLO_DNS_N', 512)
    DNS_L = _flotante('DIPOLO_DNS_L', 24.0)
    DNS_EPS0 = _flotante('DIPOLO_DNS_EPS0', 0.05)
    DNS_RE = _flotante('DIPOLO_DNS_RE', 5000.0)
    DNS_SIGMA = _flotante('DIPOLO_DNS_SIGMA', 0.0)
    DNS_CFL = _flotante('DIPOLO_DNS_CFL', 0.5)

    SEMILLA = _entero('DIPOLO_SEMILLA', 20240611)

    # Configuración de logs
    LOG_LEVEL = os.environ.get('LOG_LEVEL') or 'INFO'
    DIRECTORIO_SALIDA = os.environ.get('DIPOLO_SALIDA') or os.path.join(
        os.path.dirname(os.path.abspath(__file__)), 'resultados'
    )


class DesarrolloConfig(Config):
    """Configuración para desarrollo"""
    LOG_LEVEL = os.environ.get('LOG_LEVEL') or 'DEBUG'


class PruebasConfig(Config):
    """Configuración para pruebas: mallas más pequeñas donde se permite"""
    N_THETA = 128
    DNS_N = 128
    LOG_LEVEL = 'WARNING'


class ProduccionConfig(Config):
    """Configuración para corridas largas"""
    LOG_LEVEL = os.environ.get('LOG_LEVEL') or 'INFO'


# Diccionario de configuraciones
config = {
    'desarrollo': DesarrolloConfig,
    'pruebas': PruebasConfig,
    'produccion': ProduccionConfig,
    'default': Config,
}


# Valores leídos de un archivo `clave = valor` (ver app.cargar_archivo_config)
_sobrescrituras = {}


def aplicar_sobrescrituras(valores: dict):
    """Registra valores que prevalecen sobre la clase de configuración activa"""
    _sobrescrituras.update(valores)


def restablecer_sobrescrituras():
    _sobrescrituras.clear()


def obtener_config():
    """Clase de configuración elegida por DIPOLO_ENTORNO, con las sobrescrituras aplicadas"""
    base = config.get(os.environ.get('DIPOLO_ENTORNO', 'default'), Config)
    if not _sobrescrituras:
        return base
    return type(f"{base.__name__}Personalizada", (base,), dict(_sobrescrituras))
