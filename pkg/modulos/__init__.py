"""
Módulos principales del sistema de expansión del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional
"""

__version__ = "1.0.0"
__author__ = "Equipo de Desarrollo"

# Importaciones principales
from .modelos import (
    ErrorDipolo,
    ErrorConfiguracion,
    ParametrosDipolo,
    ParametrosPeso,
    Paridad,
    ClaseDecaimiento,
)
from .nucleo_polar import MallaRadial, PerfilRadial, CampoPolar, SerieEpsDelta
from .expansion import (
    PaqueteExpansion,
    ConstructorExpansion,
    construir_paquete,
    alpha,
    relacion_funcional,
    guardar_paquete,
    cargar_paquete,
)
from .reportes import GeneradorReportes
from .dns import ConfiguracionDNS, SimuladorDNS

__all__ = [
    'ErrorDipolo',
    'ErrorConfiguracion',
    'ParametrosDipolo',
    'ParametrosPeso',
    'Paridad',
    'ClaseDecaimiento',
    'MallaRadial',
    'PerfilRadial',
    'CampoPolar',
    'SerieEpsDelta',
    'PaqueteExpansion',
    'ConstructorExpansion',
    'construir_paquete',
    'alpha',
    'relacion_funcional',
    'guardar_paquete',
    'cargar_paquete',
    'GeneradorReportes',
    'ConfiguracionDNS',
    'SimuladorDNS',
]
