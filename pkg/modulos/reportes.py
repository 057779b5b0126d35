"""
Módulo de generación de reportes del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional

Escribe las salidas numéricas (CSV, JSON y SVG) con un encabezado de
metadatos común: versión, orden, malla y tolerancias.
"""

import dataclasses
import json
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from config import obtener_config  # noqa: E402
from .modelos import ErrorDipolo, configurar_logger  # noqa: E402

logger = configurar_logger(__name__)


def convertir_tipos_numpy(obj):
    """
    Convierte recursivamente tipos de numpy a tipos nativos de Python

    Args:
        obj: Objeto que puede contener tipos de numpy

    Returns:
        Objeto con tipos nativos de Python
    """
    if isinstance(obj, dict):
        return {str(key): convertir_tipos_numpy(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convertir_tipos_numpy(item) for item in obj]
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif hasattr(obj, 'a_dict'):
        return convertir_tipos_numpy(obj.a_dict())
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return convertir_tipos_numpy(dataclasses.asdict(obj))
    elif hasattr(obj, 'value') and hasattr(obj, 'name'):
        return obj.value
    return obj


def metadatos_base(orden: Optional[int] = None, malla=None, **extra) -> Dict[str, Any]:
    """Metadatos comunes a todas las salidas"""
    cfg = obtener_config()
    metadatos = {
        'version': cfg.VERSION,
        'orden': orden,
        'malla': malla.a_dict() if malla is not None else {'r_max': cfg.R_MAX, 'n_puntos': cfg.N_PUNTOS},
        'n_theta': cfg.N_THETA,
        'tolerancias': {
            'TOL_SOLVENCIA': cfg.TOL_SOLVENCIA,
            'TOL_EXPANSION': cfg.TOL_EXPANSION,
            'TOL_COLA': cfg.TOL_COLA,
        },
    }
    metadatos.update(extra)
    return convertir_tipos_numpy(metadatos)


def _lineas_encabezado(metadatos: Dict[str, Any]) -> List[str]:
    return [f"# {clave}: {json.dumps(valor, sort_keys=True)}"
            for clave, valor in sorted(metadatos.items())]


def escribir_csv(tabla: pd.DataFrame, ruta: str, metadatos: Optional[Dict[str, Any]] = None) -> str:
    """CSV con líneas `#` de metadatos seguidas de la tabla"""
    metadatos = metadatos_base() if metadatos is None else metadatos
    with open(ruta, 'w', encoding='utf-8', newline='') as archivo:
        for linea in _lineas_encabezado(metadatos):
            archivo.write(linea + '\n')
        tabla.to_csv(archivo, index=False, float_format='%.17g')
    logger.debug(f"CSV escrito: {ruta}")
    return ruta


def leer_csv(ruta: str) -> pd.DataFrame:
    return pd.read_csv(ruta, comment='#')


def escribir_json(datos: Dict[str, Any], ruta: str, metadatos: Optional[Dict[str, Any]] = None) -> str:
    """JSON con claves ordenadas y los metadatos bajo "metadatos" """
    documento = convertir_tipos_numpy(datos)
    if metadatos is not None:
        documento['metadatos'] = convertir_tipos_numpy(metadatos)
    with open(ruta, 'w', encoding='utf-8') as archivo:
        json.dump(documento, archivo, sort_keys=True, indent=1)
    logger.debug(f"JSON escrito: {ruta}")
    return ruta


def escribir_error(error: Exception, directorio: str) -> str:
    """error.json con {"tipo", "mensaje", "detalles"}"""
    os.makedirs(directorio, exist_ok=True)
    if isinstance(error, ErrorDipolo):
        datos = error.a_dict()
    else:
        datos = {'tipo': type(error).__name__, 'mensaje': str(error), 'detalles': {}}
    return escribir_json(datos, os.path.join(directorio, 'error.json'))


class GeneradorReportes:
    """
    Escritor de salidas de una corrida en un directorio

    Args:
        directorio: Directorio de salida (se crea si no existe)
        metadatos: Metadatos comunes de la corrida
    """

    def __init__(self, directorio: Optional[str] = None, metadatos: Optional[Dict[str, Any]] = None):
        self.directorio = directorio or obtener_config().DIRECTORIO_SALIDA
        os.makedirs(self.directorio, exist_ok=True)
        self.metadatos = metadatos if metadatos is not None else metadatos_base()
        self.fecha_reporte = datetime.now()
        self.archivos: List[str] = []
        self.logger = self._configurar_logger()
        self.configurar_estilos()

    def _configurar_logger(self):
        return configurar_logger(__name__)

    def configurar_estilos(self):
        """Estilo de las figuras de contornos"""
        self.colores = {
            'negativo': '#003366',
            'positivo': '#CC3300',
            'separatriz': '#00CC66',
            'texto': '#333333',
        }
        plt.rcParams['font.size'] = 10
        plt.rcParams['axes.titlesize'] = 12
        plt.rcParams['svg.hashsalt'] = 'dipolo-viscoso'

    def ruta(self, nombre: str) -> str:
        return os.path.join(self.directorio, nombre)

    def _registrar(self, ruta: str) -> str:
        self.archivos.append(ruta)
        self.logger.info(f"Archivo generado: {ruta}")
        return ruta

    def csv(self, tabla: pd.DataFrame, nombre: str, **extra) -> str:
        return self._registrar(escribir_csv(tabla, self.ruta(nombre), {**self.metadatos, **extra}))

    def json(self, datos: Dict[str, Any], nombre: str, **extra) -> str:
        return self._registrar(escribir_json(datos, self.ruta(nombre), {**self.metadatos, **extra}))

    def svg_contornos(self, polilineas, nombre: str, titulo: str = '',
                      marcadores: Optional[List[tuple]] = None,
                      resaltar: Optional[float] = None) -> str:
        """
        Figura SVG de las polilíneas de contorno

        Args:
            polilineas: Lista de Polilinea
            nombre: Nombre del archivo
            titulo: Título de la figura
            marcadores: Puntos (x, y) a señalar, p. ej. centros de vórtice
            resaltar: Nivel dibujado con el color de la separatriz
        """
        fig, ax = plt.subplots(figsize=(8, 6))
        for polilinea in polilineas:
            if resaltar is not None and np.isclose(polilinea.nivel, resaltar):
                color, ancho = self.colores['separatriz'], 1.6
            else:
                color = self.colores['positivo'] if polilinea.nivel > 0 else self.colores['negativo']
                ancho = 0.8
            ax.plot(polilinea.puntos[:, 0], polilinea.puntos[:, 1], color=color, linewidth=ancho)
        for x, y in marcadores or []:
            ax.plot([x], [y], marker='+', color=self.colores['texto'])
        ax.set_aspect('equal')
        ax.set_xlabel('ξ₁')
        ax.set_ylabel('ξ₂')
        if titulo:
            ax.set_title(titulo, fontweight='bold')
        ax.grid(True, alpha=0.3)
        ruta = self.ruta(nombre)
        descripcion = json.dumps(self.metadatos, sort_keys=True)
        fig.savefig(ruta, format='svg', bbox_inches='tight',
                    metadata={'Title': titulo or nombre, 'Description': descripcion, 'Date': None})
        plt.close(fig)
        return self._registrar(ruta)

    def resumen(self) -> Dict[str, Any]:
        return {
            'directorio': self.directorio,
            'archivos': list(self.archivos),
            'fecha': self.fecha_reporte.isoformat(timespec='seconds'),
        }
