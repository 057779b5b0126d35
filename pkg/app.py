"""
Aplicación principal de línea de comandos del sistema de expansión del dipolo viscoso
Grupo de Mecánica de Fluidos Computacional
"""

import functools
import math
import sys
from typing import Any, Dict, Optional, Sequence

import click
import numpy as np
import pandas as pd

# Importar módulos locales
from config import Config, aplicar_sobrescrituras, obtener_config, restablecer_sobrescrituras
from modulos.campos2d import (
    Malla2D,
    ensamblar,
    exportar_campo_csv,
    exportar_polilineas_csv,
    exportar_svg,
    extraer_contornos,
    nivel_separatriz,
)
from modulos.diagnostico_energia import DiagnosticoEnergia
from modulos.dns import (
    ConfiguracionDNS,
    SimuladorDNS,
    estimar_efecto_imagenes,
    exportar_instantanea,
    exportar_trayectoria,
    medir,
)
from modulos.expansion import (
    alpha,
    barrido_residuo,
    chequeo_theta,
    construir_paquete,
    guardar_paquete,
    relacion_funcional,
    residuo_F2,
)
from modulos.modelos import (
    ErrorConfiguracion,
    ErrorDipolo,
    ParametrosDipolo,
    ParametrosPeso,
    configurar_logger,
)
from modulos.nucleo_polar import MallaRadial
from modulos.reportes import GeneradorReportes, escribir_error, metadatos_base

logger = configurar_logger('dipolo')

EPS_ENERGIA = (0.08, 0.05, 0.03)


# ----------------------------------------------------------------------
# Configuración
# ----------------------------------------------------------------------

def _convertir_valor(clave: str, texto: str) -> Any:
    defecto = getattr(Config, clave)
    texto = texto.strip().strip('"').strip("'")
    if isinstance(defecto, bool):
        if texto.lower() in ('1', 'true', 'si', 'sí', 'yes'):
            return True
        if texto.lower() in ('0', 'false', 'no'):
            return False
        raise ValueError(texto)
    if isinstance(defecto, int):
        return int(texto)
    if isinstance(defecto, float):
        return float(texto)
    return texto


def cargar_archivo_config(ruta: str) -> Dict[str, Any]:
    """
    Lee un archivo de texto plano `clave = valor`

    Las líneas vacías y las que empiezan por `#` se ignoran. Cada valor se
    convierte al tipo del valor por defecto de la clave.

    Raises:
        ErrorConfiguracion: clave desconocida, línea sin `=` o valor no convertible
    """
    valores = {}
    try:
        with open(ruta, 'r', encoding='utf-8') as archivo:
            lineas = archivo.readlines()
    except OSError as e:
        raise ErrorConfiguracion("No se pudo leer el archivo de configuración",
                                 {'ruta': ruta, 'error': str(e)})

    for numero, linea in enumerate(lineas, start=1):
        linea = linea.split('#', 1)[0].strip()
        if not linea:
            continue
        if '=' not in linea:
            raise ErrorConfiguracion("Línea sin '='", {'ruta': ruta, 'linea': numero})
        clave, texto = (parte.strip() for parte in linea.split('=', 1))
        clave = clave.upper()
        if not clave or clave.startswith('_') or not hasattr(Config, clave):
            raise ErrorConfiguracion("Clave de configuración desconocida",
                                     {'clave': clave, 'linea': numero})
        try:
            valores[clave] = _convertir_valor(clave, texto)
        except ValueError:
            raise ErrorConfiguracion("Valor de configuración inválido",
                                     {'clave': clave, 'valor': texto, 'linea': numero})
    logger.debug(f"Configuración leída de {ruta}: {sorted(valores)}")
    return valores


def preparar_configuracion(config: Optional[str] = None, out: Optional[str] = None,
                           grid_points: Optional[int] = None, r_max: Optional[float] = None,
                           seed: Optional[int] = None):
    """Archivo primero, banderas después; devuelve la clase de configuración efectiva"""
    restablecer_sobrescrituras()
    if config:
        aplicar_sobrescrituras(cargar_archivo_config(config))
    banderas = {'N_PUNTOS': grid_points, 'R_MAX': r_max, 'SEMILLA': seed, 'DIRECTORIO_SALIDA': out}
    aplicar_sobrescrituras({clave: valor for clave, valor in banderas.items() if valor is not None})
    cfg = obtener_config()
    if cfg.N_PUNTOS < 16 or cfg.R_MAX <= 0:
        raise ErrorConfiguracion("Malla radial inválida", {'n_puntos': cfg.N_PUNTOS, 'r_max': cfg.R_MAX})
    return cfg


# ----------------------------------------------------------------------
# Opciones comunes y manejo de errores
# ----------------------------------------------------------------------

def opciones_comunes(funcion):
    """--config, --out, --grid-points, --r-max y --seed"""
    opciones = [
        click.option('--config', 'config', type=click.Path(dir_okay=False), default=None,
                     help='Archivo clave = valor con valores por defecto'),
        click.option('--out', type=click.Path(file_okay=False), default=None,
                     help='Directorio de salida'),
        click.option('--grid-points', type=int, default=None, help='Puntos de la malla radial'),
        click.option('--r-max', type=float, default=None, help='Radio máximo de la malla radial'),
        click.option('--seed', type=int, default=None, help='Semilla de las muestras aleatorias'),
    ]
    for opcion in reversed(opciones):
        funcion = opcion(funcion)
    return funcion


def manejar_errores(funcion):
    """Traduce los errores del dominio a códigos de salida y escribe error.json"""
    @functools.wraps(funcion)
    def envoltura(*args, **kwargs):
        try:
            return funcion(*args, **kwargs)
        except ErrorDipolo as e:
            directorio = kwargs.get('out') or obtener_config().DIRECTORIO_SALIDA
            logger.error(f"Error {type(e).__name__}: {str(e)}")
            escribir_error(e, directorio)
            sys.exit(e.codigo_salida)
        except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as e:
            directorio = kwargs.get('out') or obtener_config().DIRECTORIO_SALIDA
            logger.error(f"Error numérico: {str(e)}")
            escribir_error(e, directorio)
            sys.exit(3)
    return envoltura


def _orden(orden: Optional[int], cfg) -> int:
    return cfg.ORDEN if orden is None else orden


def _generador(cfg, orden: Optional[int], malla: Optional[MallaRadial], **extra) -> GeneradorReportes:
    return GeneradorReportes(cfg.DIRECTORIO_SALIDA, metadatos_base(orden, malla, **extra))


# ----------------------------------------------------------------------
# Comandos
# ----------------------------------------------------------------------

@click.group()
def cli():
    """Expansión asintótica del dipolo viscoso y sus verificaciones"""


@cli.command()
@click.option('--order', 'orden', type=int, default=None, help='Orden M de la expansión')
@opciones_comunes
@manejar_errores
def build(orden, config, out, grid_points, r_max, seed):
    """Construye y serializa el paquete de expansión"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    orden = _orden(orden, cfg)
    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    tablas = relacion_funcional(paquete)
    generador = _generador(cfg, orden, malla)
    ruta = guardar_paquete(paquete, generador.ruta(f'paquete_M{orden}.json'),
                           tablas=tablas, metadatos=generador.metadatos)
    generador.csv(_tabla_zeta(paquete), f'zeta_M{orden}.csv')
    click.echo(f"✅ Paquete M = {orden} guardado en {ruta}")


def _tabla_zeta(paquete) -> pd.DataFrame:
    filas = [{'k': k, 'zeta_E': paquete.zeta_E.get(k, 0.0), 'zeta_NS': paquete.zeta_NS.get(k, 0.0)}
             for k in range(1, paquete.orden)]
    return pd.DataFrame(filas, columns=['k', 'zeta_E', 'zeta_NS'])


@cli.command(name='alpha')
@click.option('--order', 'orden', type=int, default=None, help='Orden M de la expansión')
@opciones_comunes
@manejar_errores
def alpha_cmd(orden, config, out, grid_points, r_max, seed):
    """Imprime α y la tabla de coeficientes ζ_k"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    orden = _orden(orden, cfg)
    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    valor = alpha(paquete)
    tabla = _tabla_zeta(paquete)

    click.echo(f"α = {valor:.6f}")
    click.echo(f"2πα = {2.0 * math.pi * valor:.6f}")
    for fila in tabla.itertuples(index=False):
        click.echo(f"ζ_{fila.k}^E = {fila.zeta_E:+.10e}    ζ_{fila.k}^NS = {fila.zeta_NS:+.10e}")

    generador = _generador(cfg, orden, malla)
    generador.csv(tabla, 'zeta.csv')
    generador.json({'alpha': valor, 'dos_pi_alpha': 2.0 * math.pi * valor,
                    'zeta': tabla.to_dict(orient='records')}, 'alpha.json')


@cli.command(name='residual-scan')
@click.option('--order', 'orden', type=int, default=None, help='Orden M de la expansión')
@click.option('--eps', 'eps_lista', type=float, multiple=True, help='Valores de ε (repetible)')
@click.option('--delta', 'delta_lista', type=float, multiple=True, help='Valores de δ (repetible)')
@click.option('--eps-delta', type=float, default=0.05, show_default=True,
              help='ε fijo del barrido en δ')
@opciones_comunes
@manejar_errores
def residual_scan(orden, eps_lista, delta_lista, eps_delta, config, out, grid_points, r_max, seed):
    """Normas del residuo directo y pendientes ajustadas"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    orden = _orden(orden, cfg)
    eps_lista = list(eps_lista) or [0.02, 0.04, 0.08, 0.16]
    delta_lista = list(delta_lista) or [0.0]
    _validar_eps(eps_lista)
    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    reporte = barrido_residuo(paquete, eps_lista, delta_lista, eps_delta)

    tabla = pd.DataFrame(reporte.normas)
    for nombre in ('eps', 'delta'):
        ajuste = reporte.ajustes.get(nombre)
        tabla[f'pendiente_{nombre}'] = ajuste.pendiente if ajuste is not None else float('nan')
    generador = _generador(cfg, orden, malla, eps=eps_lista, delta=delta_lista)
    generador.csv(tabla, 'residuo.csv')
    generador.json({'ajustes': reporte.ajustes,
                    'defectos_consistencia': reporte.defectos_consistencia}, 'residuo.json')
    for nombre, ajuste in reporte.ajustes.items():
        click.echo(f"Pendiente en {nombre}: {ajuste.pendiente:.4f}")


@cli.command()
@click.option('--order', 'orden', type=int, default=None, help='Orden M de la expansión')
@click.option('--eps', type=float, default=0.2, show_default=True, help='Razón de aspecto ε')
@click.option('--levels', 'niveles', type=int, default=40, show_default=True,
              help='Número de niveles equiespaciados')
@click.option('--resolution', 'resolucion', type=int, default=240, show_default=True,
              help='Puntos por eje de la malla cartesiana')
@opciones_comunes
@manejar_errores
def streamlines(orden, eps, niveles, resolucion, config, out, grid_points, r_max, seed):
    """Líneas de corriente de Φ_app^E en el marco comóvil (CSV y SVG)"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    orden = _orden(orden, cfg)
    _validar_eps([eps])
    if niveles < 1:
        raise ErrorConfiguracion("Se necesita al menos un nivel", {'niveles': niveles})
    resolucion += resolucion % 2
    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    malla2d = Malla2D(-1.0 / eps - 4.0, 4.0, -5.0, 5.0, resolucion, resolucion)
    muestras = ensamblar(paquete, eps, 0.0, malla2d, 'phi')
    separatriz = nivel_separatriz(paquete, eps)
    valores = sorted(set(np.linspace(np.min(muestras), np.max(muestras), niveles + 2)[1:-1].tolist())
                     | {separatriz})
    polilineas = extraer_contornos(muestras, valores, malla2d)

    generador = _generador(cfg, orden, malla, eps=eps, malla2d=malla2d.a_dict(), separatriz=separatriz)
    exportar_campo_csv(muestras, malla2d, generador.ruta('phi.csv'), generador.metadatos)
    exportar_polilineas_csv(polilineas, generador.ruta('lineas_corriente.csv'), generador.metadatos)
    ruta = exportar_svg(polilineas, generador, 'lineas_corriente.svg', eps, separatriz)
    click.echo(f"✅ {len(polilineas)} polilíneas; separatriz en {separatriz:.6f}; figura en {ruta}")


@cli.command(name='energy-check')
@click.option('--order', 'orden', type=int, default=2, show_default=True,
              help='Orden M del paquete que define el peso')
@click.option('--eps', 'eps_lista', type=float, multiple=True, help='Valores de ε (repetible)')
@click.option('--samples', 'muestras', type=int, default=100, show_default=True,
              help='Perturbaciones aleatorias por ε')
@opciones_comunes
@manejar_errores
def energy_check(orden, eps_lista, muestras, config, out, grid_points, r_max, seed):
    """Constantes de coercividad medidas de E_ε y D_ε"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    eps_lista = list(eps_lista) or list(EPS_ENERGIA)
    _validar_eps(eps_lista)
    if muestras < 1:
        raise ErrorConfiguracion("Se necesita al menos una muestra", {'muestras': muestras})
    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    diagnostico = DiagnosticoEnergia(paquete, ParametrosPeso(cfg.SIGMA1, cfg.SIGMA2))
    reporte = diagnostico.reporte_coercividad(eps_lista, muestras, cfg.SEMILLA)

    tabla = pd.DataFrame([{'eps': eps, 'kappa1': reporte.kappa1[eps], 'kappa_d': reporte.kappa_d[eps]}
                          for eps in eps_lista])
    generador = _generador(cfg, orden, malla, semilla=cfg.SEMILLA, muestras=muestras)
    generador.csv(tabla, 'coercividad.csv')
    generador.json(reporte.a_dict(), 'coercividad.json')
    for fila in tabla.itertuples(index=False):
        click.echo(f"ε = {fila.eps:g}: κ₁ = {fila.kappa1:.4f}, κ_D = {fila.kappa_d:.4f}")


@cli.command(name='dns-run')
@click.option('--order', 'orden', type=int, default=None, help='Orden M del dipolo inicial')
@click.option('--eps', 'eps0', type=float, default=None, help='ε₀ inicial')
@click.option('--delta', type=float, default=None, help='δ = ν/Γ (sustituye DNS_RE)')
@click.option('--dns-n', type=int, default=None, help='Puntos por lado')
@click.option('--box', 'lado', type=float, default=None, help='Lado de la caja periódica')
@click.option('--sigma', type=float, default=None, help='Exponente del horizonte')
@click.option('--t-final', type=float, default=None, help='Tope de la duración desde t₀')
@click.option('--diffusion-only', 'solo_difusion', is_flag=True, help='Apaga la advección')
@click.option('--snapshot', 'instantanea', is_flag=True, help='Escribe el campo final')
@opciones_comunes
@manejar_errores
def dns_run(orden, eps0, delta, dns_n, lado, sigma, t_final, solo_difusion, instantanea,
            config, out, grid_points, r_max, seed):
    """Corrida pseudo-espectral y medición de la ley de velocidad"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    orden = _orden(orden, cfg)
    cambios = {'eps0': eps0, 'n': dns_n, 'L': lado, 'sigma': sigma, 't_final': t_final}
    cambios = {clave: valor for clave, valor in cambios.items() if valor is not None}
    if delta is not None:
        if delta <= 0:
            raise ErrorConfiguracion("δ debe ser positivo", {'delta': delta})
        cambios['parametros'] = ParametrosDipolo.desde_reynolds(1.0 / delta)
    configuracion = ConfiguracionDNS.desde_config(solo_difusion=solo_difusion, **cambios)

    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    simulador = SimuladorDNS(configuracion, paquete)
    trayectoria = simulador.ejecutar()
    efecto = estimar_efecto_imagenes(configuracion)['diferencia_relativa']
    reporte = medir(trayectoria, paquete, configuracion.parametros, correccion_imagenes=efecto)

    generador = _generador(cfg, orden, malla, dns=configuracion.a_dict())
    exportar_trayectoria(reporte, generador.ruta('trayectoria.csv'), generador.metadatos)
    generador.json(reporte, 'validacion_dns.json')
    if instantanea:
        exportar_instantanea(simulador.estado_final, generador.ruta('instantanea.csv'), generador.metadatos)
    click.echo(f"α = {reporte.alpha:.4f}; déficit/(2παε⁴) medio = {reporte.razon_deficit['media']:.4f}; "
               f"‖ω − ω_app‖₁/(Γε²) máx = {reporte.razon_l1_max:.3e}")


@cli.command(name='functional-check')
@click.option('--order', 'orden', type=int, default=None, help='Orden M de la expansión')
@click.option('--eps', 'eps_lista', type=float, multiple=True, help='Valores de ε (repetible)')
@opciones_comunes
@manejar_errores
def functional_check(orden, eps_lista, config, out, grid_points, r_max, seed):
    """Tablas F_k y escalamiento de ∇(Φ_app^E + F(Ω_app^E))"""
    cfg = preparar_configuracion(config, out, grid_points, r_max, seed)
    orden = _orden(orden, cfg)
    eps_lista = list(eps_lista) or [0.1, 0.05, 0.025]
    _validar_eps(eps_lista)
    malla = MallaRadial.por_defecto()
    paquete = construir_paquete(orden, malla)
    tablas = relacion_funcional(paquete)
    theta = chequeo_theta(paquete, eps_lista, tablas)

    tabla = pd.DataFrame({'rho': tablas.rho, **{f'F{k}': v for k, v in sorted(tablas.F.items())}})
    generador = _generador(cfg, orden, malla, eps=eps_lista)
    generador.csv(tabla, 'relacion_funcional.csv')
    generador.json({'theta': theta, 'no_radial': tablas.no_radial,
                    'residuo_F2': residuo_F2(paquete)}, 'relacion_funcional.json')
    if theta.ajuste is not None:
        click.echo(f"Pendiente de θ en ε: {theta.ajuste.pendiente:.4f} (N = {theta.exponente_crecimiento})")


def _validar_eps(eps_lista: Sequence[float]):
    malos = [eps for eps in eps_lista if not 0.0 < eps < 1.0]
    if malos:
        raise ErrorConfiguracion("ε debe estar en (0, 1)", {'eps': malos})


if __name__ == '__main__':
    cli()
