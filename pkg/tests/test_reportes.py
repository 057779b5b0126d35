import json
import os

import numpy as np
import pandas as pd

from modulos.modelos import AjustePendiente, ErrorSolvencia, Region
from modulos.nucleo_polar import MallaRadial
from modulos.reportes import (
    GeneradorReportes,
    convertir_tipos_numpy,
    escribir_csv,
    escribir_error,
    escribir_json,
    leer_csv,
    metadatos_base,
)


def test_convertir_tipos_numpy():
    datos = {
        1: np.float64(0.5),
        'n': np.int32(3),
        'ok': np.bool_(True),
        'v': np.arange(3),
        'region': Region.II,
        'ajuste': AjustePendiente(2.0, 0.0, (0.1, 1.0), []),
    }
    convertido = convertir_tipos_numpy(datos)
    assert convertido['1'] == 0.5 and type(convertido['1']) is float
    assert convertido['n'] == 3 and convertido['ok'] is True
    assert convertido['v'] == [0, 1, 2]
    assert convertido['region'] == 'II'
    assert convertido['ajuste']['pendiente'] == 2.0
    json.dumps(convertido)


def test_metadatos_base():
    metadatos = metadatos_base(3, MallaRadial(10.0, 101), eps=[0.1])
    assert metadatos['orden'] == 3
    assert metadatos['malla'] == {'r_max': 10.0, 'n_puntos': 101}
    assert set(metadatos['tolerancias']) == {'TOL_SOLVENCIA', 'TOL_EXPANSION', 'TOL_COLA'}
    assert metadatos['eps'] == [0.1]


def test_csv_con_encabezado(tmp_path):
    tabla = pd.DataFrame({'k': [1, 2], 'valor': [0.1, 1.0 / 3.0]})
    ruta = escribir_csv(tabla, str(tmp_path / 'tabla.csv'), {'orden': 2, 'nota': 'x'})
    with open(ruta, encoding='utf-8') as archivo:
        lineas = archivo.read().splitlines()
    assert lineas[:2] == ['# nota: "x"', '# orden: 2']
    leida = leer_csv(ruta)
    assert leida['valor'][1] == 1.0 / 3.0


def test_json_ordenado(tmp_path):
    ruta = escribir_json({'b': np.float64(1.0), 'a': [1, 2]}, str(tmp_path / 'x.json'), {'orden': 2})
    with open(ruta, encoding='utf-8') as archivo:
        texto = archivo.read()
    assert texto.index('"a"') < texto.index('"b"') < texto.index('"metadatos"')
    assert json.loads(texto)['metadatos'] == {'orden': 2}


def test_error_json(tmp_path):
    directorio = str(tmp_path / 'salida')
    ruta = escribir_error(ErrorSolvencia("defecto en n = 1", {'defecto': 1e-3}), directorio)
    assert os.path.basename(ruta) == 'error.json'
    with open(ruta, encoding='utf-8') as archivo:
        datos = json.load(archivo)
    assert datos == {'tipo': 'ErrorSolvencia', 'mensaje': 'defecto en n = 1', 'detalles': {'defecto': 1e-3}}

    ruta = escribir_error(ValueError("otro"), directorio)
    with open(ruta, encoding='utf-8') as archivo:
        assert json.load(archivo)['tipo'] == 'ValueError'


def test_generador_registra_archivos(tmp_path):
    generador = GeneradorReportes(str(tmp_path / 'corrida'), {'version': 'prueba'})
    generador.csv(pd.DataFrame({'a': [1]}), 'a.csv', extra=1)
    generador.json({'b': 2}, 'b.json')
    resumen = generador.resumen()
    assert [os.path.basename(r) for r in resumen['archivos']] == ['a.csv', 'b.json']
    with open(generador.ruta('a.csv'), encoding='utf-8') as archivo:
        assert archivo.readline() == '# extra: 1\n'
