import json
import os

import pandas as pd
import pytest
from click.testing import CliRunner

import app
from config import obtener_config
from modulos.modelos import ErrorConfiguracion, ErrorSolvencia


@pytest.fixture
def runner():
    return CliRunner()


def _leer_error(directorio):
    with open(os.path.join(directorio, 'error.json'), encoding='utf-8') as archivo:
        return json.load(archivo)


class TestArchivoConfig:

    def test_lectura_y_tipos(self, tmp_path):
        ruta = tmp_path / 'dipolo.cfg'
        ruta.write_text("# corrida corta\norden = 3\nSIGMA1 = 0.25  # peso\n\nLOG_LEVEL = 'DEBUG'\n",
                        encoding='utf-8')
        valores = app.cargar_archivo_config(str(ruta))
        assert valores == {'ORDEN': 3, 'SIGMA1': 0.25, 'LOG_LEVEL': 'DEBUG'}

    @pytest.mark.parametrize('contenido', ['NO_EXISTE = 1\n', 'ORDEN 3\n', 'ORDEN = tres\n', '_ORDEN = 1\n'])
    def test_lineas_invalidas(self, tmp_path, contenido):
        ruta = tmp_path / 'malo.cfg'
        ruta.write_text(contenido, encoding='utf-8')
        with pytest.raises(ErrorConfiguracion):
            app.cargar_archivo_config(str(ruta))

    def test_archivo_inexistente(self, tmp_path):
        with pytest.raises(ErrorConfiguracion):
            app.cargar_archivo_config(str(tmp_path / 'no.cfg'))

    def test_banderas_sobre_archivo(self, tmp_path):
        ruta = tmp_path / 'dipolo.cfg'
        ruta.write_text("SEMILLA = 1\nN_PUNTOS = 2048\n", encoding='utf-8')
        cfg = app.preparar_configuracion(str(ruta), str(tmp_path), None, None, 9)
        assert cfg.SEMILLA == 9
        assert cfg.N_PUNTOS == 2048
        assert obtener_config().DIRECTORIO_SALIDA == str(tmp_path)

    def test_malla_invalida(self):
        with pytest.raises(ErrorConfiguracion):
            app.preparar_configuracion(grid_points=8)


class TestCodigosDeSalida:

    def test_orden_invalido(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['build', '--order', '1', '--out', salida])
        assert resultado.exit_code == 2
        assert _leer_error(salida)['tipo'] == 'ErrorConfiguracion'

    def test_eps_fuera_de_rango(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['residual-scan', '--order', '2', '--eps', '1.5', '--out', salida])
        assert resultado.exit_code == 2
        assert _leer_error(salida)['detalles'] == {'eps': [1.5]}

    def test_clave_desconocida_en_archivo(self, runner, tmp_path):
        ruta = tmp_path / 'malo.cfg'
        ruta.write_text("COLOR = azul\n", encoding='utf-8')
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['alpha', '--config', str(ruta), '--out', salida])
        assert resultado.exit_code == 2

    def test_fallo_numerico(self, runner, tmp_path, monkeypatch):
        def fallar(orden, malla):
            raise ErrorSolvencia("sistema singular", {'n': 1})

        monkeypatch.setattr(app, 'construir_paquete', fallar)
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['alpha', '--order', '2', '--out', salida])
        assert resultado.exit_code == 3
        assert _leer_error(salida) == {'tipo': 'ErrorSolvencia', 'mensaje': 'sistema singular',
                                       'detalles': {'n': 1}}


class TestComandos:

    def test_alpha(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['alpha', '--order', '2', '--out', salida])
        assert resultado.exit_code == 0, resultado.output
        assert 'α = 22.' in resultado.output
        with open(os.path.join(salida, 'alpha.json'), encoding='utf-8') as archivo:
            datos = json.load(archivo)
        assert datos['alpha'] == pytest.approx(22.24, abs=0.23)
        assert datos['metadatos']['orden'] == 2

    def test_build_determinista(self, runner, tmp_path):
        contenidos = []
        for nombre in ('a', 'b'):
            salida = str(tmp_path / nombre)
            resultado = runner.invoke(app.cli, ['build', '--order', '2', '--out', salida])
            assert resultado.exit_code == 0, resultado.output
            with open(os.path.join(salida, 'paquete_M2.json'), 'rb') as archivo:
                contenidos.append(archivo.read())
            tabla = pd.read_csv(os.path.join(salida, 'zeta_M2.csv'), comment='#')
            assert list(tabla.columns) == ['k', 'zeta_E', 'zeta_NS']
        assert contenidos[0] == contenidos[1]

    def test_streamlines(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['streamlines', '--order', '2', '--eps', '0.2', '--levels', '6',
                                            '--resolution', '40', '--out', salida])
        assert resultado.exit_code == 0, resultado.output
        for nombre in ('phi.csv', 'lineas_corriente.csv', 'lineas_corriente.svg'):
            assert os.path.exists(os.path.join(salida, nombre))

    @pytest.mark.lento
    def test_functional_check(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['functional-check', '--order', '2', '--out', salida])
        assert resultado.exit_code == 0, resultado.output
        tabla = pd.read_csv(os.path.join(salida, 'relacion_funcional.csv'), comment='#')
        assert {'rho', 'F0', 'F2'} <= set(tabla.columns)

    def test_alpha_orden_cinco(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['alpha', '--order', '5', '--out', salida])
        assert resultado.exit_code == 0, resultado.output
        tabla = pd.read_csv(os.path.join(salida, 'zeta.csv'), comment='#')
        assert list(tabla['k']) == [1, 2, 3, 4]
        zeta = dict(zip(tabla['k'], tabla['zeta_E']))
        assert max(abs(zeta[k]) for k in (1, 2, 3)) < 1e-7
        assert zeta[4] == pytest.approx(-139.73, abs=1.5)
        assert 'ζ_4^E = -1.39' in resultado.output or 'ζ_4^E = -1.40' in resultado.output

    @pytest.mark.lento
    def test_build_orden_por_defecto_determinista(self, runner, tmp_path):
        orden = obtener_config().ORDEN
        contenidos = []
        for nombre in ('a', 'b'):
            salida = str(tmp_path / nombre)
            resultado = runner.invoke(app.cli, ['build', '--out', salida])
            assert resultado.exit_code == 0, resultado.output
            with open(os.path.join(salida, f'paquete_M{orden}.json'), 'rb') as archivo:
                contenidos.append(archivo.read())
        assert contenidos[0] == contenidos[1]

    @pytest.mark.lento
    def test_energy_check_eps_por_defecto(self, runner, tmp_path):
        salida = str(tmp_path / 'salida')
        resultado = runner.invoke(app.cli, ['energy-check', '--samples', '2', '--out', salida])
        assert resultado.exit_code == 0, resultado.output
        tabla = pd.read_csv(os.path.join(salida, 'coercividad.csv'), comment='#')
        assert list(tabla['eps']) == list(app.EPS_ENERGIA)
        assert set(tabla['eps']) == {0.03, 0.05, 0.08}
