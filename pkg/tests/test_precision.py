import math

import numpy as np
import pytest

import corpus
from algebra import norma_espectral
from convergencia import analizar_estabilidad
from escenarios import generar_escenario
from formato_grafo import ParametrosGenerador
from mensajes import run
from modelo_grafo import cycle_free_depth
from oraculo import solve_ml
from precision import analizar_precision, kappa, layered_validation, reduced_constants, x_accuracy

SEMILLAS = range(1, 21)
CICLICOS = [e.nombre for e in corpus.CORPUS if e.ciclico]


@pytest.fixture(scope="module")
def reportes_anillo8():
    escenario = generar_escenario(corpus.buscar_entrada("anillo-8").documento(), 11)
    return analizar_precision(escenario.grafo)


def test_arbol_exacto(escenario_arbol):
    for reporte in analizar_precision(escenario_arbol.grafo):
        assert math.isinf(reporte.d)
        assert reporte.kappa == 0.0
        assert reporte.x_bound == 0.0
        assert reporte.q_bound_at_d == 0.0
        assert not reporte.capas.aplica
        assert reporte.x.cumple
        assert reporte.q.cumple_d


def test_indices_de_evaluacion(reportes_anillo8):
    for reporte in reportes_anillo8:
        assert reporte.d == 3
        assert reporte.q.k == 3
        assert reporte.x.k == 4


def test_cotas_de_informacion(reportes_anillo8):
    for reporte in reportes_anillo8:
        assert reporte.q.gap_min >= -1e-8
        assert reporte.q.gap_max <= reporte.q.cota * (1 + 1e-8) + 1e-8
        assert reporte.q.cumple_d
        assert reporte.q.cumple_inf
        assert 0.0 <= reporte.q.cota_inf_inferior < 1.0


def test_cota_del_error(reportes_anillo8):
    for reporte in reportes_anillo8:
        assert reporte.kappa > 0.0
        assert reporte.x.error is not None
        assert reporte.x.cumple


def test_tres_calculos_coinciden(reportes_anillo8):
    for reporte in reportes_anillo8:
        assert reporte.capas.aplica
        assert reporte.capas.acuerdo


def test_brecha_decrece_con_el_anillo():
    brechas = []
    for n in (6, 8, 10):
        reporte = analizar_precision(corpus.anillo(n))[0]
        brechas.append(reporte.q.gap_max)
    assert brechas[0] > brechas[1] > brechas[2] > 0.0


def test_sin_ruido_ni_estado_el_error_es_nulo():
    parametros = ParametrosGenerador(x_true="zeros", ruido=False)
    graph = generar_escenario(corpus.buscar_entrada("anillo-8").documento(), 1, parametros).grafo
    oraculo = solve_ml(graph)
    assert kappa(graph, 1, oraculo) == 0.0
    reporte = analizar_precision(graph, oraculo=oraculo)[0]
    assert reporte.x.error == pytest.approx(0.0, abs=1e-20)
    assert reporte.x.cumple


def test_constantes_reducidas_del_anillo(anillo8):
    alpha_t, rho_t = reduced_constants(anillo8, 1)
    assert alpha_t > 0.0
    assert 0.0 < rho_t < 1.0


def test_capas_requieren_iteraciones(escenario_anillo8):
    graph = escenario_anillo8.grafo
    traza = run(graph, 2, 1e-12)
    assert not layered_validation(graph, 1, traza, solve_ml(graph)).aplica
    traza = run(graph, 4, 1e-12, min_iters=4)
    capas = layered_validation(graph, 1, traza, solve_ml(graph))
    assert capas.aplica and capas.acuerdo
    np.testing.assert_allclose(capas.motor, capas.producto, atol=1e-9)


@pytest.mark.parametrize("nombre", CICLICOS)
def test_cota_del_error_en_todas_las_semillas(nombre):
    entrada = corpus.buscar_entrada(nombre)
    estabilidad = analizar_estabilidad(entrada.grafo)
    necesarias = max(int(cycle_free_depth(entrada.grafo, i)) for i in entrada.grafo.ids) + 2
    for semilla in SEMILLAS:
        graph = generar_escenario(entrada.documento(), semilla).grafo
        oraculo = solve_ml(graph)
        traza = run(graph, necesarias, 1e-12, min_iters=necesarias)
        for i in graph.ids:
            registro = x_accuracy(graph, i, traza, oraculo, estabilidad.eta, estabilidad)
            assert registro.cumple, (semilla, i, registro.error, registro.cota)


def test_limite_de_la_informacion_decae_geometricamente():
    profundidades, distancias, rhos = [], [], []
    for n in (6, 8, 10):
        graph = corpus.anillo(n)
        profundidades.append(int(cycle_free_depth(graph, 1)))
        rhos.append(reduced_constants(graph, 1)[1])
        Q_inf = analizar_estabilidad(graph).fp.Q_nodo[1]
        distancias.append(norma_espectral(Q_inf - solve_ml(graph).Q[1]))
    pendiente = np.polyfit(profundidades, np.log(distancias), 1)[0]
    assert profundidades == [2, 3, 4]
    assert pendiente <= math.log(max(rhos)) + 0.05


def test_cota_asintotica_en_el_regimen_de_pequenez():
    graph = generar_escenario(corpus.buscar_entrada("anillo-12-preciso").documento(), 11).grafo
    for reporte in analizar_precision(graph):
        assert reporte.d == 5
        assert reporte.x.asintotica_aplica
        assert reporte.x.cumple_inf
        assert reporte.x.error_inf <= reporte.x.cota_inf
        assert reporte.x.cumple


def test_anillo_12_queda_fuera_del_regimen_de_pequenez():
    graph = generar_escenario(corpus.buscar_entrada("anillo-12").documento(), 11).grafo
    registro = analizar_precision(graph)[0].x
    assert not registro.asintotica_aplica
    assert registro.cumple_inf is None
    assert registro.error_inf is not None and registro.cota_inf is not None
