import numpy as np
import pytest

import corpus
from algebra import precede_psd
from exceptions import ConfiguracionError
from mensajes import TerminationReason, init_messages, recursion_informacion, run, step
from modelo_grafo import EdgeSpec, MeasurementGraph, NodeSpec, check_assumption1, compute_omega
from oraculo import solve_ml

HOLGURA = 1e-8


def test_mensaje_inicial_escalar():
    graph = MeasurementGraph.construir(
        [corpus.nodo_escalar(1), corpus.nodo_escalar(2)], [corpus.arista_escalar(1, 2, z=0.7)]
    )
    mensajes = init_messages(graph)
    assert mensajes.iteracion == 0
    assert not mensajes.var_a_factor
    for ranura in ((1, 2), (2, 1)):
        np.testing.assert_allclose(mensajes.factor_a_var[ranura].alpha, [0.7])
        np.testing.assert_allclose(mensajes.factor_a_var[ranura].Q, [[1.0]])


def test_mensaje_inicial_vectorial():
    nodos = [NodeSpec(1, 2, np.eye(2), np.eye(2)), NodeSpec(2, 1, [[1.0]], [[1.0]])]
    arista = EdgeSpec(1, 2, [[1.0, 0.0]], [[0.0]], [[2.0]], [4.0])
    mensaje = init_messages(MeasurementGraph.construir(nodos, [arista])).factor_a_var[(2, 1)]
    np.testing.assert_allclose(mensaje.alpha, [2.0, 0.0])
    np.testing.assert_allclose(mensaje.Q, [[0.5, 0.0], [0.0, 0.0]])


def test_nodo_aislado_devuelve_su_medicion():
    graph = MeasurementGraph.construir([corpus.nodo_escalar(1, z=3.0)])
    traza = run(graph, 5, 1e-9)
    assert traza.razon is TerminationReason.CONVERGIDO
    creencia = traza.final.creencias[1]
    np.testing.assert_allclose(creencia.x_hat, [3.0])
    np.testing.assert_allclose(creencia.Sigma, [[5.0]])


def test_un_paso_entrega_un_estado(anillo8):
    traza = run(anillo8, 1, 1e-9)
    assert traza.iteraciones == 1
    assert traza.razon is TerminationReason.TOPE_ITERACIONES
    assert traza.final.iteracion == 1


@pytest.mark.parametrize("max_iters, tol", [(0, 1e-9), (5, 0.0)])
def test_configuracion_invalida(anillo8, max_iters, tol):
    with pytest.raises(ConfiguracionError):
        run(anillo8, max_iters, tol)


def test_arbol_exacto_en_diametro_mas_uno(escenario_arbol):
    graph = escenario_arbol.grafo
    k = graph.diametro() + 1
    traza = run(graph, k, 1e-12, min_iters=k)
    oraculo = solve_ml(graph)
    estado = traza.en(k)
    for i in graph.ids:
        np.testing.assert_allclose(estado.x_hat(i), oraculo.x[i], atol=1e-9)
        np.testing.assert_allclose(estado.creencias[i].Sigma, oraculo.Sigma[i], atol=1e-9)


def test_medias_exactas_al_converger_en_ciclos(escenario_anillo8):
    graph = escenario_anillo8.grafo
    traza = run(graph, 500, 1e-12)
    assert traza.razon is TerminationReason.CONVERGIDO
    oraculo = solve_ml(graph)
    for i in graph.ids:
        np.testing.assert_allclose(traza.final.x_hat(i), oraculo.x[i], atol=1e-8)
        assert precede_psd(oraculo.Q[i], traza.final.creencias[i].Q, HOLGURA)


def test_hilos_no_cambian_el_resultado(escenario_anillo8):
    graph = escenario_anillo8.grafo
    uno = run(graph, 12, 1e-12, hilos=1)
    cuatro = run(graph, 12, 1e-12, hilos=4)
    assert uno.iteraciones == cuatro.iteraciones
    for a, b in zip(uno.estados, cuatro.estados):
        for i in graph.ids:
            assert np.array_equal(a.x_hat(i), b.x_hat(i))
            assert np.array_equal(a.creencias[i].Q, b.creencias[i].Q)


@pytest.mark.parametrize("nombre", corpus.nombres())
def test_monotonia_de_la_informacion(nombre):
    graph = corpus.buscar_entrada(nombre).grafo
    if not check_assumption1(graph).cumple:
        pytest.skip("sin Supuesto 1")
    traza = run(graph, 51, 1e-12, min_iters=51, guardar_mensajes=True)
    assert len(traza.mensajes) == 52
    omegas = {r: compute_omega(graph, *r) for r in graph.ranuras}
    for k in range(1, 51):
        actual, siguiente = traza.mensajes[k], traza.mensajes[k + 1]
        for r in graph.ranuras:
            assert precede_psd(siguiente.var_a_factor[r].Q, actual.var_a_factor[r].Q, HOLGURA)
            assert precede_psd(actual.derivados[r].R, siguiente.derivados[r].R, HOLGURA)
            assert precede_psd(actual.var_a_factor[r].Q, omegas[r], HOLGURA)


def test_recursion_sin_mediciones_coincide_con_step(escenario_anillo8):
    graph = escenario_anillo8.grafo
    mensajes = init_messages(graph)
    Q_entrantes = {r: m.Q for r, m in mensajes.factor_a_var.items()}
    for k in range(1, 6):
        Q_var, Q_factor, R_factor, Q_nodo = recursion_informacion(graph, Q_entrantes, k)
        mensajes, estado = step(graph, mensajes)
        for r in graph.ranuras:
            np.testing.assert_allclose(Q_var[r], mensajes.var_a_factor[r].Q, atol=1e-12)
            np.testing.assert_allclose(R_factor[r], mensajes.derivados[r].R, atol=1e-12)
        for i in graph.ids:
            np.testing.assert_allclose(Q_nodo[i], estado.creencias[i].Q, atol=1e-12)
        Q_entrantes = Q_factor


def test_divergencia_detectada():
    graph = corpus.buscar_entrada("anillo-8").grafo
    nodos = [corpus.nodo_escalar(i, z=1e14) for i in graph.ids]
    grande = MeasurementGraph.construir(nodos, graph.aristas)
    traza = run(grande, 10, 1e-12)
    assert traza.razon is TerminationReason.DIVERGENCIA
    assert traza.iteraciones == 1
