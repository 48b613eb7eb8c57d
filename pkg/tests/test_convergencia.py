import math

import numpy as np
import pytest

import corpus
from algebra import norma_espectral, precede_psd, radio_espectral
from convergencia import (
    CUMPLE,
    ESTABLE,
    NO_APLICA,
    NO_CUMPLE,
    analizar_estabilidad,
    assemble_A_infinity,
    cota_gamma,
    delta_congruente,
    estimacion_limite,
    estructura_A,
    fixed_point,
    stability_verdict,
)
from exceptions import SupuestoNoCumplidoError
from mensajes import run
from modelo_grafo import MeasurementGraph, compute_omega
from oraculo import solve_ml

# Punto fijo escalar del anillo: q = 0.2 + q/(q+1).
Q_ANILLO = 0.1 + math.sqrt(0.21)
# Con R propia = 0.1: q = 10 + q/(q+1).
Q_ANILLO_PRECISO = 5 + math.sqrt(35)
HOLGURA = 1e-8
ITERACIONES_ENVOLVENTE = 30
CICLICOS = [e.nombre for e in corpus.CORPUS if e.ciclico]


def test_punto_fijo_de_un_nodo():
    fp = fixed_point(MeasurementGraph.construir([corpus.nodo_escalar(1)]))
    assert fp.iteraciones == 1
    np.testing.assert_allclose(fp.Q_nodo[1], [[0.2]])


def test_punto_fijo_del_anillo(anillo8):
    fp = fixed_point(anillo8)
    for ranura in anillo8.ranuras:
        assert fp.Q_var[ranura][0, 0] == pytest.approx(Q_ANILLO, rel=1e-9)
        assert fp.R_factor[ranura][0, 0] == pytest.approx(1 + 1 / Q_ANILLO, rel=1e-9)


def test_punto_fijo_exige_supuesto():
    nodos = [corpus.nodo_escalar(i) for i in (1, 2, 3)]
    aristas = [corpus.arista_escalar(1, 2, R=0.01), corpus.arista_escalar(2, 3), corpus.arista_escalar(3, 1)]
    graph = MeasurementGraph.construir(nodos, aristas)
    with pytest.raises(SupuestoNoCumplidoError):
        fixed_point(graph)


def test_punto_fijo_exige_omega_definida():
    graph = MeasurementGraph.construir(
        [corpus.nodo_escalar(1), corpus.nodo_escalar(2, R=None)], [corpus.arista_escalar(1, 2)]
    )
    with pytest.raises(SupuestoNoCumplidoError):
        fixed_point(graph)


def test_constantes_del_anillo(anillo8):
    reporte = analizar_estabilidad(anillo8)
    assert reporte.eta == pytest.approx(1 / 1.2)
    assert reporte.rho == pytest.approx(1 / (1 + Q_ANILLO), rel=1e-7)
    assert reporte.alpha == pytest.approx(1.2 / Q_ANILLO - 1, rel=1e-7)
    assert reporte.veredicto.radio == pytest.approx(1 / (1 + Q_ANILLO), rel=1e-7)
    assert reporte.veredicto.estado == ESTABLE


def test_estructura_de_A(anillo8):
    fp = fixed_point(anillo8)
    A, indice = assemble_A_infinity(anillo8, fp)
    assert A.shape == (16, 16)
    diagonal_nula, gram_ok = estructura_A(A, indice, analizar_estabilidad(anillo8).rho)
    assert diagonal_nula and gram_ok
    for bloque in indice.bloques.values():
        assert np.count_nonzero(A[bloque, :]) == 1


def test_anillo_simple_no_tiene_sigmas(anillo8):
    condicion = analizar_estabilidad(anillo8).condicion
    assert condicion.sigmas == {}
    assert condicion.estado == CUMPLE
    assert condicion.rho_bar == pytest.approx(1 / (1 + Q_ANILLO), rel=1e-7)


def test_rueda_falla_la_condicion_pero_es_estable():
    reporte = analizar_estabilidad(corpus.rueda(7))
    assert reporte.condicion.estado == NO_CUMPLE
    assert reporte.condicion.sigmas[1] > 1.0
    assert reporte.veredicto.estado == ESTABLE


def test_completo_cumple_la_condicion():
    reporte = analizar_estabilidad(corpus.completo(5))
    assert reporte.condicion.estado == CUMPLE
    assert reporte.veredicto.estable


def test_colgantes_se_podan():
    reporte = analizar_estabilidad(corpus.anillo_con_colgantes())
    assert set(reporte.indice_bar.ranuras) == {(1, 2), (2, 1), (2, 3), (3, 2), (3, 4), (4, 3), (1, 4), (4, 1)}
    assert reporte.A_bar.shape == (8, 8)


def test_arbol_no_aplica(arbol):
    reporte = analizar_estabilidad(arbol)
    assert reporte.aciclico
    assert reporte.A_bar.size == 0
    assert reporte.veredicto.estado == ESTABLE
    assert reporte.condicion.estado == NO_APLICA


def test_B_semejante_a_A():
    reporte = analizar_estabilidad(corpus.cuatro_nodos())
    assert reporte.beta == pytest.approx(radio_espectral(reporte.A_inf), rel=1e-8)


def test_veredicto_por_margen():
    assert stability_verdict(np.array([[0.5]])).estado == ESTABLE
    assert stability_verdict(np.array([[1.0]])).estado == "marginal"
    assert stability_verdict(np.array([[1.5]])).estado == "unstable"


def test_estimacion_limite_es_la_centralizada(escenario_anillo8):
    graph = escenario_anillo8.grafo
    limite = estimacion_limite(graph, fixed_point(graph))
    oraculo = solve_ml(graph)
    for i in graph.ids:
        np.testing.assert_allclose(limite[i], oraculo.x[i], atol=1e-8)


def test_cota_gamma_acota_los_mensajes(anillo8):
    traza = run(anillo8, 15, 1e-12, min_iters=15, guardar_mensajes=True)
    eta = analizar_estabilidad(anillo8).eta
    R_k1 = {r: d.R for r, d in traza.mensajes[1].derivados.items()}
    gamma = cota_gamma(anillo8, eta, R_k1)
    assert gamma >= 1 / (1 - eta)
    for mensajes in traza.mensajes[1:]:
        for r in anillo8.ranuras:
            assert precede_psd(compute_omega(anillo8, *r) / gamma, mensajes.var_a_factor[r].Q, 1e-8)


def test_constantes_del_anillo_preciso():
    reporte = analizar_estabilidad(corpus.buscar_entrada("anillo-12-preciso").grafo)
    assert reporte.eta == pytest.approx(1 / 11)
    assert reporte.rho == pytest.approx(1 / (1 + Q_ANILLO_PRECISO), rel=1e-7)
    assert reporte.beta == pytest.approx(reporte.rho, rel=1e-7)
    assert reporte.rho**4 < 1e-3


def _traza_y_estabilidad(nombre):
    graph = corpus.buscar_entrada(nombre).grafo
    traza = run(graph, ITERACIONES_ENVOLVENTE, 1e-12, min_iters=ITERACIONES_ENVOLVENTE, guardar_mensajes=True)
    return graph, traza, analizar_estabilidad(graph)


@pytest.mark.parametrize("nombre", CICLICOS)
def test_envolvente_de_los_mensajes(nombre):
    graph, traza, estabilidad = _traza_y_estabilidad(nombre)
    for k in range(1, ITERACIONES_ENVOLVENTE + 1):
        cota = estabilidad.alpha * estabilidad.rho ** (k - 1)
        for r in graph.ranuras:
            delta = delta_congruente(traza.mensajes[k].var_a_factor[r].Q, estabilidad.fp.Q_var[r])
            assert norma_espectral(delta) <= cota * (1 + HOLGURA) + HOLGURA, (k, r)


@pytest.mark.parametrize("nombre", CICLICOS)
def test_envolvente_de_las_creencias(nombre):
    graph, traza, estabilidad = _traza_y_estabilidad(nombre)
    for k in range(2, ITERACIONES_ENVOLVENTE + 1):
        cota = estabilidad.alpha * estabilidad.rho ** (k - 1)
        for i in graph.ids:
            delta = delta_congruente(traza.en(k).creencias[i].Q, estabilidad.fp.Q_nodo[i])
            assert norma_espectral(delta) <= cota * (1 + HOLGURA) + HOLGURA, (k, i)


def test_la_primera_creencia_supera_alpha(anillo8):
    # Q_i(1) = 0.2 + 2 suma la información completa de ambas aristas.
    estabilidad = analizar_estabilidad(anillo8)
    traza = run(anillo8, 1, 1e-12)
    Q_inf = 0.2 + 2 * Q_ANILLO / (1 + Q_ANILLO)
    delta = norma_espectral(delta_congruente(traza.en(1).creencias[1].Q, estabilidad.fp.Q_nodo[1]))
    assert delta == pytest.approx(2.2 / Q_inf - 1, rel=1e-8)
    assert delta > estabilidad.alpha
