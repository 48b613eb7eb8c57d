import math

import numpy as np
import pytest

import corpus
from exceptions import GrafoInvalidoError, GrafoReducidoError, OmegaNoDefinidaError
from modelo_grafo import (
    REGLA_ARISTA_DUPLICADA,
    REGLA_DESCONECTADO,
    REGLA_DIMENSION,
    REGLA_SPD,
    EdgeSpec,
    MeasurementGraph,
    NodeSpec,
    build_line_graph,
    build_reduced_graph,
    check_assumption1,
    compute_omega,
    cycle_free_depth,
    exigir_valido,
    prune_leaves,
    subgraph_within,
    validate,
)


def _reglas(graph):
    return {v.regla for v in validate(graph).violaciones}


# ── Validación ──────────────────────────────────────────────


def test_nodo_unico_es_valido():
    assert validate(MeasurementGraph.construir([corpus.nodo_escalar(1)])).valido


def test_covarianza_indefinida():
    nodos = [corpus.nodo_escalar(1), corpus.nodo_escalar(2)]
    arista = EdgeSpec(1, 2, [[1.0, 0.0], [0.0, 1.0]], [[1.0], [1.0]], [[1.0, 0.0], [0.0, -0.1]])
    assert REGLA_SPD in _reglas(MeasurementGraph.construir(nodos, [arista]))


def test_dimension_incorrecta():
    nodos = [corpus.nodo_escalar(1), corpus.nodo_escalar(2)]
    arista = EdgeSpec(1, 2, [[1.0, 1.0]], [[1.0]], [[1.0]])
    assert REGLA_DIMENSION in _reglas(MeasurementGraph.construir(nodos, [arista]))


def test_grafo_desconectado():
    graph = MeasurementGraph.construir([corpus.nodo_escalar(1), corpus.nodo_escalar(2)])
    assert _reglas(graph) == {REGLA_DESCONECTADO}
    with pytest.raises(GrafoInvalidoError) as info:
        exigir_valido(graph)
    assert len(info.value.violaciones) == 1


def test_arista_duplicada_en_ambos_sentidos():
    nodos = [corpus.nodo_escalar(1), corpus.nodo_escalar(2)]
    graph = MeasurementGraph.construir(nodos, [corpus.arista_escalar(1, 2), corpus.arista_escalar(2, 1)])
    assert REGLA_ARISTA_DUPLICADA in _reglas(graph)


@pytest.mark.parametrize("nombre", corpus.nombres())
def test_corpus_valido(nombre):
    assert validate(corpus.buscar_entrada(nombre).grafo).valido


# ── Ω y Supuesto 1 ──────────────────────────────────────────


def test_omega_con_un_solo_vecino():
    graph = corpus.camino(2)
    np.testing.assert_allclose(compute_omega(graph, 1, 2), [[0.2]])


def test_omega_con_grado_tres():
    graph = corpus.rueda(7)
    assert graph.vecinos[2] == (1, 3, 7)
    np.testing.assert_allclose(compute_omega(graph, 2, 1), [[2.2]])


def test_omega_hoja_sin_medicion():
    graph = MeasurementGraph.construir(
        [corpus.nodo_escalar(1), corpus.nodo_escalar(2, R=None)], [corpus.arista_escalar(1, 2)]
    )
    with pytest.raises(OmegaNoDefinidaError):
        compute_omega(graph, 2, 1)
    np.testing.assert_allclose(compute_omega(graph, 1, 2), [[0.2]])


def test_omega_exige_vecino(anillo8):
    with pytest.raises(GrafoInvalidoError):
        compute_omega(anillo8, 1, 5)


def test_supuesto_uno_en_el_limite():
    graph = corpus.desde_aristas([(1, 2)], {1: 1.0, 2: 1.0})
    supuesto = check_assumption1(graph)
    assert supuesto.eta == pytest.approx(1.0)


def test_supuesto_uno_en_anillo(anillo8):
    supuesto = check_assumption1(anillo8)
    assert supuesto.cumple
    assert supuesto.eta == pytest.approx(1 / 1.2)


def test_eta_es_la_constante_minima():
    graph = corpus.estrella(4)
    eta = check_assumption1(graph).eta
    for i, j in graph.ranuras:
        resto = eta * compute_omega(graph, i, j) - graph.arista(i, j).informacion(i)
        assert np.linalg.eigvalsh(resto).min() >= -1e-9


# ── Poda y profundidad ──────────────────────────────────────


def test_poda_de_camino_deja_un_nodo():
    assert len(prune_leaves(corpus.camino(4))) == 1


def test_poda_de_anillo_conserva_todo():
    assert prune_leaves(corpus.anillo(5)) == frozenset(range(1, 6))


def test_poda_quita_cadena_colgante():
    assert prune_leaves(corpus.anillo_con_colgantes()) == frozenset({1, 2, 3, 4})


def test_subgrafo_dentro_de_radio(anillo8):
    uno = subgraph_within(anillo8, 1, 0)
    assert uno.ids == (1,)
    tres = subgraph_within(anillo8, 1, 3)
    assert len(tres.ids) == 7 and len(tres.aristas) == 6 and tres.es_aciclico()
    cuatro = subgraph_within(anillo8, 1, 4)
    assert len(cuatro.ids) == 8 and len(cuatro.aristas) == 8


@pytest.mark.parametrize("n, esperado", [(6, 2), (8, 3), (10, 4)])
def test_profundidad_en_anillos(n, esperado):
    graph = corpus.anillo(n)
    assert {cycle_free_depth(graph, i) for i in graph.ids} == {esperado}


def test_profundidad_en_triangulo_y_arbol(triangulo, arbol):
    assert cycle_free_depth(triangulo, 1) == 0
    assert all(math.isinf(cycle_free_depth(arbol, i)) for i in arbol.ids)


# ── Grafo reducido ──────────────────────────────────────────


def test_grafo_reducido_del_anillo(anillo8):
    reducido = build_reduced_graph(anillo8, 1)
    assert reducido.profundidad == 3
    assert len(reducido.grafo.ids) == 9
    assert reducido.grafo.es_aciclico()
    divididas = {c: p for c, (s, p) in reducido.copias.items() if p > 1}
    assert set(divididas) == {9, 10}
    for copia in divididas:
        assert reducido.copias[copia][0] == 5
        np.testing.assert_allclose(reducido.grafo.nodo(copia).R, [[10.0]])


def test_copias_duplican_la_covarianza():
    graph = corpus.desde_aristas([(1, 2), (2, 3), (3, 4), (4, 1)], {3: 1.0})
    reducido = build_reduced_graph(graph, 1)
    assert reducido.profundidad == 1
    copias = [c for c, (s, p) in reducido.copias.items() if s == 3]
    assert len(copias) == 2
    for copia in copias:
        np.testing.assert_allclose(reducido.grafo.nodo(copia).R, [[2.0]])


def test_grafo_reducido_conserva_el_interior(anillo8):
    reducido = build_reduced_graph(anillo8, 1).grafo
    for n in (1, 2, 3, 4, 6, 7, 8):
        np.testing.assert_array_equal(reducido.nodo(n).R, anillo8.nodo(n).R)


def test_grafo_reducido_de_arbol(arbol):
    with pytest.raises(GrafoReducidoError):
        build_reduced_graph(arbol, 1)


# ── Grafo de capas ──────────────────────────────────────────


def test_capas_de_un_camino():
    linea = build_line_graph(corpus.camino(3), 1)
    assert [c.miembros for c in linea.capas] == [(1,), (2,), (3,)]
    for capa in linea.capas:
        np.testing.assert_allclose(capa.C, [[1.0]])
        np.testing.assert_allclose(capa.R, [[5.0]])


def test_capas_del_anillo(anillo8):
    linea = build_line_graph(anillo8, 1)
    assert [len(c.miembros) for c in linea.capas] == [1, 2, 2, 2, 1]
    assert linea.capas[-1].miembros == (5,)
    assert linea.orden_estados() == [1, 2, 8, 3, 7, 4, 6, 5]
    assert linea.enlaces[-1].aristas == ((4, 5), (6, 5))


def test_arista_interna_pasa_a_la_capa(triangulo):
    linea = build_line_graph(triangulo, 1)
    assert linea.n == 2
    capa = linea.capas[1]
    assert capa.miembros == (2, 3)
    assert capa.C.shape == (3, 2)
    np.testing.assert_allclose(capa.C[-1], [1.0, 1.0])
