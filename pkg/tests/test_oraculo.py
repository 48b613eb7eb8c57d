import numpy as np
import pytest

import corpus
from exceptions import SistemaNoObservableError
from mensajes import run
from modelo_grafo import MeasurementGraph, build_line_graph
from oraculo import (
    TriDiagonalSystem,
    assemble_tridiagonal,
    bloque_capa,
    complementos_schur_densos,
    ensamblar_matriz,
    ensamblar_sistema_global,
    error_product_formula,
    permutar_sistema,
    recursion_schur,
    resolver_linea,
    solve_ml,
    solve_truncated,
)


def test_nodo_unico():
    graph = MeasurementGraph.construir([corpus.nodo_escalar(1, z=2.0)])
    solucion = solve_ml(graph)
    np.testing.assert_allclose(solucion.x[1], [2.0])
    np.testing.assert_allclose(solucion.Sigma[1], [[5.0]])
    np.testing.assert_allclose(solucion.Q[1], [[0.2]])


def test_sistema_no_observable():
    graph = MeasurementGraph.construir(
        [corpus.nodo_escalar(1, R=None), corpus.nodo_escalar(2, R=None)],
        [corpus.arista_escalar(1, 2)],
    )
    with pytest.raises(SistemaNoObservableError):
        solve_ml(graph)


def test_sigma_por_columnas_coincide(escenario_anillo8):
    graph = escenario_anillo8.grafo
    denso = solve_ml(graph)
    por_columnas = solve_ml(graph, max_nodos_sigma=1)
    for i in graph.ids:
        np.testing.assert_allclose(denso.Sigma[i], por_columnas.Sigma[i], atol=1e-12)
        np.testing.assert_allclose(denso.x[i], por_columnas.x[i], atol=1e-12)


def test_tridiagonal_de_dos_capas():
    graph = corpus.desde_aristas([(1, 2)], {1: 1.0, 2: 1.0})
    sistema = assemble_tridiagonal(build_line_graph(graph, 1, profundidad=0))
    A, _ = ensamblar_matriz(sistema)
    np.testing.assert_allclose(A, [[2.0, 1.0], [1.0, 2.0]])


@pytest.mark.parametrize("nombre", ["anillo-8", "cuatro-nodos", "anillo-vectorial", "rueda-7"])
def test_matriz_de_capas_es_la_global_permutada(nombre):
    graph = corpus.buscar_entrada(nombre).grafo
    linea = build_line_graph(graph, 1)
    A, _ = ensamblar_matriz(assemble_tridiagonal(linea))
    J, _ = permutar_sistema(ensamblar_sistema_global(graph), linea.orden_estados())
    np.testing.assert_allclose(A, J, atol=1e-12)


def test_solucion_por_capas_es_la_global(escenario_anillo8):
    graph = escenario_anillo8.grafo
    linea = build_line_graph(graph, 1)
    bloques = resolver_linea(assemble_tridiagonal(linea))
    oraculo = solve_ml(graph)
    for t, bloque in enumerate(bloques):
        np.testing.assert_allclose(bloque, bloque_capa(oraculo, linea, t), atol=1e-10)


def test_truncado_coincide_con_el_motor(escenario_anillo8):
    graph = escenario_anillo8.grafo
    linea = build_line_graph(graph, 1)
    d = linea.profundidad
    traza = run(graph, d + 1, 1e-12, min_iters=d + 1)
    np.testing.assert_allclose(solve_truncated(linea), traza.en(d + 1).x_hat(1), atol=1e-10)


def test_schur_recursivo_y_denso(anillo8):
    sistema = assemble_tridiagonal(build_line_graph(anillo8, 1))
    for recursivo, denso in zip(recursion_schur(sistema), complementos_schur_densos(sistema)):
        np.testing.assert_allclose(recursivo, denso, atol=1e-12)


def test_formula_de_producto(escenario_anillo8):
    graph = escenario_anillo8.grafo
    linea = build_line_graph(graph, 1)
    sistema = assemble_tridiagonal(linea)
    oraculo = solve_ml(graph)
    x_n = bloque_capa(oraculo, linea, linea.n - 1)
    directo = solve_truncated(linea) - oraculo.x[1]
    np.testing.assert_allclose(error_product_formula(sistema, x_n), directo, atol=1e-10)


def test_formula_de_producto_con_ultimo_bloque_nulo(anillo8):
    sistema = assemble_tridiagonal(build_line_graph(anillo8, 1))
    np.testing.assert_array_equal(error_product_formula(sistema, np.zeros(1)), np.zeros(1))


def test_sistema_de_una_capa():
    sistema = TriDiagonalSystem((np.eye(2),), (), (np.ones(2),))
    np.testing.assert_array_equal(error_product_formula(sistema, np.ones(2)), np.zeros(2))
