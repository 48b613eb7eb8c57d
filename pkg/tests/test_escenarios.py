import numpy as np
import pytest

import corpus
from escenarios import generar_escenario, normales
from exceptions import EscenarioError, GrafoInvalidoError
from formato_grafo import DocumentoGrafo, ParametrosGenerador, hash_grafo, serializar
from modelo_grafo import MeasurementGraph


def test_normales_reproducibles():
    a = normales(42, 1000)
    assert np.array_equal(a, normales(42, 1000))
    assert np.array_equal(a[:10], normales(42, 10))
    assert not np.array_equal(a, normales(43, 1000))
    assert abs(a.mean()) < 0.15
    assert 0.85 < a.std() < 1.15


def test_semilla_fuera_de_rango():
    with pytest.raises(EscenarioError):
        normales(-1, 3)
    with pytest.raises(EscenarioError):
        normales(2 ** 64, 3)


def test_misma_semilla_mismo_documento():
    documento = corpus.buscar_entrada("cuatro-nodos").documento()
    uno = generar_escenario(documento, 5).como_documento()
    dos = generar_escenario(documento, 5).como_documento()
    assert serializar(uno) == serializar(dos)
    assert serializar(uno) != serializar(generar_escenario(documento, 6).como_documento())


def test_sin_ruido_las_mediciones_son_exactas():
    documento = corpus.buscar_entrada("anillo-vectorial").documento()
    escenario = generar_escenario(documento, 9, ParametrosGenerador(ruido=False))
    grafo = escenario.grafo
    for nodo in grafo.nodos:
        np.testing.assert_allclose(nodo.z, nodo.C @ escenario.x_true[nodo.id], atol=1e-14)
    for arista in grafo.aristas:
        esperado = arista.C_ij @ escenario.x_true[arista.i] + arista.C_ji @ escenario.x_true[arista.j]
        np.testing.assert_allclose(arista.z_ij, esperado, atol=1e-14)


def test_estado_nulo_y_explicito():
    documento = corpus.buscar_entrada("camino-4").documento()
    nulo = generar_escenario(documento, 1, ParametrosGenerador(x_true="zeros", ruido=False))
    assert all(not np.any(n.z) for n in nulo.grafo.nodos)
    explicito = ParametrosGenerador(x_true={i: (float(i),) for i in range(1, 5)}, ruido=False, escala=2.0)
    escenario = generar_escenario(documento, 1, explicito)
    np.testing.assert_allclose(escenario.grafo.nodo(3).z, [6.0])
    np.testing.assert_allclose(escenario.grafo.arista(1, 2).z_ij, [6.0])


def test_escala_multiplica_el_estado():
    documento = corpus.buscar_entrada("anillo-6").documento()
    base = generar_escenario(documento, 4, ParametrosGenerador(ruido=False))
    grande = generar_escenario(documento, 4, ParametrosGenerador(ruido=False, escala=1e3))
    for i in base.x_true:
        np.testing.assert_allclose(grande.x_true[i], 1e3 * base.x_true[i])


def test_hash_del_grafo_en_el_escenario():
    documento = corpus.buscar_entrada("anillo-8").documento()
    escenario = generar_escenario(documento, 2)
    assert escenario.hash_grafo == hash_grafo(documento.grafo)
    assert escenario.como_documento().escenario.semilla == 2


def test_requiere_generador():
    with pytest.raises(EscenarioError):
        generar_escenario(DocumentoGrafo(corpus.anillo(4)), 1)


def test_grafo_invalido():
    graph = MeasurementGraph.construir([corpus.nodo_escalar(1), corpus.nodo_escalar(2)])
    with pytest.raises(GrafoInvalidoError):
        generar_escenario(DocumentoGrafo(graph, ParametrosGenerador()), 1)
