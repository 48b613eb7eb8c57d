import json

import numpy as np
import pytest

import corpus
from exceptions import FormatoGrafoError
from formato_grafo import (
    DocumentoGrafo,
    documento_desde_dict,
    escribir_documento,
    hash_documento,
    hash_grafo,
    leer_documento,
    serializar,
)

MINIMO = {
    "nodes": [
        {"id": 1, "dim": 1, "C": [[1]], "R": [[5]], "z": [0.3]},
        {"id": 2, "dim": 1, "C": [[1]], "R": [[5]]},
    ],
    "edges": [{"i": 1, "j": 2, "C_ij": [[1]], "C_ji": [[1]], "R_ij": [[1]], "z_ij": [0.7]}],
}


def test_lee_el_documento_minimo():
    documento = documento_desde_dict(MINIMO)
    grafo = documento.grafo
    assert grafo.ids == (1, 2)
    np.testing.assert_allclose(grafo.nodo(1).z, [0.3])
    np.testing.assert_allclose(grafo.nodo(2).z, [0.0])
    np.testing.assert_allclose(grafo.arista(2, 1).z_ij, [0.7])
    assert documento.generador is None and documento.escenario is None


def test_nodo_sin_medicion():
    datos = {"nodes": [{"id": 1, "dim": 2}]}
    assert not documento_desde_dict(datos).grafo.nodo(1).tiene_medicion


@pytest.mark.parametrize(
    "datos, elemento",
    [
        ({**MINIMO, "extra": 1}, "documento"),
        ({"nodes": [{"id": 1, "dim": 1, "peso": 2}]}, "nodes[0]"),
        ({"nodes": [{"id": 1, "dim": 1, "C": [[1]]}]}, "nodes[0]"),
        ({"nodes": [{"id": "1", "dim": 1}]}, "nodes[0].id"),
        ({"nodes": [{"id": 1, "dim": 1, "C": [[1], [1, 2]], "R": [[1]]}]}, "nodes[0].C"),
        ({"nodes": MINIMO["nodes"], "edges": [{"i": 1, "j": 2}]}, "edges[0]"),
        ({**MINIMO, "generator": {"x_true": "uniforme"}}, "generator.x_true"),
    ],
)
def test_rechazos_con_contexto(datos, elemento):
    with pytest.raises(FormatoGrafoError) as info:
        documento_desde_dict(datos, "g.json")
    assert info.value.context["elemento"] == elemento
    assert info.value.context["archivo"] == "g.json"


def test_json_invalido_reporta_linea(tmp_path):
    ruta = tmp_path / "roto.json"
    ruta.write_text('{\n  "nodes": [\n    {"id": 1,,}\n  ]\n}\n', encoding="utf-8")
    with pytest.raises(FormatoGrafoError) as info:
        leer_documento(ruta)
    assert info.value.context["linea"] == 3


def test_archivo_inexistente(tmp_path):
    with pytest.raises(FormatoGrafoError):
        leer_documento(tmp_path / "no_existe.json")


def test_escritura_y_lectura_preservan_el_grafo(tmp_path):
    documento = corpus.buscar_entrada("anillo-vectorial").documento()
    ruta = escribir_documento(documento, tmp_path / "sub" / "g.json")
    leido = leer_documento(ruta)
    assert hash_grafo(leido.grafo) == hash_grafo(documento.grafo)
    assert serializar(leido) == serializar(documento)
    assert leido.generador == documento.generador


def test_serializacion_determinista():
    texto = serializar(corpus.buscar_entrada("anillo-8").documento())
    assert texto.endswith("\n")
    assert json.loads(texto)["generator"] == {"noise": True, "scale": 1.0, "x_true": "normal"}


def test_hash_del_grafo_ignora_mediciones():
    base = documento_desde_dict(MINIMO).grafo
    otro = base.con_mediciones({1: np.array([9.0])}, {(1, 2): np.array([-1.0])})
    assert hash_grafo(base) == hash_grafo(otro)
    assert hash_documento(DocumentoGrafo(base)) != hash_documento(DocumentoGrafo(otro))
