import json

import pytest

import corpus
from formato_grafo import DocumentoGrafo, escribir_documento
from main import main
from modelo_grafo import MeasurementGraph


def _escribir(graph, ruta):
    return str(escribir_documento(DocumentoGrafo(graph), ruta))


def test_validate_imprime_eta(capsys):
    assert main(["validate", "--corpus", "anillo-8"]) == 0
    assert "eta = 0.8333333333" in capsys.readouterr().out


def test_validate_grafo_desconectado(tmp_path, capsys):
    ruta = _escribir(MeasurementGraph.construir([corpus.nodo_escalar(1), corpus.nodo_escalar(2)]), tmp_path / "g.json")
    assert main(["validate", "--graph", ruta]) == 1
    assert "graph disconnected" in capsys.readouterr().out


def test_validate_supuesto_violado(tmp_path, capsys):
    nodos = [corpus.nodo_escalar(i) for i in (1, 2, 3)]
    aristas = [corpus.arista_escalar(1, 2, R=0.01), corpus.arista_escalar(2, 3), corpus.arista_escalar(3, 1)]
    ruta = _escribir(MeasurementGraph.construir(nodos, aristas), tmp_path / "g.json")
    assert main(["validate", "--graph", ruta]) == 1
    assert "Assumption 1 failure" in capsys.readouterr().out


def test_validate_hoja_sin_medicion(tmp_path, capsys):
    graph = MeasurementGraph.construir(
        [corpus.nodo_escalar(1), corpus.nodo_escalar(2, R=None)], [corpus.arista_escalar(1, 2)]
    )
    assert main(["validate", "--graph", _escribir(graph, tmp_path / "g.json")]) == 1
    assert "Assumption 1 failure" in capsys.readouterr().out


def test_documento_mal_formado(tmp_path):
    ruta = tmp_path / "g.json"
    ruta.write_text(json.dumps({"nodes": [{"id": 1, "dim": 1, "peso": 3}]}), encoding="utf-8")
    assert main(["validate", "--graph", str(ruta)]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--corpus", "anillo-8"],
        ["run", "--corpus", "anillo-8", "--max-iters", "0"],
        ["run", "--corpus", "anillo-8", "--tol", "0"],
        ["validate", "--corpus", "no-existe"],
        ["run", "--corpus", "anillo-8", "--centro", "99"],
        ["report", "--corpus", "anillo-8"],
    ],
)
def test_errores_de_ejecucion(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path / "salida")]) == 2


def test_flujo_completo(tmp_path, capsys):
    grafo = tmp_path / "anillo8.json"
    escenario = tmp_path / "s7.json"
    salida = tmp_path / "corrida"
    assert main(["corpus", "--corpus", "anillo-8", "--out", str(grafo)]) == 0
    assert main(["generate", "--graph", str(grafo), "--seed", "7", "--out", str(escenario)]) == 0
    assert main(["run", "--scenario", str(escenario), "--out", str(salida), "--emit", "trace", "accuracy"]) == 0
    for nombre in ("traza_centro.csv", "traza_nodos.csv", "ejecucion.json", "precision.csv", "analisis.json"):
        assert (salida / nombre).exists()
    assert main(["report", "--scenario", str(escenario), "--out", str(salida)]) == 0
    assert (salida / "comparacion.csv").exists()
    assert "Violaciones: 0" in (salida / "resumen.txt").read_text(encoding="utf-8")


def test_report_con_otro_escenario(tmp_path):
    grafo = tmp_path / "anillo8.json"
    salida = tmp_path / "corrida"
    main(["corpus", "--corpus", "anillo-8", "--out", str(grafo)])
    for semilla in ("1", "2"):
        main(["generate", "--graph", str(grafo), "--seed", semilla, "--out", str(tmp_path / f"s{semilla}.json")])
    assert main(["run", "--scenario", str(tmp_path / "s1.json"), "--out", str(salida)]) == 0
    assert main(["report", "--scenario", str(tmp_path / "s2.json"), "--out", str(salida)]) == 2


def test_generate_determinista(tmp_path):
    for nombre in ("a.json", "b.json"):
        assert main(["generate", "--corpus", "cuatro-nodos", "--seed", "42", "--out", str(tmp_path / nombre)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_run_parquet(tmp_path):
    salida = tmp_path / "corrida"
    assert main(["run", "--corpus", "anillo-6", "--out", str(salida), "--formato", "parquet", "--hilos", "2"]) == 0
    assert (salida / "traza_nodos.parquet").exists()


def test_analyze_de_arbol(tmp_path, capsys):
    assert main(["analyze", "--corpus", "arbol-15", "--out", str(tmp_path)]) == 0
    assert "acyclic: exact in diameter iterations" in capsys.readouterr().out


def test_corpus_lista(capsys):
    assert main(["corpus"]) == 0
    salida = capsys.readouterr().out
    for nombre in corpus.nombres():
        assert nombre in salida
