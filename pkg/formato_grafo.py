"""
formato_grafo.py — Lectura y escritura de documentos de grafo (JSON).

Responsabilidades:
  1. Convertir el documento JSON en ``MeasurementGraph`` rechazando
     claves desconocidas en todos los niveles.
  2. Reportar errores con contexto: ruta, línea (errores de sintaxis) y
     elemento (``nodes[3].R``).
  3. Serializar grafos y escenarios de forma determinista.
  4. Huellas SHA-256: la del grafo (estructura y covarianzas, sin ``z``)
     y la del documento completo.

Esquema (todas las matrices por filas, listas anidadas):

    {
      "nodes": [{"id": 1, "dim": 1, "C": [[1]], "R": [[5]], "z": [0.3]}],
      "edges": [{"i": 1, "j": 2, "C_ij": [[1]], "C_ji": [[1]], "R_ij": [[1]], "z_ij": [0.7]}],
      "generator": {"x_true": "normal", "noise": true, "scale": 1.0},
      "scenario":  {"seed": 42, "graph_sha256": "...", "x_true": {"1": [0.1]}}
    }
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from exceptions import FormatoGrafoError
from modelo_grafo import EdgeSpec, MeasurementGraph, NodeSpec

logger = logging.getLogger(__name__)

CLAVES_DOCUMENTO = frozenset({"nodes", "edges", "generator", "scenario"})
CLAVES_NODO = frozenset({"id", "dim", "C", "R", "z"})
CLAVES_ARISTA = frozenset({"i", "j", "C_ij", "C_ji", "R_ij", "z_ij"})
CLAVES_GENERADOR = frozenset({"x_true", "noise", "scale"})
CLAVES_ESCENARIO = frozenset({"seed", "graph_sha256", "x_true"})
MODOS_X_VERDADERO = ("normal", "zeros")


@dataclass(frozen=True)
class ParametrosGenerador:
    """Parámetros del generador de escenarios embebidos en el grafo.

    Attributes:
        x_true: ``"normal"`` (N(0, I) por nodo), ``"zeros"`` o valores
                explícitos por nodo.
        ruido:  Si ``False`` las mediciones son exactas (z = C·x).
        escala: Factor aplicado a x_true antes de medir.
    """

    x_true: Union[str, dict[int, tuple[float, ...]]] = "normal"
    ruido: bool = True
    escala: float = 1.0


@dataclass(frozen=True, eq=False)
class MetadatosEscenario:
    semilla: int
    hash_grafo: str
    x_true: dict[int, np.ndarray]


@dataclass(frozen=True, eq=False)
class DocumentoGrafo:
    """Grafo más los bloques opcionales ``generator`` y ``scenario``."""

    grafo: MeasurementGraph
    generador: Optional[ParametrosGenerador] = None
    escenario: Optional[MetadatosEscenario] = None


# ════════════════════════════════════════════════════════════
# LECTURA
# ════════════════════════════════════════════════════════════


def _error(mensaje: str, origen: str, elemento: str, **extra: Any) -> FormatoGrafoError:
    contexto = {"archivo": origen, "elemento": elemento}
    contexto.update(extra)
    return FormatoGrafoError(mensaje, contexto)


def _claves(datos: Any, permitidas: frozenset[str], origen: str, elemento: str) -> dict:
    if not isinstance(datos, dict):
        raise _error("Se esperaba un objeto", origen, elemento)
    desconocidas = sorted(set(datos) - permitidas)
    if desconocidas:
        raise _error(f"Claves desconocidas: {desconocidas}", origen, elemento)
    return datos


def _entero(valor: Any, origen: str, elemento: str) -> int:
    if isinstance(valor, bool) or not isinstance(valor, int):
        raise _error("Se esperaba un entero", origen, elemento, valor=valor)
    return valor


def _arreglo(valor: Any, ndim: int, origen: str, elemento: str) -> np.ndarray:
    try:
        arreglo = np.array(valor, dtype=float)
    except (TypeError, ValueError) as exc:
        raise _error(f"Matriz mal formada: {exc}", origen, elemento) from exc
    if ndim == 2 and arreglo.ndim == 2:
        return arreglo
    if ndim == 2 and arreglo.size == 0:
        return arreglo.reshape(0, 0)
    if ndim == 1 and arreglo.ndim == 1:
        return arreglo
    raise _error(
        f"Se esperaban {ndim} dimensiones y hay {arreglo.ndim}",
        origen, elemento, forma=arreglo.shape,
    )


def _leer_nodo(datos: Any, origen: str, elemento: str) -> NodeSpec:
    datos = _claves(datos, CLAVES_NODO, origen, elemento)
    for clave in ("id", "dim"):
        if clave not in datos:
            raise _error(f"Falta la clave '{clave}'", origen, elemento)
    if ("C" in datos) != ("R" in datos):
        raise _error("C y R deben declararse juntas", origen, elemento)
    if "z" in datos and "C" not in datos:
        raise _error("z sin medición propia", origen, elemento)
    return NodeSpec(
        id=_entero(datos["id"], origen, f"{elemento}.id"),
        dim=_entero(datos["dim"], origen, f"{elemento}.dim"),
        C=_arreglo(datos["C"], 2, origen, f"{elemento}.C") if "C" in datos else None,
        R=_arreglo(datos["R"], 2, origen, f"{elemento}.R") if "R" in datos else None,
        z=_arreglo(datos["z"], 1, origen, f"{elemento}.z") if "z" in datos else None,
    )


def _leer_arista(datos: Any, origen: str, elemento: str) -> EdgeSpec:
    datos = _claves(datos, CLAVES_ARISTA, origen, elemento)
    for clave in ("i", "j", "C_ij", "C_ji", "R_ij"):
        if clave not in datos:
            raise _error(f"Falta la clave '{clave}'", origen, elemento)
    return EdgeSpec(
        i=_entero(datos["i"], origen, f"{elemento}.i"),
        j=_entero(datos["j"], origen, f"{elemento}.j"),
        C_ij=_arreglo(datos["C_ij"], 2, origen, f"{elemento}.C_ij"),
        C_ji=_arreglo(datos["C_ji"], 2, origen, f"{elemento}.C_ji"),
        R_ij=_arreglo(datos["R_ij"], 2, origen, f"{elemento}.R_ij"),
        z_ij=_arreglo(datos["z_ij"], 1, origen, f"{elemento}.z_ij") if "z_ij" in datos else None,
    )


def _vectores_por_nodo(datos: Any, origen: str, elemento: str) -> dict[int, np.ndarray]:
    if not isinstance(datos, dict):
        raise _error("Se esperaba un objeto id → vector", origen, elemento)
    vectores: dict[int, np.ndarray] = {}
    for clave, valor in datos.items():
        try:
            nodo = int(clave)
        except ValueError as exc:
            raise _error("Id de nodo no entero", origen, elemento, clave=clave) from exc
        vectores[nodo] = _arreglo(valor, 1, origen, f"{elemento}.{clave}")
    return vectores


def _leer_generador(datos: Any, origen: str) -> ParametrosGenerador:
    datos = _claves(datos, CLAVES_GENERADOR, origen, "generator")
    x_true = datos.get("x_true", "normal")
    if isinstance(x_true, str):
        if x_true not in MODOS_X_VERDADERO:
            raise _error(f"x_true desconocido: {x_true!r}", origen, "generator.x_true")
    else:
        x_true = {
            n: tuple(float(v) for v in vec)
            for n, vec in _vectores_por_nodo(x_true, origen, "generator.x_true").items()
        }
    ruido = datos.get("noise", True)
    if not isinstance(ruido, bool):
        raise _error("noise debe ser booleano", origen, "generator.noise")
    escala = datos.get("scale", 1.0)
    if isinstance(escala, bool) or not isinstance(escala, (int, float)):
        raise _error("scale debe ser numérico", origen, "generator.scale")
    return ParametrosGenerador(x_true=x_true, ruido=ruido, escala=float(escala))


def _leer_escenario(datos: Any, origen: str) -> MetadatosEscenario:
    datos = _claves(datos, CLAVES_ESCENARIO, origen, "scenario")
    for clave in CLAVES_ESCENARIO:
        if clave not in datos:
            raise _error(f"Falta la clave '{clave}'", origen, "scenario")
    return MetadatosEscenario(
        semilla=_entero(datos["seed"], origen, "scenario.seed"),
        hash_grafo=str(datos["graph_sha256"]),
        x_true=_vectores_por_nodo(datos["x_true"], origen, "scenario.x_true"),
    )


def documento_desde_dict(datos: Any, origen: str = "<memoria>") -> DocumentoGrafo:
    """Convierte el JSON ya decodificado en ``DocumentoGrafo``.

    Raises:
        FormatoGrafoError: ante claves desconocidas, tipos o formas inválidas.
    """
    datos = _claves(datos, CLAVES_DOCUMENTO, origen, "documento")
    if "nodes" not in datos:
        raise _error("Falta la clave 'nodes'", origen, "documento")
    nodos_json = datos["nodes"]
    aristas_json = datos.get("edges", [])
    if not isinstance(nodos_json, list) or not isinstance(aristas_json, list):
        raise _error("'nodes' y 'edges' deben ser listas", origen, "documento")

    nodos = [_leer_nodo(n, origen, f"nodes[{k}]") for k, n in enumerate(nodos_json)]
    aristas = [_leer_arista(a, origen, f"edges[{k}]") for k, a in enumerate(aristas_json)]
    generador = _leer_generador(datos["generator"], origen) if "generator" in datos else None
    escenario = _leer_escenario(datos["scenario"], origen) if "scenario" in datos else None
    return DocumentoGrafo(MeasurementGraph.construir(nodos, aristas), generador, escenario)


def leer_documento(ruta: Union[str, Path]) -> DocumentoGrafo:
    """Lee un documento de grafo o escenario desde disco.

    Raises:
        FormatoGrafoError: si el archivo no existe, no es JSON válido
            (con línea y columna) o no respeta el esquema.
    """
    ruta = Path(ruta)
    try:
        texto = ruta.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatoGrafoError("No se pudo leer el archivo", {"archivo": str(ruta), "causa": str(exc)}) from exc
    try:
        datos = json.loads(texto)
    except json.JSONDecodeError as exc:
        raise FormatoGrafoError(
            f"JSON inválido: {exc.msg}",
            {"archivo": str(ruta), "linea": exc.lineno, "columna": exc.colno},
        ) from exc
    documento = documento_desde_dict(datos, str(ruta))
    logger.info(
        "Grafo leído de %s: %d nodos, %d aristas",
        ruta.name, len(documento.grafo.nodos), len(documento.grafo.aristas),
    )
    return documento


# ════════════════════════════════════════════════════════════
# ESCRITURA Y HUELLAS
# ════════════════════════════════════════════════════════════


def _estructura_nodo(nodo: NodeSpec, con_z: bool) -> dict[str, Any]:
    datos: dict[str, Any] = {"id": int(nodo.id), "dim": int(nodo.dim)}
    if nodo.tiene_medicion:
        datos["C"] = nodo.C.tolist()
        datos["R"] = nodo.R.tolist()
        if con_z:
            datos["z"] = nodo.z.tolist()
    return datos


def _estructura_arista(arista: EdgeSpec, con_z: bool) -> dict[str, Any]:
    datos: dict[str, Any] = {
        "i": int(arista.i),
        "j": int(arista.j),
        "C_ij": arista.C_ij.tolist(),
        "C_ji": arista.C_ji.tolist(),
        "R_ij": arista.R_ij.tolist(),
    }
    if con_z:
        datos["z_ij"] = arista.z_ij.tolist()
    return datos


def _vectores_a_json(vectores: dict[int, Any]) -> dict[str, list[float]]:
    return {str(n): [float(v) for v in np.asarray(vectores[n]).reshape(-1)] for n in sorted(vectores)}


def documento_a_dict(documento: DocumentoGrafo) -> dict[str, Any]:
    grafo = documento.grafo
    datos: dict[str, Any] = {
        "nodes": [_estructura_nodo(n, True) for n in grafo.nodos],
        "edges": [_estructura_arista(a, True) for a in grafo.aristas],
    }
    if documento.generador is not None:
        gen = documento.generador
        datos["generator"] = {
            "x_true": gen.x_true if isinstance(gen.x_true, str) else _vectores_a_json(gen.x_true),
            "noise": gen.ruido,
            "scale": gen.escala,
        }
    if documento.escenario is not None:
        esc = documento.escenario
        datos["scenario"] = {
            "seed": int(esc.semilla),
            "graph_sha256": esc.hash_grafo,
            "x_true": _vectores_a_json(esc.x_true),
        }
    return datos


def serializar(documento: DocumentoGrafo) -> str:
    """Texto JSON determinista (claves ordenadas, sangría 2, salto final)."""
    return json.dumps(documento_a_dict(documento), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def escribir_documento(documento: DocumentoGrafo, ruta: Union[str, Path]) -> Path:
    """Escribe el documento en ``ruta`` y devuelve la ruta."""
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text(serializar(documento), encoding="utf-8")
    logger.info("Documento escrito en %s", ruta)
    return ruta


def _sha256(datos: Any) -> str:
    compacto = json.dumps(datos, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(compacto.encode("utf-8")).hexdigest()


def hash_grafo(graph: MeasurementGraph) -> str:
    """Huella de la estructura y covarianzas del grafo (sin mediciones)."""
    return _sha256({
        "nodes": [_estructura_nodo(n, False) for n in graph.nodos],
        "edges": [_estructura_arista(a, False) for a in graph.aristas],
    })


def hash_documento(documento: DocumentoGrafo) -> str:
    """Huella del documento completo, mediciones incluidas."""
    return _sha256(documento_a_dict(documento))
