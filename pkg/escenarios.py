"""
escenarios.py — Generación reproducible de escenarios de medición.

Responsabilidades:
  1. Normales estándar desde un generador por contador (Philox) con
     CDF inversa: palabra w de 64 bits → u = ((w >> 11) + 0.5)·2⁻⁵³ →
     ``ndtri(u)``. Misma semilla ⇒ mismos bits en cualquier plataforma.
  2. ``generar_escenario``: x_true, ruido v = L·n (L Cholesky inferior
     de la covarianza) y mediciones z = C·x_true + v.

Orden de extracción: x_true por nodo (ids ascendentes, solo en modo
``normal``), ruido propio por nodo y ruido conjunto por arista en orden
canónico.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla
from scipy.special import ndtri

from exceptions import EscenarioError
from formato_grafo import (
    DocumentoGrafo,
    MetadatosEscenario,
    ParametrosGenerador,
    hash_grafo,
)
from modelo_grafo import MeasurementGraph, exigir_valido

logger = logging.getLogger(__name__)

_ESCALA_53 = 2.0 ** -53
_MAX_SEMILLA = 2 ** 64


def normales(semilla: int, cantidad: int) -> np.ndarray:
    """``cantidad`` normales N(0, 1) del flujo Philox con clave ``semilla``."""
    if not 0 <= semilla < _MAX_SEMILLA:
        raise EscenarioError("La semilla debe ser un entero de 64 bits sin signo", {"seed": semilla})
    if cantidad == 0:
        return np.zeros(0)
    generador = np.random.Philox(key=semilla)
    palabras = np.asarray(generador.random_raw(cantidad), dtype=np.uint64)
    uniformes = ((palabras >> np.uint64(11)).astype(np.float64) + 0.5) * _ESCALA_53
    return ndtri(uniformes)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Grafo con mediciones realizadas y su verdad de terreno."""

    grafo: MeasurementGraph
    semilla: int
    x_true: dict[int, np.ndarray]
    hash_grafo: str
    generador: ParametrosGenerador

    def como_documento(self) -> DocumentoGrafo:
        return DocumentoGrafo(
            grafo=self.grafo,
            generador=self.generador,
            escenario=MetadatosEscenario(self.semilla, self.hash_grafo, self.x_true),
        )


class _Flujo:
    """Consume normales en orden."""

    def __init__(self, valores: np.ndarray) -> None:
        self._valores = valores
        self._posicion = 0

    def tomar(self, cantidad: int) -> np.ndarray:
        bloque = self._valores[self._posicion:self._posicion + cantidad]
        self._posicion += cantidad
        return bloque


def _ruido(flujo: _Flujo, covarianza: np.ndarray) -> np.ndarray:
    L = sla.cholesky(covarianza, lower=True)
    return L @ flujo.tomar(covarianza.shape[0])


def _verdad(graph: MeasurementGraph, parametros: ParametrosGenerador, flujo: _Flujo) -> dict[int, np.ndarray]:
    if parametros.x_true == "zeros":
        base = {i: np.zeros(graph.nodo(i).dim) for i in graph.ids}
    elif parametros.x_true == "normal":
        base = {i: flujo.tomar(graph.nodo(i).dim).copy() for i in graph.ids}
    else:
        faltantes = [i for i in graph.ids if i not in parametros.x_true]
        if faltantes:
            raise EscenarioError("x_true explícito sin valores para algunos nodos", {"nodos": faltantes})
        base = {}
        for i in graph.ids:
            valor = np.asarray(parametros.x_true[i], dtype=float)
            if valor.shape != (graph.nodo(i).dim,):
                raise EscenarioError("x_true con dimensión incorrecta", {"nodo": i, "forma": valor.shape})
            base[i] = valor
    return {i: parametros.escala * v for i, v in base.items()}


def generar_escenario(
    documento: DocumentoGrafo,
    semilla: int,
    parametros: Optional[ParametrosGenerador] = None,
) -> Scenario:
    """Realiza las mediciones del grafo con la semilla dada.

    Args:
        documento:  Grafo con el bloque ``generator`` (o ``parametros``).
        semilla:    Clave de 64 bits del generador.
        parametros: Sustituye al bloque ``generator`` del documento.

    Raises:
        EscenarioError:     si faltan los parámetros del generador.
        GrafoInvalidoError: si el grafo no es válido (p. ej. R no SPD).
    """
    parametros = parametros or documento.generador
    if parametros is None:
        raise EscenarioError("missing generator parameters", {"seed": semilla})
    graph = exigir_valido(documento.grafo)

    cantidad = graph.dim_total if parametros.x_true == "normal" else 0
    if parametros.ruido:
        cantidad += sum(n.filas for n in graph.nodos) + sum(a.filas for a in graph.aristas)
    flujo = _Flujo(normales(semilla, cantidad))

    x_true = _verdad(graph, parametros, flujo)
    z_nodos: dict[int, np.ndarray] = {}
    for nodo in graph.nodos:
        if not nodo.tiene_medicion:
            continue
        z = nodo.C @ x_true[nodo.id]
        z_nodos[nodo.id] = z + _ruido(flujo, nodo.R) if parametros.ruido else z
    z_aristas: dict[tuple[int, int], np.ndarray] = {}
    for arista in graph.aristas:
        z = arista.C_ij @ x_true[arista.i] + arista.C_ji @ x_true[arista.j]
        z_aristas[arista.clave] = z + _ruido(flujo, arista.R_ij) if parametros.ruido else z

    realizado = graph.con_mediciones(z_nodos, z_aristas)
    logger.info("Escenario generado: semilla %d, %d normales", semilla, cantidad)
    return Scenario(
        grafo=realizado,
        semilla=semilla,
        x_true=x_true,
        hash_grafo=hash_grafo(graph),
        generador=parametros,
    )
