"""
corpus.py — Catálogo de grafos de prueba.

Es la **única fuente de verdad** de las topologías que usan la CLI, las
pruebas y ``verificar_garantias.py``. Todas siguen el protocolo de
simulación escalar

    z_i = x_i + v_i,  R_i = 5        z_ij = x_i + x_j + v_ij,  R_ij = 1

salvo donde la entrada indique otra cosa. Regímenes cubiertos:

    Grafo              Régimen
    ──────────────────────────────────────────────────────────────
    anillo-6..12       ciclo simple: estable, tasa ρ ≈ 0.64
    anillo-12-preciso  R propia = 0.1: ρ ≈ 0.084, régimen de la cota
                       asintótica del error (ρ^{d−1}, β^{d−1} < 1e-3)
    anillo-colgantes   ciclo + cadena colgante (R = 0.1): Ā más chico que A
    completo-5         denso: la condición distribuida se cumple
    rueda-7            denso: σ del centro > 1, la condición distribuida
                       falla y el veredicto exacto decide
    arbol-15           árbol aleatorio: exacto en diámetro + 1 iteraciones
    anillo-vectorial   anillo con estados de dimensión 2
    camino-4, estrella-4, cuatro-nodos: casos pequeños

Ninguna entrada es inestable: con factores de a pares Ā(∞)
siempre tiene radio < 1, así que la divergencia se provoca escalando las
mediciones (``generator.scale``), no con una topología.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import networkx as nx
import numpy as np

from config import R_CONJUNTA_DEFECTO, R_PROPIA_DEFECTO
from formato_grafo import DocumentoGrafo, ParametrosGenerador
from modelo_grafo import EdgeSpec, MeasurementGraph, NodeSpec

logger = logging.getLogger(__name__)

SEMILLA_ARBOL = 15
# ρ = 1/(1+q) con q² = 10(1+q): ρ ≈ 0.084 y ρ^4 < 1e-3 en el anillo de 12.
R_PROPIA_PRECISA = 0.1


# ────────────────────────────────────────────────────────────
# Constructores
# ────────────────────────────────────────────────────────────


def nodo_escalar(i: int, R: Optional[float] = R_PROPIA_DEFECTO, z: float = 0.0) -> NodeSpec:
    """Nodo escalar con C = 1; ``R=None`` lo deja sin medición propia."""
    if R is None:
        return NodeSpec(i, 1)
    return NodeSpec(i, 1, [[1.0]], [[R]], [z])


def arista_escalar(i: int, j: int, R: float = R_CONJUNTA_DEFECTO, z: float = 0.0) -> EdgeSpec:
    return EdgeSpec(i, j, [[1.0]], [[1.0]], [[R]], [z])


def desde_aristas(pares, R_propia: Optional[dict[int, float]] = None) -> MeasurementGraph:
    """Grafo escalar con la topología de ``pares``."""
    R_propia = R_propia or {}
    ids = sorted({n for par in pares for n in par})
    nodos = [nodo_escalar(i, R_propia.get(i, R_PROPIA_DEFECTO)) for i in ids]
    return MeasurementGraph.construir(nodos, [arista_escalar(a, b) for a, b in pares])


def anillo(n: int, R_propia: float = R_PROPIA_DEFECTO) -> MeasurementGraph:
    return desde_aristas([(k, k % n + 1) for k in range(1, n + 1)], {k: R_propia for k in range(1, n + 1)})


def camino(n: int) -> MeasurementGraph:
    return desde_aristas([(k, k + 1) for k in range(1, n)])


def estrella(hojas: int, R_hojas: float = 0.1) -> MeasurementGraph:
    """Centro 1 unido a ``hojas`` hojas con medición propia R = ``R_hojas``."""
    pares = [(1, k) for k in range(2, hojas + 2)]
    return desde_aristas(pares, {k: R_hojas for k in range(2, hojas + 2)})


def anillo_con_colgantes() -> MeasurementGraph:
    """Anillo 1–4 con la cadena 1–5–6–7 colgando del nodo 1."""
    pares = [(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (5, 6), (6, 7)]
    return desde_aristas(pares, {5: 0.1, 6: 0.1, 7: 0.1})


def completo(n: int) -> MeasurementGraph:
    return desde_aristas([(a + 1, b + 1) for a, b in nx.complete_graph(n).edges])


def rueda(n: int) -> MeasurementGraph:
    """Centro 1 y un borde de n − 1 nodos (2..n)."""
    return desde_aristas([(a + 1, b + 1) for a, b in nx.wheel_graph(n).edges])


def arbol_aleatorio(n: int, semilla: int = SEMILLA_ARBOL) -> MeasurementGraph:
    """Árbol uniforme por secuencia de Prüfer sembrada."""
    secuencia = np.random.default_rng(semilla).integers(0, n, size=n - 2).tolist()
    arbol = nx.from_prufer_sequence(secuencia)
    return desde_aristas([(min(a, b) + 1, max(a, b) + 1) for a, b in arbol.edges])


def cuatro_nodos() -> MeasurementGraph:
    return desde_aristas([(1, 2), (1, 3), (1, 4), (3, 2), (3, 4)])


def anillo_vectorial(n: int = 6) -> MeasurementGraph:
    """Anillo con estados de dimensión 2 y mediciones acopladas."""
    C_ij = [[1.0, 0.2], [0.0, 1.0]]
    C_ji = [[1.0, 0.0], [0.1, 1.0]]
    R_ij = [[1.0, 0.1], [0.1, 1.0]]
    nodos = [NodeSpec(i, 2, np.eye(2), R_PROPIA_DEFECTO * np.eye(2)) for i in range(1, n + 1)]
    aristas = [
        EdgeSpec(min(k, k % n + 1), max(k, k % n + 1), C_ij, C_ji, R_ij)
        for k in range(1, n + 1)
    ]
    return MeasurementGraph.construir(nodos, aristas)


# ────────────────────────────────────────────────────────────
# Catálogo
# ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class EntradaCorpus:
    """Una topología del corpus.

    Attributes:
        nombre:      Identificador usado en la CLI (``--corpus``).
        descripcion: Texto para listados.
        constructor: Función sin argumentos que arma el grafo.
        regimen:     Régimen esperado (``estable``, ``denso``, ``arbol``).
    """

    nombre: str
    descripcion: str
    constructor: Callable[[], MeasurementGraph]
    regimen: str

    @property
    def grafo(self) -> MeasurementGraph:
        return self.constructor()

    @property
    def ciclico(self) -> bool:
        return not self.grafo.es_aciclico()

    def documento(self, generador: Optional[ParametrosGenerador] = None) -> DocumentoGrafo:
        """Documento del grafo con el generador por defecto (x_true normal, con ruido)."""
        return DocumentoGrafo(self.grafo, generador or ParametrosGenerador())


CORPUS: list[EntradaCorpus] = [
    EntradaCorpus("anillo-6", "Anillo de 6 nodos", partial(anillo, 6), "estable"),
    EntradaCorpus("anillo-8", "Anillo de 8 nodos", partial(anillo, 8), "estable"),
    EntradaCorpus("anillo-10", "Anillo de 10 nodos", partial(anillo, 10), "estable"),
    EntradaCorpus("anillo-12", "Anillo de 12 nodos", partial(anillo, 12), "estable"),
    EntradaCorpus(
        "anillo-12-preciso", "Anillo de 12 nodos con R propia = 0.1", partial(anillo, 12, R_PROPIA_PRECISA), "estable"
    ),
    EntradaCorpus("anillo-colgantes", "Anillo de 4 con cadena colgante de 3", anillo_con_colgantes, "estable"),
    EntradaCorpus("completo-5", "Grafo completo K5", partial(completo, 5), "denso"),
    EntradaCorpus("rueda-7", "Rueda de 7 nodos (centro 1)", partial(rueda, 7), "denso"),
    EntradaCorpus("arbol-15", "Árbol aleatorio de 15 nodos", partial(arbol_aleatorio, 15), "arbol"),
    EntradaCorpus("anillo-vectorial", "Anillo de 6 nodos con estados 2-D", anillo_vectorial, "estable"),
    EntradaCorpus("camino-4", "Camino de 4 nodos", partial(camino, 4), "arbol"),
    EntradaCorpus("estrella-4", "Estrella de 4 hojas (R hojas = 0.1)", partial(estrella, 4), "arbol"),
    EntradaCorpus("cuatro-nodos", "Grafo de 4 nodos con dos ciclos", cuatro_nodos, "estable"),
]


def buscar_entrada(nombre: str) -> EntradaCorpus:
    """Entrada del corpus por nombre.

    Raises:
        KeyError: con los nombres disponibles si no existe.
    """
    for entrada in CORPUS:
        if entrada.nombre == nombre:
            return entrada
    raise KeyError(f"'{nombre}' no está en el corpus; disponibles: {nombres()}")


def nombres() -> list[str]:
    return [entrada.nombre for entrada in CORPUS]
