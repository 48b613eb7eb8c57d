"""
modelo_grafo.py — Grafo canónico de mediciones y sus transformaciones.

Responsabilidades:
  1. Tipos inmutables: ``NodeSpec`` (medición propia z_i = C_i x_i + v_i),
     ``EdgeSpec`` (medición conjunta z_ij = C_ij x_i + C_ji x_j + v_ij)
     y ``MeasurementGraph``.
  2. ``validate``: dimensiones, covarianzas SPD, conexión, duplicados.
  3. Ω_{i,j} y el Supuesto 1 (constante η).
  4. Poda de hojas, subgrafos a d saltos y profundidad libre de ciclos.
  5. Grafo reducido G̃_i (división de hijos frontera con covarianza p·R_s).
  6. Grafo de capas (super nodos por distancia al centro).

Orden canónico: ids ascendentes; ranuras dirigidas (i→(i,j)) en orden
lexicográfico de (i, j).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Optional, Union

import networkx as nx
import numpy as np
from scipy.linalg import block_diag

from algebra import (
    autovalor_max_relativo,
    es_spd,
    informacion,
    simetrizar,
    vector_informacion,
)
from exceptions import GrafoInvalidoError, GrafoReducidoError, OmegaNoDefinidaError

logger = logging.getLogger(__name__)

Profundidad = Union[int, float]

# Reglas de validación (texto estable, se usa en reportes y pruebas).
REGLA_DIMENSION = "dimension mismatch"
REGLA_SPD = "covariance not SPD"
REGLA_SIMETRIA = "covariance not symmetric"
REGLA_DESCONECTADO = "graph disconnected"
REGLA_ARISTA_DUPLICADA = "duplicate edge"
REGLA_ID_DUPLICADO = "duplicate node id"
REGLA_LAZO = "self-loop"
REGLA_NODO_INEXISTENTE = "unknown node"
REGLA_NO_FINITO = "non-finite value"
REGLA_VACIO = "empty graph"
REGLA_MEDICION_INCOMPLETA = "incomplete self measurement"


def _matriz(valor) -> np.ndarray:
    arreglo = np.array(valor, dtype=float, copy=True)
    if arreglo.ndim == 1 and arreglo.size == 0:
        arreglo = arreglo.reshape(0, 0)
    arreglo.setflags(write=False)
    return arreglo


def _vector(valor) -> np.ndarray:
    arreglo = np.array(valor, dtype=float, copy=True).reshape(-1)
    arreglo.setflags(write=False)
    return arreglo


def clave_arista(a: int, b: int) -> tuple[int, int]:
    """Clave no ordenada de una arista: ``(min, max)``."""
    return (a, b) if a < b else (b, a)


# ════════════════════════════════════════════════════════════
# 1. TIPOS DEL DOMINIO
# ════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class NodeSpec:
    """Nodo variable con su medición propia opcional.

    Attributes:
        id:  Identificador entero.
        dim: Dimensión n_i del estado.
        C:   Matriz m_i × n_i (``None`` si el nodo no tiene medición propia).
        R:   Covarianza SPD m_i × m_i.
        z:   Medición m_i; nula cuando se omite.
    """

    id: int
    dim: int
    C: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.C is not None:
            object.__setattr__(self, "C", _matriz(self.C))
        if self.R is not None:
            object.__setattr__(self, "R", _matriz(self.R))
        if self.z is not None:
            object.__setattr__(self, "z", _vector(self.z))
        elif self.C is not None:
            object.__setattr__(self, "z", _vector(np.zeros(self.C.shape[0])))

    @property
    def tiene_medicion(self) -> bool:
        return self.C is not None and self.R is not None

    @property
    def filas(self) -> int:
        return self.C.shape[0] if self.tiene_medicion else 0

    def informacion_propia(self) -> np.ndarray:
        """``C_iᵀ R_i⁻¹ C_i`` o la matriz nula sin medición propia."""
        if not self.tiene_medicion:
            return np.zeros((self.dim, self.dim))
        return informacion(self.C, self.R)

    def vector_propio(self) -> np.ndarray:
        """``C_iᵀ R_i⁻¹ z_i`` o el vector nulo."""
        if not self.tiene_medicion:
            return np.zeros(self.dim)
        return vector_informacion(self.C, self.R, self.z)


@dataclass(frozen=True, eq=False)
class EdgeSpec:
    """Medición conjunta entre dos nodos, almacenada una sola vez.

    ``C_ij`` multiplica a x_i y ``C_ji`` a x_j; ``R_ij`` y ``z_ij`` son
    los mismos en ambos sentidos.
    """

    i: int
    j: int
    C_ij: np.ndarray
    C_ji: np.ndarray
    R_ij: np.ndarray
    z_ij: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "C_ij", _matriz(self.C_ij))
        object.__setattr__(self, "C_ji", _matriz(self.C_ji))
        object.__setattr__(self, "R_ij", _matriz(self.R_ij))
        if self.z_ij is None:
            object.__setattr__(self, "z_ij", _vector(np.zeros(self.C_ij.shape[0])))
        else:
            object.__setattr__(self, "z_ij", _vector(self.z_ij))

    @property
    def clave(self) -> tuple[int, int]:
        return clave_arista(self.i, self.j)

    @property
    def filas(self) -> int:
        return self.C_ij.shape[0]

    def otro(self, nodo: int) -> int:
        """Extremo opuesto a ``nodo``."""
        if nodo == self.i:
            return self.j
        if nodo == self.j:
            return self.i
        raise KeyError(nodo)

    def coeficiente(self, nodo: int) -> np.ndarray:
        """Matriz que multiplica a ``x_nodo`` en z_ij (C_{nodo,otro})."""
        if nodo == self.i:
            return self.C_ij
        if nodo == self.j:
            return self.C_ji
        raise KeyError(nodo)

    def informacion(self, nodo: int) -> np.ndarray:
        """``C_{nodo,otro}ᵀ R⁻¹ C_{nodo,otro}``."""
        return informacion(self.coeficiente(nodo), self.R_ij)

    def vector(self, nodo: int) -> np.ndarray:
        """``C_{nodo,otro}ᵀ R⁻¹ z``."""
        return vector_informacion(self.coeficiente(nodo), self.R_ij, self.z_ij)

    def reorientada(self, viejo: int, nuevo: int) -> "EdgeSpec":
        """Copia de la arista con el extremo ``viejo`` renombrado."""
        i = nuevo if self.i == viejo else self.i
        j = nuevo if self.j == viejo else self.j
        return EdgeSpec(i=i, j=j, C_ij=self.C_ij, C_ji=self.C_ji, R_ij=self.R_ij, z_ij=self.z_ij)


@dataclass(frozen=True, eq=False)
class MeasurementGraph:
    """Grafo canónico: un nodo por variable y una arista por medición conjunta.

    La construcción no valida; ``validate`` reporta las violaciones y las
    operaciones asumen un grafo válido.
    """

    nodos: tuple[NodeSpec, ...]
    aristas: tuple[EdgeSpec, ...] = ()

    @classmethod
    def construir(cls, nodos: Iterable[NodeSpec], aristas: Iterable[EdgeSpec] = ()) -> "MeasurementGraph":
        """Crea el grafo con nodos y aristas en orden canónico."""
        return cls(
            nodos=tuple(sorted(nodos, key=lambda n: n.id)),
            aristas=tuple(sorted(aristas, key=lambda a: a.clave)),
        )

    @cached_property
    def indice_nodos(self) -> dict[int, NodeSpec]:
        return {nodo.id: nodo for nodo in self.nodos}

    @cached_property
    def indice_aristas(self) -> dict[tuple[int, int], EdgeSpec]:
        return {arista.clave: arista for arista in self.aristas}

    @cached_property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.indice_nodos))

    @cached_property
    def vecinos(self) -> dict[int, tuple[int, ...]]:
        adyacencia: dict[int, set[int]] = {i: set() for i in self.indice_nodos}
        for a, b in self.indice_aristas:
            adyacencia.setdefault(a, set()).add(b)
            adyacencia.setdefault(b, set()).add(a)
        return {i: tuple(sorted(vs)) for i, vs in adyacencia.items()}

    @cached_property
    def ranuras(self) -> tuple[tuple[int, int], ...]:
        """Ranuras dirigidas (i→(i,j)) en orden lexicográfico."""
        return tuple(sorted((i, j) for i in self.ids for j in self.vecinos[i]))

    @cached_property
    def nx(self) -> nx.Graph:
        grafo = nx.Graph()
        grafo.add_nodes_from(self.ids)
        grafo.add_edges_from(self.indice_aristas)
        return grafo

    @property
    def dim_total(self) -> int:
        return sum(nodo.dim for nodo in self.nodos)

    def nodo(self, i: int) -> NodeSpec:
        return self.indice_nodos[i]

    def arista(self, i: int, j: int) -> EdgeSpec:
        return self.indice_aristas[clave_arista(i, j)]

    def es_aciclico(self) -> bool:
        return nx.is_forest(self.nx)

    def diametro(self) -> int:
        if len(self.ids) <= 1:
            return 0
        return int(nx.diameter(self.nx))

    def con_mediciones(
        self,
        z_nodos: dict[int, np.ndarray],
        z_aristas: dict[tuple[int, int], np.ndarray],
    ) -> "MeasurementGraph":
        """Copia del grafo con las mediciones reemplazadas."""
        nodos = [
            NodeSpec(n.id, n.dim, n.C, n.R, z_nodos.get(n.id, n.z)) if n.tiene_medicion else n
            for n in self.nodos
        ]
        aristas = [
            EdgeSpec(a.i, a.j, a.C_ij, a.C_ji, a.R_ij, z_aristas.get(a.clave, a.z_ij))
            for a in self.aristas
        ]
        return MeasurementGraph.construir(nodos, aristas)


@dataclass(frozen=True, eq=False)
class ReducedGraph:
    """Grafo reducido G̃_i alrededor de un centro.

    Attributes:
        grafo:        El grafo acíclico resultante.
        base:         Grafo original.
        centro:       Nodo i.
        profundidad:  d_i.
        copias:       id de copia → (hijo original, multiplicidad p).
    """

    grafo: MeasurementGraph
    base: MeasurementGraph
    centro: int
    profundidad: int
    copias: dict[int, tuple[int, int]] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class CapaLinea:
    """Super nodo de una capa: mediciones propias apiladas.

    Incluye las mediciones propias de los miembros y las conjuntas entre
    miembros de la misma capa.
    """

    miembros: tuple[int, ...]
    dims: tuple[int, ...]
    C: np.ndarray
    R: np.ndarray
    z: np.ndarray

    @property
    def dim(self) -> int:
        return int(sum(self.dims))


@dataclass(frozen=True, eq=False)
class EnlaceCapas:
    """Mediciones conjuntas entre la capa t y la t+1.

    ``C_sup`` multiplica al estado apilado de la capa t (Č_{t,t+1}) y
    ``C_inf`` al de la capa t+1 (Č_{t+1,t}).
    """

    aristas: tuple[tuple[int, int], ...]
    C_sup: np.ndarray
    C_inf: np.ndarray
    R: np.ndarray
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class LineGraph:
    """Grafo de capas centrado en un nodo.

    La capa 1 contiene solo al centro; las capas 2..profundidad+1 los nodos
    a distancia 1..profundidad y la última agrupa a todos los restantes
    (puede estar vacía).
    """

    base: MeasurementGraph
    centro: int
    profundidad: int
    capas: tuple[CapaLinea, ...]
    enlaces: tuple[EnlaceCapas, ...]

    @property
    def n(self) -> int:
        return len(self.capas)

    def orden_estados(self) -> list[int]:
        """Nodos en el orden en que aparecen sus bloques en x̌."""
        return [nodo for capa in self.capas for nodo in capa.miembros]


class SupuestoUno(NamedTuple):
    cumple: bool
    eta: float


# ════════════════════════════════════════════════════════════
# 2. VALIDACIÓN
# ════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class Violacion:
    """Una regla incumplida, con el elemento que la incumple."""

    regla: str
    elemento: str
    detalle: str = ""

    def __str__(self) -> str:
        texto = f"{self.elemento}: {self.regla}"
        return f"{texto} ({self.detalle})" if self.detalle else texto


@dataclass(frozen=True)
class ResultadoValidacion:
    violaciones: tuple[Violacion, ...] = ()

    @property
    def valido(self) -> bool:
        return not self.violaciones


def _revisar_covarianza(R: np.ndarray, elemento: str, filas: int) -> list[Violacion]:
    if R.ndim != 2 or R.shape != (filas, filas):
        return [Violacion(REGLA_DIMENSION, elemento, f"R con forma {R.shape}, se esperaban {filas} filas")]
    if not np.all(np.isfinite(R)):
        return [Violacion(REGLA_NO_FINITO, elemento, "R")]
    escala = max(1.0, float(np.max(np.abs(R)))) if R.size else 1.0
    if R.size and np.max(np.abs(R - R.T)) > 1e-9 * escala:
        return [Violacion(REGLA_SIMETRIA, elemento)]
    if not es_spd(R):
        return [Violacion(REGLA_SPD, elemento)]
    return []


def _revisar_nodo(nodo: NodeSpec) -> list[Violacion]:
    elemento = f"nodo {nodo.id}"
    if not isinstance(nodo.dim, (int, np.integer)) or nodo.dim < 1:
        return [Violacion(REGLA_DIMENSION, elemento, f"dim={nodo.dim!r}")]
    if (nodo.C is None) != (nodo.R is None):
        return [Violacion(REGLA_MEDICION_INCOMPLETA, elemento, "C y R deben ir juntas")]
    if not nodo.tiene_medicion:
        return []
    if nodo.C.ndim != 2 or nodo.C.shape[1] != nodo.dim:
        return [Violacion(REGLA_DIMENSION, elemento, f"C con forma {nodo.C.shape}")]
    filas = nodo.C.shape[0]
    violaciones = _revisar_covarianza(nodo.R, elemento, filas)
    if nodo.z.shape != (filas,):
        violaciones.append(Violacion(REGLA_DIMENSION, elemento, f"z con {nodo.z.size} entradas"))
    if not (np.all(np.isfinite(nodo.C)) and np.all(np.isfinite(nodo.z))):
        violaciones.append(Violacion(REGLA_NO_FINITO, elemento, "C o z"))
    return violaciones


def _revisar_arista(arista: EdgeSpec, dims: dict[int, int]) -> list[Violacion]:
    elemento = f"arista ({arista.i}, {arista.j})"
    if arista.i == arista.j:
        return [Violacion(REGLA_LAZO, elemento)]
    faltantes = [n for n in (arista.i, arista.j) if n not in dims]
    if faltantes:
        return [Violacion(REGLA_NODO_INEXISTENTE, elemento, f"nodos {faltantes}")]
    if arista.C_ij.ndim != 2 or arista.C_ji.ndim != 2:
        return [Violacion(REGLA_DIMENSION, elemento, "C_ij y C_ji deben ser matrices")]
    filas = arista.C_ij.shape[0]
    violaciones: list[Violacion] = []
    if arista.C_ij.shape[1] != dims[arista.i]:
        violaciones.append(Violacion(REGLA_DIMENSION, elemento, f"C_ij con forma {arista.C_ij.shape}"))
    if arista.C_ji.shape != (filas, dims[arista.j]):
        violaciones.append(Violacion(REGLA_DIMENSION, elemento, f"C_ji con forma {arista.C_ji.shape}"))
    if arista.z_ij.shape != (filas,):
        violaciones.append(Violacion(REGLA_DIMENSION, elemento, f"z_ij con {arista.z_ij.size} entradas"))
    violaciones.extend(_revisar_covarianza(arista.R_ij, elemento, filas))
    if not all(np.all(np.isfinite(m)) for m in (arista.C_ij, arista.C_ji, arista.z_ij)):
        violaciones.append(Violacion(REGLA_NO_FINITO, elemento, "C o z"))
    return violaciones


def validate(graph: MeasurementGraph) -> ResultadoValidacion:
    """Valida el grafo y devuelve todas las violaciones encontradas.

    Returns:
        ``ResultadoValidacion``; ``valido`` es ``True`` si no hay violaciones.
    """
    violaciones: list[Violacion] = []
    if not graph.nodos:
        return ResultadoValidacion((Violacion(REGLA_VACIO, "grafo"),))

    vistos: set[int] = set()
    for nodo in graph.nodos:
        if nodo.id in vistos:
            violaciones.append(Violacion(REGLA_ID_DUPLICADO, f"nodo {nodo.id}"))
        vistos.add(nodo.id)
        violaciones.extend(_revisar_nodo(nodo))

    dims = {nodo.id: nodo.dim for nodo in graph.nodos}
    pares: set[tuple[int, int]] = set()
    for arista in graph.aristas:
        if arista.clave in pares and arista.i != arista.j:
            violaciones.append(Violacion(REGLA_ARISTA_DUPLICADA, f"arista {arista.clave}"))
        pares.add(arista.clave)
        violaciones.extend(_revisar_arista(arista, dims))

    estructura_ok = not any(
        v.regla in (REGLA_LAZO, REGLA_NODO_INEXISTENTE) for v in violaciones
    )
    if estructura_ok and len(graph.ids) > 1 and not nx.is_connected(graph.nx):
        componentes = nx.number_connected_components(graph.nx)
        violaciones.append(
            Violacion(REGLA_DESCONECTADO, "grafo", f"{componentes} componentes")
        )

    if violaciones:
        logger.debug("Validación con %d violaciones.", len(violaciones))
    return ResultadoValidacion(tuple(violaciones))


def exigir_valido(graph: MeasurementGraph) -> MeasurementGraph:
    """Devuelve el grafo si es válido.

    Raises:
        GrafoInvalidoError: con la lista de violaciones.
    """
    resultado = validate(graph)
    if not resultado.valido:
        raise GrafoInvalidoError(
            f"Grafo inválido: {len(resultado.violaciones)} violaciones",
            resultado.violaciones,
            {"primera": str(resultado.violaciones[0])},
        )
    return graph


# ════════════════════════════════════════════════════════════
# 3. Ω Y SUPUESTO 1
# ════════════════════════════════════════════════════════════


def compute_omega(graph: MeasurementGraph, i: int, j: int) -> np.ndarray:
    """Ω_{i,j}: información del nodo i sin la arista hacia j.

    Ω_{i,j} = C_iᵀR_i⁻¹C_i + Σ_{w∈N_i∖j} C_{i,w}ᵀR_{i,w}⁻¹C_{i,w}.

    Raises:
        GrafoInvalidoError:   si j no es vecino de i.
        OmegaNoDefinidaError: si el resultado no es definido positivo.
    """
    if j not in graph.vecinos.get(i, ()):
        raise GrafoInvalidoError("j no es vecino de i", context={"i": i, "j": j})
    omega = graph.nodo(i).informacion_propia()
    for w in graph.vecinos[i]:
        if w != j:
            omega = omega + graph.arista(i, w).informacion(i)
    omega = simetrizar(omega)
    if not es_spd(omega):
        raise OmegaNoDefinidaError("Ω not positive definite", {"i": i, "j": j})
    return omega


def check_assumption1(graph: MeasurementGraph) -> SupuestoUno:
    """Calcula η y decide si se cumple el Supuesto 1 (η < 1).

    η es el mayor autovalor de Ω_{i,j}^{-1/2}(C_{i,j}ᵀR_{i,j}⁻¹C_{i,j})Ω_{i,j}^{-1/2}
    sobre todos los pares dirigidos: la menor constante con
    η·Ω_{i,j} ⪰ C_{i,j}ᵀR_{i,j}⁻¹C_{i,j}.

    Raises:
        OmegaNoDefinidaError: si algún Ω_{i,j} no es definido positivo.
    """
    eta = 0.0
    critico: Optional[tuple[int, int]] = None
    for i, j in graph.ranuras:
        omega = compute_omega(graph, i, j)
        valor = autovalor_max_relativo(graph.arista(i, j).informacion(i), omega)
        if valor > eta:
            eta, critico = valor, (i, j)
    cumple = eta < 1.0
    logger.debug("η = %.6g (par crítico %s), supuesto 1 %s", eta, critico, "cumple" if cumple else "no cumple")
    return SupuestoUno(cumple, float(eta))


# ════════════════════════════════════════════════════════════
# 4. PODA, SUBGRAFOS Y PROFUNDIDAD LIBRE DE CICLOS
# ════════════════════════════════════════════════════════════


def prune_leaves(graph: MeasurementGraph) -> frozenset[int]:
    """Elimina hojas repetidamente hasta que no quede ninguna.

    Returns:
        Nodos de Ḡ: todos pertenecen a un ciclo, o un único nodo si el
        grafo es un árbol.
    """
    if not graph.ids:
        return frozenset()
    if not graph.es_aciclico():
        return frozenset(nx.k_core(graph.nx, 2).nodes)
    restante = graph.nx.copy()
    while restante.number_of_nodes() > 1:
        hoja = min(n for n, grado in restante.degree if grado <= 1)
        restante.remove_node(hoja)
    return frozenset(restante.nodes)


def distancias(graph: MeasurementGraph, i: int) -> dict[int, int]:
    """Distancia BFS en saltos desde ``i``."""
    return dict(nx.single_source_shortest_path_length(graph.nx, i))


def subgraph_within(graph: MeasurementGraph, i: int, d: int) -> MeasurementGraph:
    """G_i(d): subgrafo inducido por los nodos a ≤ d saltos de ``i``."""
    if d < 0:
        raise ValueError("d debe ser ≥ 0")
    cercanos = set(nx.single_source_shortest_path_length(graph.nx, i, cutoff=d))
    nodos = [graph.nodo(n) for n in graph.ids if n in cercanos]
    aristas = [a for a in graph.aristas if a.i in cercanos and a.j in cercanos]
    return MeasurementGraph.construir(nodos, aristas)


def cycle_free_depth(graph: MeasurementGraph, i: int) -> Profundidad:
    """d_i: mayor d con G_i(d) acíclico; ``math.inf`` si el grafo es acíclico.

    La bola BFS es conexa, así que G_i(d) es acíclico si y solo si tiene
    exactamente un nodo más que aristas.
    """
    dist = distancias(graph, i)
    excentricidad = max(dist.values())
    nodos_por_nivel = np.bincount(list(dist.values()), minlength=excentricidad + 1)
    aristas_por_nivel = np.zeros(excentricidad + 1, dtype=int)
    for a, b in graph.indice_aristas:
        aristas_por_nivel[max(dist[a], dist[b])] += 1
    nodos = np.cumsum(nodos_por_nivel)
    aristas = np.cumsum(aristas_por_nivel)
    for d in range(excentricidad + 1):
        if aristas[d] >= nodos[d]:
            return d - 1
    return math.inf


# ════════════════════════════════════════════════════════════
# 5. GRAFO REDUCIDO
# ════════════════════════════════════════════════════════════


def _copia_hijo(hijo: NodeSpec, nuevo_id: int, multiplicidad: int) -> NodeSpec:
    if not hijo.tiene_medicion:
        return NodeSpec(nuevo_id, hijo.dim)
    return NodeSpec(nuevo_id, hijo.dim, hijo.C, multiplicidad * hijo.R, hijo.z)


def build_reduced_graph(graph: MeasurementGraph, i: int) -> ReducedGraph:
    """Construye G̃_i a partir de G_i(d_i+1).

    Cada hijo s a distancia d_i+1 conserva solo sus aristas hacia las
    hojas de G_i(d_i). Si toca p > 1 hojas se reemplaza por p copias, cada
    una unida a una hoja y con medición propia (C_s, p·R_s, z_s).

    Raises:
        GrafoReducidoError: si d_i es infinita.
    """
    d = cycle_free_depth(graph, i)
    if math.isinf(d):
        raise GrafoReducidoError(
            "Grafo reducido indefinido: el grafo es acíclico", {"centro": i}
        )
    dist = distancias(graph, i)
    interior = {n for n, dn in dist.items() if dn <= d}
    hijos = sorted(n for n, dn in dist.items() if dn == d + 1)

    nodos = [graph.nodo(n) for n in graph.ids if n in interior]
    aristas = [a for a in graph.aristas if a.i in interior and a.j in interior]
    copias: dict[int, tuple[int, int]] = {}
    siguiente = max(graph.ids) + 1

    for s in hijos:
        hojas = [u for u in graph.vecinos[s] if dist[u] == d]
        p = len(hojas)
        if p == 1:
            nodos.append(graph.nodo(s))
            aristas.append(graph.arista(s, hojas[0]))
            copias[s] = (s, 1)
            continue
        for u in hojas:
            nodos.append(_copia_hijo(graph.nodo(s), siguiente, p))
            aristas.append(graph.arista(s, u).reorientada(s, siguiente))
            copias[siguiente] = (s, p)
            siguiente += 1

    reducido = MeasurementGraph.construir(nodos, aristas)
    logger.debug(
        "Grafo reducido de %d: d=%d, %d nodos, %d copias divididas",
        i, d, len(reducido.ids), sum(1 for s, p in copias.values() if p > 1),
    )
    return ReducedGraph(grafo=reducido, base=graph, centro=i, profundidad=int(d), copias=copias)


# ════════════════════════════════════════════════════════════
# 6. GRAFO DE CAPAS
# ════════════════════════════════════════════════════════════


def _diagonal_bloques(bloques: list[np.ndarray]) -> np.ndarray:
    if not bloques:
        return np.zeros((0, 0))
    return block_diag(*bloques)


def _apilar_capa(graph: MeasurementGraph, miembros: tuple[int, ...]) -> CapaLinea:
    dims = tuple(graph.nodo(n).dim for n in miembros)
    desplazamiento = dict(zip(miembros, np.concatenate(([0], np.cumsum(dims)[:-1])).astype(int)))
    total = int(sum(dims))
    filas_C: list[np.ndarray] = []
    covarianzas: list[np.ndarray] = []
    mediciones: list[np.ndarray] = []

    for n in miembros:
        nodo = graph.nodo(n)
        if not nodo.tiene_medicion:
            continue
        fila = np.zeros((nodo.filas, total))
        fila[:, desplazamiento[n]:desplazamiento[n] + nodo.dim] = nodo.C
        filas_C.append(fila)
        covarianzas.append(nodo.R)
        mediciones.append(nodo.z)

    conjunto = set(miembros)
    for arista in graph.aristas:
        if arista.i in conjunto and arista.j in conjunto:
            fila = np.zeros((arista.filas, total))
            for extremo in (arista.i, arista.j):
                ini = desplazamiento[extremo]
                fila[:, ini:ini + graph.nodo(extremo).dim] = arista.coeficiente(extremo)
            filas_C.append(fila)
            covarianzas.append(arista.R_ij)
            mediciones.append(arista.z_ij)

    C = np.vstack(filas_C) if filas_C else np.zeros((0, total))
    z = np.concatenate(mediciones) if mediciones else np.zeros(0)
    return CapaLinea(miembros, dims, C, _diagonal_bloques(covarianzas), z)


def _apilar_enlace(graph: MeasurementGraph, arriba: CapaLinea, abajo: CapaLinea) -> EnlaceCapas:
    ini_arriba = dict(zip(arriba.miembros, np.concatenate(([0], np.cumsum(arriba.dims)[:-1])).astype(int)))
    ini_abajo = dict(zip(abajo.miembros, np.concatenate(([0], np.cumsum(abajo.dims)[:-1])).astype(int)))
    pares = sorted(
        (u, v)
        for u in arriba.miembros
        for v in graph.vecinos[u]
        if v in ini_abajo
    )
    sup, inf, covarianzas, mediciones = [], [], [], []
    for u, v in pares:
        arista = graph.arista(u, v)
        fila_sup = np.zeros((arista.filas, arriba.dim))
        fila_sup[:, ini_arriba[u]:ini_arriba[u] + graph.nodo(u).dim] = arista.coeficiente(u)
        fila_inf = np.zeros((arista.filas, abajo.dim))
        fila_inf[:, ini_abajo[v]:ini_abajo[v] + graph.nodo(v).dim] = arista.coeficiente(v)
        sup.append(fila_sup)
        inf.append(fila_inf)
        covarianzas.append(arista.R_ij)
        mediciones.append(arista.z_ij)
    return EnlaceCapas(
        aristas=tuple(pares),
        C_sup=np.vstack(sup) if sup else np.zeros((0, arriba.dim)),
        C_inf=np.vstack(inf) if inf else np.zeros((0, abajo.dim)),
        R=_diagonal_bloques(covarianzas),
        z=np.concatenate(mediciones) if mediciones else np.zeros(0),
    )


def build_line_graph(
    graph: MeasurementGraph, i: int, profundidad: Optional[int] = None
) -> LineGraph:
    """Reagrupa el grafo en capas por distancia a ``i``.

    Las capas 1..profundidad+1 contienen los nodos a distancia
    0..profundidad y la capa profundidad+2 agrupa al resto. Las aristas
    dentro de una capa pasan a ser mediciones propias del super nodo.

    Args:
        graph:       Grafo válido y conexo.
        i:           Nodo centro.
        profundidad: Por defecto d_i; en grafos acíclicos, ecc(i) − 1 (la
                     última capa agrupa a los nodos más lejanos).
    """
    dist = distancias(graph, i)
    excentricidad = max(dist.values())
    if profundidad is None:
        d = cycle_free_depth(graph, i)
        profundidad = max(excentricidad - 1, 0) if math.isinf(d) else int(d)
    if profundidad < 0:
        raise GrafoReducidoError("Profundidad de capas negativa", {"centro": i})

    grupos: list[tuple[int, ...]] = [
        tuple(n for n in graph.ids if dist[n] == t) for t in range(profundidad + 1)
    ]
    grupos.append(tuple(n for n in graph.ids if dist[n] > profundidad))
    capas = tuple(_apilar_capa(graph, miembros) for miembros in grupos)
    enlaces = tuple(_apilar_enlace(graph, capas[t], capas[t + 1]) for t in range(len(capas) - 1))
    logger.debug(
        "Grafo de capas centrado en %d: tamaños %s", i, [len(c.miembros) for c in capas]
    )
    return LineGraph(base=graph, centro=i, profundidad=profundidad, capas=capas, enlaces=enlaces)
