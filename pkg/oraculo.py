"""
oraculo.py — Oráculo centralizado de máxima verosimilitud (WLS).

Responsabilidades:
  1. Ensamblar el sistema global J x = b del grafo canónico.
  2. ``solve_ml``: x^ML, Σ_i^ML y Q_i^ML = (Σ_i^ML)⁻¹ por nodo.
  3. Sistema tridiagonal por bloques del grafo de capas, su solución
     completa y la truncada (sin la última capa).
  4. Recursión Ã_tt = A_tt − A_{t−1,t}ᵀ Ã_{t−1}⁻¹ A_{t−1,t} y la fórmula
     de producto del error de truncamiento:
       x̌_1(trunc) − x̌_1 = −[Π_{t=1}^{n−1} (−Ã_tt⁻¹ A_{t,t+1})] x̌_n

Todas las funciones son puras sobre entradas inmutables.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla

from algebra import (
    es_spd,
    factorizar_spd,
    informacion,
    informacion_cruzada,
    inversa_spd,
    resolver_spd,
    simetrizar,
    vector_informacion,
)
from config import MAX_NODOS_SIGMA
from exceptions import MatrizSingularError, SistemaNoObservableError
from modelo_grafo import LineGraph, MeasurementGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GlobalSystem:
    """Sistema global en información.

    Attributes:
        J:       Matriz de información (bloques por nodo en orden de ids).
        b:       Vector de información.
        bloques: id → slice de las filas del nodo.
    """

    J: np.ndarray
    b: np.ndarray
    bloques: dict[int, slice]


@dataclass(frozen=True, eq=False)
class SolucionML:
    """Solución centralizada por nodo."""

    x: dict[int, np.ndarray]
    Sigma: dict[int, np.ndarray]
    Q: dict[int, np.ndarray]
    x_global: np.ndarray


@dataclass(frozen=True, eq=False)
class TriDiagonalSystem:
    """A x̌ = B tridiagonal por bloques.

    ``superiores[t]`` es A_{t,t+1} (0-indexado); A_{t+1,t} = A_{t,t+1}ᵀ.
    """

    diagonales: tuple[np.ndarray, ...]
    superiores: tuple[np.ndarray, ...]
    lados: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.diagonales)

    @property
    def dims(self) -> list[int]:
        return [bloque.shape[0] for bloque in self.diagonales]


# ════════════════════════════════════════════════════════════
# 1. SISTEMA GLOBAL
# ════════════════════════════════════════════════════════════


def ensamblar_sistema_global(graph: MeasurementGraph) -> GlobalSystem:
    """Ensambla J y b sumando las contribuciones de cada factor."""
    bloques: dict[int, slice] = {}
    inicio = 0
    for i in graph.ids:
        dim = graph.nodo(i).dim
        bloques[i] = slice(inicio, inicio + dim)
        inicio += dim

    J = np.zeros((inicio, inicio))
    b = np.zeros(inicio)
    for i in graph.ids:
        nodo = graph.nodo(i)
        J[bloques[i], bloques[i]] += nodo.informacion_propia()
        b[bloques[i]] += nodo.vector_propio()
    for arista in graph.aristas:
        si, sj = bloques[arista.i], bloques[arista.j]
        J[si, si] += arista.informacion(arista.i)
        J[sj, sj] += arista.informacion(arista.j)
        cruzado = informacion_cruzada(arista.C_ij, arista.R_ij, arista.C_ji)
        J[si, sj] += cruzado
        J[sj, si] += cruzado.T
        b[si] += arista.vector(arista.i)
        b[sj] += arista.vector(arista.j)
    return GlobalSystem(J=simetrizar(J), b=b, bloques=bloques)


def solve_ml(graph: MeasurementGraph, max_nodos_sigma: Optional[int] = None) -> SolucionML:
    """Resuelve el problema centralizado.

    Por encima de ``max_nodos_sigma`` nodos no se forma Σ global: cada
    bloque diagonal se obtiene resolviendo contra las columnas del nodo.

    Raises:
        SistemaNoObservableError: si J no supera la tolerancia SPD.
    """
    cap = MAX_NODOS_SIGMA if max_nodos_sigma is None else max_nodos_sigma
    sistema = ensamblar_sistema_global(graph)
    if not es_spd(sistema.J):
        raise SistemaNoObservableError(
            "unobservable system", {"nodos": len(graph.ids), "dim": sistema.J.shape[0]}
        )
    try:
        factor = factorizar_spd(sistema.J, {"operacion": "solve_ml"})
    except MatrizSingularError as exc:
        raise SistemaNoObservableError("unobservable system", exc.context) from exc
    x_global = sla.cho_solve(factor, sistema.b)

    Sigma: dict[int, np.ndarray] = {}
    if len(graph.ids) <= cap:
        Sigma_global = simetrizar(sla.cho_solve(factor, np.eye(sistema.J.shape[0])))
        for i, bloque in sistema.bloques.items():
            Sigma[i] = Sigma_global[bloque, bloque]
    else:
        identidad = np.eye(sistema.J.shape[0])
        for i, bloque in sistema.bloques.items():
            columnas = sla.cho_solve(factor, identidad[:, bloque])
            Sigma[i] = simetrizar(columnas[bloque, :])

    x = {i: x_global[bloque] for i, bloque in sistema.bloques.items()}
    Q = {i: inversa_spd(S, {"nodo": i}) for i, S in Sigma.items()}
    logger.debug("Oráculo resuelto: %d nodos, dim %d", len(graph.ids), x_global.size)
    return SolucionML(x=x, Sigma=Sigma, Q=Q, x_global=x_global)


def permutar_sistema(sistema: GlobalSystem, orden: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """J y b con los bloques reordenados según ``orden``."""
    indices = np.concatenate([np.arange(sistema.bloques[i].start, sistema.bloques[i].stop) for i in orden])
    return sistema.J[np.ix_(indices, indices)], sistema.b[indices]


# ════════════════════════════════════════════════════════════
# 2. SISTEMA TRIDIAGONAL DEL GRAFO DE CAPAS
# ════════════════════════════════════════════════════════════


def assemble_tridiagonal(line: LineGraph) -> TriDiagonalSystem:
    """Bloques A_tt, A_{t,t+1} y B_t del grafo de capas.

    A_tt = Č_tᵀŘ_t⁻¹Č_t + Č_{t,t−1}ᵀŘ_{t−1,t}⁻¹Č_{t,t−1} + Č_{t,t+1}ᵀŘ_{t,t+1}⁻¹Č_{t,t+1}
    A_{t,t+1} = Č_{t,t+1}ᵀŘ_{t,t+1}⁻¹Č_{t+1,t}
    """
    diagonales: list[np.ndarray] = []
    lados: list[np.ndarray] = []
    for t, capa in enumerate(line.capas):
        A = informacion(capa.C, capa.R)
        B = vector_informacion(capa.C, capa.R, capa.z)
        if t > 0:
            enlace = line.enlaces[t - 1]
            A = A + informacion(enlace.C_inf, enlace.R)
            B = B + vector_informacion(enlace.C_inf, enlace.R, enlace.z)
        if t < len(line.enlaces):
            enlace = line.enlaces[t]
            A = A + informacion(enlace.C_sup, enlace.R)
            B = B + vector_informacion(enlace.C_sup, enlace.R, enlace.z)
        diagonales.append(simetrizar(A))
        lados.append(B)
    superiores = tuple(
        informacion_cruzada(enlace.C_sup, enlace.R, enlace.C_inf) for enlace in line.enlaces
    )
    return TriDiagonalSystem(tuple(diagonales), superiores, tuple(lados))


def ensamblar_matriz(sistema: TriDiagonalSystem, capas: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Matriz densa A y vector B de las primeras ``capas`` capas."""
    n = sistema.n if capas is None else capas
    dims = sistema.dims[:n]
    inicios = np.concatenate(([0], np.cumsum(dims))).astype(int)
    total = int(inicios[-1])
    A = np.zeros((total, total))
    B = np.zeros(total)
    for t in range(n):
        sl = slice(inicios[t], inicios[t + 1])
        A[sl, sl] = sistema.diagonales[t]
        B[sl] = sistema.lados[t]
        if t + 1 < n:
            sig = slice(inicios[t + 1], inicios[t + 2])
            A[sl, sig] = sistema.superiores[t]
            A[sig, sl] = sistema.superiores[t].T
    return simetrizar(A), B


def _bloques(vector: np.ndarray, dims: Sequence[int]) -> list[np.ndarray]:
    return np.split(vector, np.cumsum(dims)[:-1]) if len(dims) > 1 else [vector]


def resolver_linea(sistema: TriDiagonalSystem) -> list[np.ndarray]:
    """Solución completa x̌ por capas.

    Raises:
        MatrizSingularError: si A no es invertible.
    """
    A, B = ensamblar_matriz(sistema)
    return _bloques(resolver_spd(A, B, {"operacion": "resolver_linea"}), sistema.dims)


def solve_truncated(line: LineGraph) -> np.ndarray:
    """Primer bloque de la solución sin la última capa.

    Con n = d+2 capas coincide con x̂_centro(d+1) del motor de mensajes.

    Raises:
        MatrizSingularError: "singular truncated system".
    """
    sistema = assemble_tridiagonal(line)
    A, B = ensamblar_matriz(sistema, sistema.n - 1)
    try:
        solucion = resolver_spd(A, B, {"centro": line.centro})
    except MatrizSingularError as exc:
        raise MatrizSingularError("singular truncated system", exc.context) from exc
    return solucion[: sistema.dims[0]]


# ════════════════════════════════════════════════════════════
# 3. ELIMINACIÓN POR BLOQUES Y FÓRMULA DE PRODUCTO
# ════════════════════════════════════════════════════════════


def recursion_schur(sistema: TriDiagonalSystem, hasta: Optional[int] = None) -> list[np.ndarray]:
    """Ã_11 = A_11, Ã_tt = A_tt − A_{t−1,t}ᵀ Ã_{t−1,t−1}⁻¹ A_{t−1,t}.

    Raises:
        MatrizSingularError: si algún Ã_tt intermedio es singular.
    """
    n = sistema.n if hasta is None else hasta
    tildes = [sistema.diagonales[0]]
    for t in range(1, n):
        previo = tildes[-1]
        acople = sistema.superiores[t - 1]
        if previo.size == 0 or acople.size == 0:
            tildes.append(sistema.diagonales[t])
            continue
        correccion = acople.T @ resolver_spd(previo, acople, {"t": t})
        tildes.append(simetrizar(sistema.diagonales[t] - correccion))
    return tildes


def complementos_schur_densos(sistema: TriDiagonalSystem) -> list[np.ndarray]:
    """Ã_tt calculados sobre la matriz ensamblada.

    Ã_tt = A[t,t] − A[t,:t] A[:t,:t]⁻¹ A[:t,t]; verificación estructural
    de ``recursion_schur``.
    """
    A, _ = ensamblar_matriz(sistema)
    inicios = np.concatenate(([0], np.cumsum(sistema.dims))).astype(int)
    tildes = []
    for t in range(sistema.n):
        sl = slice(inicios[t], inicios[t + 1])
        previo = slice(0, inicios[t])
        if inicios[t] == 0:
            tildes.append(A[sl, sl].copy())
            continue
        correccion = A[sl, previo] @ resolver_spd(A[previo, previo], A[previo, sl])
        tildes.append(simetrizar(A[sl, sl] - correccion))
    return tildes


def error_product_formula(sistema: TriDiagonalSystem, x_n_ml: np.ndarray) -> np.ndarray:
    """Δx_1 = x̌_1(truncado) − x̌_1(completo) por la fórmula de producto.

    Args:
        sistema: Sistema tridiagonal completo (n capas).
        x_n_ml:  Bloque de la última capa en la solución completa.

    Returns:
        −[(−Ã_11⁻¹A_12)···(−Ã_{n−1,n−1}⁻¹A_{n−1,n})] x̌_n.

    Raises:
        MatrizSingularError: si algún Ã_tt (t ≤ n−1) es singular.
    """
    dim_1 = sistema.dims[0]
    if sistema.n < 2 or np.asarray(x_n_ml).size == 0:
        return np.zeros(dim_1)
    tildes = recursion_schur(sistema, sistema.n - 1)
    vector = np.asarray(x_n_ml, dtype=float)
    for t in reversed(range(sistema.n - 1)):
        vector = -resolver_spd(tildes[t], sistema.superiores[t] @ vector, {"t": t + 1})
    return -vector


def bloque_capa(solucion: SolucionML, line: LineGraph, t: int) -> np.ndarray:
    """Estado apilado de la capa t (0-indexada) tomado de la solución global."""
    miembros = line.capas[t].miembros
    if not miembros:
        return np.zeros(0)
    return np.concatenate([solucion.x[n] for n in miembros])
