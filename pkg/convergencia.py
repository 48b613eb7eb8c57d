"""
convergencia.py — Análisis de convergencia: punto fijo, constantes y A(∞).

Responsabilidades:
  1. ``fixed_point``: límites Q_{i→i,j}(∞), Q_{i,j→j}(∞), R_{i,j→j}(∞)
     y Q_i(∞) de la recursión de información (no depende de z).
  2. ``constants``: η, ρ y α.
  3. Ensamblaje de A(∞) sobre las ranuras S, su poda Ā(∞), el
     veredicto espectral y la condición distribuida por nodo (σ_i, ρ̄).
  4. B(∞) = Q^{1/2}(∞) A(∞) Q^{-1/2}(∞), el vector β y la estimación
     límite α(∞) = (I − B(∞))⁻¹β.
  5. ``cota_gamma``: cota inferior Q_{i→i,j}(k) ⪰ γ⁻¹Ω_{i,j}.
  6. ``analizar_estabilidad``: todo lo anterior en un ``StabilityReport``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from algebra import (
    congruencia_normalizada,
    informacion_cruzada,
    norma_espectral,
    radio_espectral,
    raiz_inversa_spd,
    raiz_psd,
    resolver_spd,
    vector_informacion,
)
from config import (
    FACTOR_ITERS_PUNTO_FIJO,
    MARGEN_ESTABILIDAD,
    MIN_ITERS_PUNTO_FIJO,
    RCOND_MINIMO,
    TOL_PUNTO_FIJO,
)
from exceptions import (
    MatrizSingularError,
    OmegaNoDefinidaError,
    PuntoFijoNoAlcanzadoError,
    SupuestoNoCumplidoError,
)
from mensajes import Ranura, recursion_informacion
from modelo_grafo import MeasurementGraph, check_assumption1, compute_omega, prune_leaves

logger = logging.getLogger(__name__)

ESTABLE = "stable"
MARGINAL = "marginal"
INESTABLE = "unstable"
CUMPLE = "pass"
NO_CUMPLE = "fail"
NO_APLICA = "not-applicable"


# ════════════════════════════════════════════════════════════
# TIPOS
# ════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class FixedPointMessages:
    """Límites de los mensajes de información.

    Attributes:
        Q_var:       Q_{i→i,j}(∞) por ranura (i, j).
        Q_factor:    Q_{i,j→j}(∞) por ranura (i, j).
        R_factor:    R_{i,j→j}(∞) por ranura (i, j).
        Q_nodo:      Q_i(∞) por nodo.
        residuo:     Último cambio relativo observado.
        iteraciones: Iteraciones usadas.
    """

    Q_var: dict[Ranura, np.ndarray]
    Q_factor: dict[Ranura, np.ndarray]
    R_factor: dict[Ranura, np.ndarray]
    Q_nodo: dict[int, np.ndarray]
    residuo: float
    iteraciones: int


@dataclass(frozen=True)
class Constantes:
    eta: float
    rho: float
    alpha: float


@dataclass(frozen=True, eq=False)
class IndiceRanuras:
    """Orden de las ranuras y la posición de cada bloque en A(∞)."""

    ranuras: tuple[Ranura, ...]
    bloques: dict[Ranura, slice]

    @property
    def dim(self) -> int:
        return self.bloques[self.ranuras[-1]].stop if self.ranuras else 0

    @classmethod
    def desde(cls, graph: MeasurementGraph, ranuras) -> "IndiceRanuras":
        bloques: dict[Ranura, slice] = {}
        inicio = 0
        for i, j in ranuras:
            dim = graph.nodo(i).dim
            bloques[(i, j)] = slice(inicio, inicio + dim)
            inicio += dim
        return cls(tuple(ranuras), bloques)


@dataclass(frozen=True)
class Veredicto:
    radio: float
    estado: str

    @property
    def estable(self) -> bool:
        return self.estado == ESTABLE


@dataclass(frozen=True, eq=False)
class CondicionDistribuida:
    """Condición suficiente por nodo.

    ``sigmas`` solo incluye nodos de Ḡ con al menos 3 vecinos en Ḡ.
    """

    sigmas: dict[int, float]
    rho_bar: float
    estado: str

    @property
    def cumple(self) -> bool:
        return self.estado == CUMPLE


@dataclass(frozen=True, eq=False)
class StabilityReport:
    fp: FixedPointMessages
    constantes: Constantes
    supuesto_cumple: bool
    aciclico: bool
    indice: IndiceRanuras
    A_inf: np.ndarray
    indice_bar: IndiceRanuras
    A_bar: np.ndarray
    veredicto: Veredicto
    condicion: CondicionDistribuida
    B_inf: np.ndarray
    beta: float

    @property
    def eta(self) -> float:
        return self.constantes.eta

    @property
    def rho(self) -> float:
        return self.constantes.rho

    @property
    def alpha(self) -> float:
        return self.constantes.alpha


# ════════════════════════════════════════════════════════════
# 1. PUNTO FIJO Y CONSTANTES
# ════════════════════════════════════════════════════════════


def _cambio(actual: dict, previo: dict) -> float:
    cambio = 0.0
    for clave, matriz in actual.items():
        diferencia = np.linalg.norm(matriz - previo[clave], "fro")
        cambio = max(cambio, float(diferencia / (1.0 + np.linalg.norm(matriz, "fro"))))
    return cambio


def fixed_point(
    graph: MeasurementGraph,
    tol: float = TOL_PUNTO_FIJO,
    max_iters: Optional[int] = None,
) -> FixedPointMessages:
    """Itera la recursión de Q y R hasta que el cambio relativo < tol.

    Exige Ω_{i,j} ≻ 0 para todo par y, si el grafo tiene ciclos, el
    Supuesto 1. En grafos acíclicos la recursión termina exactamente.

    Raises:
        SupuestoNoCumplidoError:   "assumption violated".
        PuntoFijoNoAlcanzadoError: "fixed point not reached" con el residuo.
    """
    for i, j in graph.ranuras:
        try:
            compute_omega(graph, i, j)
        except OmegaNoDefinidaError as exc:
            raise SupuestoNoCumplidoError("assumption violated", exc.context) from exc
    if not graph.es_aciclico():
        supuesto = check_assumption1(graph)
        if not supuesto.cumple:
            raise SupuestoNoCumplidoError("assumption violated", {"eta": supuesto.eta})

    if max_iters is None:
        max_iters = max(MIN_ITERS_PUNTO_FIJO, FACTOR_ITERS_PUNTO_FIJO * (graph.diametro() + 1))

    Q_entrantes = {(j, i): graph.arista(i, j).informacion(i) for j, i in graph.ranuras}
    previo_var: Optional[dict] = None
    residuo = math.inf
    for k in range(1, max_iters + 1):
        Q_var, Q_factor, R_factor, Q_nodo = recursion_informacion(graph, Q_entrantes, k)
        if not graph.ranuras:
            residuo = 0.0
        elif previo_var is not None:
            residuo = max(_cambio(Q_var, previo_var), _cambio(Q_factor, Q_entrantes))
        Q_entrantes, previo_var = Q_factor, Q_var
        if residuo < tol:
            logger.debug("Punto fijo en %d iteraciones (residuo %.2e)", k, residuo)
            return FixedPointMessages(Q_var, Q_factor, R_factor, Q_nodo, residuo, k)

    raise PuntoFijoNoAlcanzadoError(
        "fixed point not reached", {"residuo": residuo, "iteraciones": max_iters}
    )


def constants(graph: MeasurementGraph, fp: FixedPointMessages) -> Constantes:
    """η, ρ y α del grafo.

    ρ = max ‖R_{i,j→j}^{-1/2}(∞) C_{i,j} Q_{i→i,j}^{-1}(∞) C_{i,j}ᵀ R_{i,j→j}^{-1/2}(∞)‖
    α = max ‖Q_{i→i,j}^{-1/2}(∞) Ω_{i,j} Q_{i→i,j}^{-1/2}(∞) − I‖
    """
    eta = check_assumption1(graph).eta
    rho = 0.0
    alpha = 0.0
    for i, j in graph.ranuras:
        C = graph.arista(i, j).coeficiente(i)
        Q_var = fp.Q_var[(i, j)]
        if C.shape[0]:
            interno = C @ resolver_spd(Q_var, C.T)
            rho = max(rho, norma_espectral(congruencia_normalizada(interno, fp.R_factor[(i, j)])))
        omega = compute_omega(graph, i, j)
        alpha = max(alpha, norma_espectral(congruencia_normalizada(omega, Q_var) - np.eye(Q_var.shape[0])))
    return Constantes(eta=float(eta), rho=float(rho), alpha=float(alpha))


def delta_congruente(Q_k: np.ndarray, Q_inf: np.ndarray) -> np.ndarray:
    """ΔQ(k) = Q^{-1/2}(∞) Q(k) Q^{-1/2}(∞) − I."""
    return congruencia_normalizada(Q_k, Q_inf) - np.eye(Q_inf.shape[0])


def cota_gamma(graph: MeasurementGraph, eta: float, R_factor_k1: dict[Ranura, np.ndarray]) -> float:
    """γ = max{(1−η)⁻¹, max ‖R_{i,j}^{-1/2} R_{i,j→j}(1) R_{i,j}^{-1/2}‖}.

    Args:
        R_factor_k1: R_{i,j→j}(1) por ranura (``derivados`` del MessageSet k=1).
    """
    gamma = 1.0 / (1.0 - eta) if eta < 1.0 else math.inf
    for (i, j), R_k1 in R_factor_k1.items():
        gamma = max(gamma, norma_espectral(congruencia_normalizada(R_k1, graph.arista(i, j).R_ij)))
    return float(gamma)


# ════════════════════════════════════════════════════════════
# 2. A(∞), Ā(∞) Y VEREDICTOS
# ════════════════════════════════════════════════════════════


def _acople(graph: MeasurementGraph, fp: FixedPointMessages, i: int, w: int) -> np.ndarray:
    """C_{i,w}ᵀ R_{w,i→i}⁻¹(∞) C_{w,i}."""
    arista = graph.arista(i, w)
    return informacion_cruzada(arista.coeficiente(i), fp.R_factor[(w, i)], arista.coeficiente(w))


def assemble_A_infinity(graph: MeasurementGraph, fp: FixedPointMessages) -> tuple[np.ndarray, IndiceRanuras]:
    """A(∞) sobre las ranuras en orden canónico.

    Bloque (fila i→(i,j), columna w→(w,i)), w ∈ N_i∖j:
      −Q_{i→i,j}^{-1/2}(∞) C_{i,w}ᵀ R_{w,i→i}⁻¹(∞) C_{w,i} Q_{w→w,i}^{-1/2}(∞)
    """
    indice = IndiceRanuras.desde(graph, graph.ranuras)
    A = np.zeros((indice.dim, indice.dim))
    raices = {r: raiz_inversa_spd(Q, {"ranura": r}) for r, Q in fp.Q_var.items()}
    for i, j in indice.ranuras:
        fila = indice.bloques[(i, j)]
        for w in graph.vecinos[i]:
            if w == j:
                continue
            columna = indice.bloques[(w, i)]
            A[fila, columna] = -raices[(i, j)] @ _acople(graph, fp, i, w) @ raices[(w, i)]
    return A, indice


def estructura_A(A: np.ndarray, indice: IndiceRanuras, rho: float, holgura: float = 1e-9) -> tuple[bool, bool]:
    """(bloques diagonales nulos, A_fila A_filaᵀ ⪯ ρI para cada fila de bloques)."""
    diagonal_nula = all(not np.any(A[b, b]) for b in indice.bloques.values())
    gram_ok = True
    for bloque in indice.bloques.values():
        fila = A[bloque, :]
        gram_ok &= norma_espectral(fila @ fila.T) <= rho + holgura * max(1.0, rho)
    return diagonal_nula, bool(gram_ok)


def stability_verdict(A: np.ndarray) -> Veredicto:
    """Radio espectral y veredicto (margen ``MARGEN_ESTABILIDAD``)."""
    radio = radio_espectral(A)
    if radio < 1.0 - MARGEN_ESTABILIDAD:
        estado = ESTABLE
    elif radio <= 1.0 + MARGEN_ESTABILIDAD:
        estado = MARGINAL
    else:
        estado = INESTABLE
    return Veredicto(radio=radio, estado=estado)


def prune_A(graph: MeasurementGraph, A: np.ndarray, indice: IndiceRanuras) -> tuple[np.ndarray, IndiceRanuras]:
    """Restringe A(∞) a las ranuras (i→(i,j)) con i y j en Ḡ.

    Un Ḡ de un solo nodo produce la matriz vacía.
    """
    nucleo = prune_leaves(graph)
    conservadas = [(i, j) for i, j in indice.ranuras if i in nucleo and j in nucleo]
    if not conservadas:
        return np.zeros((0, 0)), IndiceRanuras((), {})
    posiciones = np.concatenate(
        [np.arange(indice.bloques[r].start, indice.bloques[r].stop) for r in conservadas]
    )
    return A[np.ix_(posiciones, posiciones)], IndiceRanuras.desde(graph, conservadas)


def distributed_condition(
    graph: MeasurementGraph, A_bar: np.ndarray, indice_bar: IndiceRanuras, rho: float
) -> CondicionDistribuida:
    """σ_i = ‖Ā_i(∞)‖ para nodos de Ḡ con ≥ 3 vecinos en Ḡ; ρ̄ = max(ρ, max σ_i²).

    Ā_i(∞) toma las filas (i→(i,j)) y las columnas (j→(j,i)), j ∈ N̄_i.
    En un ciclo simple no hay tales nodos y ρ̄ = ρ.
    """
    if not indice_bar.ranuras:
        return CondicionDistribuida({}, float(rho), NO_APLICA)
    vecinos_bar: dict[int, list[int]] = {}
    for i, j in indice_bar.ranuras:
        vecinos_bar.setdefault(i, []).append(j)

    sigmas: dict[int, float] = {}
    for i in sorted(vecinos_bar):
        vecinos = vecinos_bar[i]
        if len(vecinos) < 3:
            continue
        filas = np.concatenate([np.arange(indice_bar.bloques[(i, j)].start, indice_bar.bloques[(i, j)].stop) for j in vecinos])
        columnas = np.concatenate([np.arange(indice_bar.bloques[(j, i)].start, indice_bar.bloques[(j, i)].stop) for j in vecinos])
        sigmas[i] = norma_espectral(A_bar[np.ix_(filas, columnas)])

    rho_bar = max([rho] + [s * s for s in sigmas.values()])
    estado = CUMPLE if rho_bar < 1.0 else NO_CUMPLE
    return CondicionDistribuida(sigmas, float(rho_bar), estado)


def assemble_B_infinity(
    fp: FixedPointMessages, A: np.ndarray, indice: IndiceRanuras
) -> tuple[np.ndarray, float]:
    """B(∞) = Q^{1/2}(∞) A(∞) Q^{-1/2}(∞) y su radio espectral β."""
    raiz = np.zeros_like(A)
    raiz_inv = np.zeros_like(A)
    for ranura, bloque in indice.bloques.items():
        raiz[bloque, bloque] = raiz_psd(fp.Q_var[ranura])
        raiz_inv[bloque, bloque] = raiz_inversa_spd(fp.Q_var[ranura])
    B = raiz @ A @ raiz_inv
    return B, radio_espectral(B)


def assemble_b_infinity(graph: MeasurementGraph, fp: FixedPointMessages, indice: IndiceRanuras) -> np.ndarray:
    """β_{i→i,j} = C_iᵀR_i⁻¹z_i + Σ_{w∈N_i∖j} C_{i,w}ᵀ R_{w,i→i}⁻¹(∞) z_{w,i}."""
    beta = np.zeros(indice.dim)
    for i, j in indice.ranuras:
        valor = graph.nodo(i).vector_propio()
        for w in graph.vecinos[i]:
            if w != j:
                arista = graph.arista(i, w)
                valor = valor + vector_informacion(arista.coeficiente(i), fp.R_factor[(w, i)], arista.z_ij)
        beta[indice.bloques[(i, j)]] = valor
    return beta


def estimacion_limite(graph: MeasurementGraph, fp: FixedPointMessages) -> dict[int, np.ndarray]:
    """x̂_i(∞) implícito en α(∞) = (I − B(∞))⁻¹ β.

    Con α_{w→w,i}(∞) se reconstruyen los mensajes α_{w,i→i}(∞) y
    x̂_i(∞) = Q_i(∞)⁻¹ (C_iᵀR_i⁻¹z_i + Σ_w α_{w,i→i}(∞)).

    Raises:
        MatrizSingularError: si I − B(∞) es singular.
    """
    indice = IndiceRanuras.desde(graph, graph.ranuras)
    A, _ = assemble_A_infinity(graph, fp)
    B, _ = assemble_B_infinity(fp, A, indice)
    beta = assemble_b_infinity(graph, fp, indice)
    sistema = np.eye(indice.dim) - B
    if indice.dim and 1.0 / np.linalg.cond(sistema) < RCOND_MINIMO:
        raise MatrizSingularError("I − B(∞) singular", {"dim": indice.dim})
    alpha_var = sla.solve(sistema, beta) if indice.dim else beta

    estimaciones: dict[int, np.ndarray] = {}
    for i in graph.ids:
        alpha_i = graph.nodo(i).vector_propio()
        for w in graph.vecinos[i]:
            arista = graph.arista(i, w)
            C_w = arista.coeficiente(w)
            a_w = alpha_var[indice.bloques[(w, i)]]
            z_factor = arista.z_ij - C_w @ resolver_spd(fp.Q_var[(w, i)], a_w)
            alpha_i = alpha_i + vector_informacion(arista.coeficiente(i), fp.R_factor[(w, i)], z_factor)
        estimaciones[i] = resolver_spd(fp.Q_nodo[i], alpha_i, {"nodo": i})
    return estimaciones


# ════════════════════════════════════════════════════════════
# 3. REPORTE
# ════════════════════════════════════════════════════════════


def analizar_estabilidad(
    graph: MeasurementGraph, tol: float = TOL_PUNTO_FIJO, max_iters: Optional[int] = None
) -> StabilityReport:
    """Punto fijo, constantes, A(∞)/Ā(∞), veredictos y B(∞)."""
    fp = fixed_point(graph, tol, max_iters)
    constantes = constants(graph, fp)
    A, indice = assemble_A_infinity(graph, fp)
    A_bar, indice_bar = prune_A(graph, A, indice)
    veredicto = stability_verdict(A_bar)
    condicion = distributed_condition(graph, A_bar, indice_bar, constantes.rho)
    B, beta = assemble_B_infinity(fp, A, indice)

    if condicion.cumple and not veredicto.estable:
        logger.warning("La condición distribuida se cumple pero Ā(∞) no es estable (radio %.6g)", veredicto.radio)
    logger.info(
        "Estabilidad: η=%.4g ρ=%.4g α=%.4g radio(Ā)=%.4g → %s; condición distribuida %s (ρ̄=%.4g)",
        constantes.eta, constantes.rho, constantes.alpha, veredicto.radio,
        veredicto.estado, condicion.estado, condicion.rho_bar,
    )
    return StabilityReport(
        fp=fp,
        constantes=constantes,
        supuesto_cumple=constantes.eta < 1.0,
        aciclico=graph.es_aciclico(),
        indice=indice,
        A_inf=A,
        indice_bar=indice_bar,
        A_bar=A_bar,
        veredicto=veredicto,
        condicion=condicion,
        B_inf=B,
        beta=beta,
    )
