"""
precision.py — Precisión de las salidas del motor frente al oráculo.

Responsabilidades:
  1. Constantes (α̃_i, ρ̃_i) del grafo reducido G̃_i.
  2. Cota de información en la profundidad libre de ciclos:
       0 ⪯ Q_i(k_q) − Q_i^ML ⪯ α̃_i ρ̃_i^{k_q−1} Q_i^ML,   k_q = max(d_i, 1)
     y su versión en el límite (cota inferior −c/(1+c), c = αρ^{k_q−1}).
  3. κ y la cota del error de estimación en k_x = d_i + 1:
       Δx_iᵀ Q_i(1) Δx_i ≤ κ η^{d_i}
     más la cota asintótica sobre ‖Δx_i(∞)‖² cuando ρ^{d−1} y β^{d−1}
     son pequeños.
  4. Validación por capas: motor − oráculo, solución truncada − completa
     y fórmula de producto deben coincidir.
  5. ``analizar_precision``: un ``AccuracyReport`` por nodo.

Las violaciones de cotas se registran en el reporte y en el log, nunca
se lanzan.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from algebra import informacion, norma_espectral, simetrizar
from config import (
    HOLGURA_ASINTOTICA,
    HOLGURA_PSD,
    MAX_ITERS_DEFECTO,
    TOL_CONSISTENCIA,
    TOL_EJECUCION_DEFECTO,
    UMBRAL_PEQUENEZ_ASINTOTICA,
)
from convergencia import StabilityReport, analizar_estabilidad, constants, fixed_point
from exceptions import EstimadorError, MatrizSingularError
from mensajes import Traza, run
from modelo_grafo import (
    MeasurementGraph,
    Profundidad,
    build_line_graph,
    build_reduced_graph,
    check_assumption1,
    cycle_free_depth,
    distancias,
)
from oraculo import (
    SolucionML,
    assemble_tridiagonal,
    error_product_formula,
    resolver_linea,
    solve_ml,
    solve_truncated,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegistroQ:
    """Comparación de Q_i con Q_i^ML (autovalores relativos a Q_i^ML)."""

    k: int
    cota: Optional[float]
    gap_min: Optional[float]
    gap_max: Optional[float]
    cota_inf_inferior: Optional[float]
    gap_inf_min: Optional[float]
    gap_inf_max: Optional[float]
    cumple_d: Optional[bool]
    cumple_inf: Optional[bool]
    nota: str = ""


@dataclass(frozen=True)
class RegistroX:
    k: int
    kappa: float
    eta: float
    cota: float
    error: Optional[float]
    cumple: Optional[bool]
    asintotica_aplica: bool
    error_inf: Optional[float]
    cota_inf: Optional[float]
    cumple_inf: Optional[bool]


@dataclass(frozen=True, eq=False)
class RegistroCapas:
    """Tres cálculos del error en k = d_i + 1."""

    aplica: bool
    motor: Optional[np.ndarray] = None
    truncado: Optional[np.ndarray] = None
    producto: Optional[np.ndarray] = None
    discrepancia: Optional[float] = None
    acuerdo: Optional[bool] = None


@dataclass(frozen=True)
class AccuracyReport:
    nodo: int
    d: Profundidad
    alpha_tilde: Optional[float]
    rho_tilde: Optional[float]
    q: RegistroQ
    x: RegistroX
    capas: RegistroCapas

    @property
    def q_bound_at_d(self) -> Optional[float]:
        return self.q.cota

    @property
    def x_bound(self) -> float:
        return self.x.cota

    @property
    def kappa(self) -> float:
        return self.x.kappa


def _indices(graph: MeasurementGraph, i: int, d: Profundidad) -> tuple[int, int]:
    """(k_q, k_x): iteraciones donde se evalúan las cotas."""
    if math.isinf(d):
        exacto = max(distancias(graph, i).values()) + 1
        return exacto, exacto
    return max(int(d), 1), int(d) + 1


def _autovalores_relativos(matriz: np.ndarray, base: np.ndarray) -> tuple[float, float]:
    valores = sla.eigh(simetrizar(matriz), simetrizar(base), eigvals_only=True)
    return float(valores[0]), float(valores[-1])


def _dentro(valor: float, cota: float) -> bool:
    return valor <= cota + HOLGURA_PSD * max(1.0, abs(cota))


def _eta_directo(graph: MeasurementGraph) -> float:
    try:
        return check_assumption1(graph).eta
    except EstimadorError:
        return math.nan


# ════════════════════════════════════════════════════════════
# 1. CONSTANTES DEL GRAFO REDUCIDO Y κ
# ════════════════════════════════════════════════════════════


def reduced_constants(graph: MeasurementGraph, i: int) -> tuple[float, float]:
    """(α̃_i, ρ̃_i): α y ρ del grafo reducido G̃_i.

    En grafos acíclicos son los del propio grafo.

    Raises:
        SupuestoNoCumplidoError: si G̃_i tiene algún Ω no definido positivo.
        PuntoFijoNoAlcanzadoError: propagado desde ``fixed_point``.
    """
    if math.isinf(cycle_free_depth(graph, i)):
        base = graph
    else:
        base = build_reduced_graph(graph, i).grafo
    fp = fixed_point(base)
    resultado = constants(base, fp)
    logger.debug("Constantes reducidas de %d: α̃=%.6g ρ̃=%.6g", i, resultado.alpha, resultado.rho)
    return resultado.alpha, resultado.rho


def kappa(graph: MeasurementGraph, i: int, oraculo: SolucionML) -> float:
    """κ = Σ_{(t,j)} (x_j^ML)ᵀ C_{j,t}ᵀ R_{t,j}⁻¹ C_{j,t} x_j^ML.

    t a distancia d_i del centro y j vecino de t a distancia d_i + 1.
    """
    d = cycle_free_depth(graph, i)
    if math.isinf(d):
        return 0.0
    dist = distancias(graph, i)
    total = 0.0
    for t in graph.ids:
        if dist[t] != d:
            continue
        for j in graph.vecinos[t]:
            if dist[j] == d + 1:
                x_j = oraculo.x[j]
                total += float(x_j @ informacion(graph.arista(t, j).coeficiente(j), graph.arista(t, j).R_ij) @ x_j)
    return total


# ════════════════════════════════════════════════════════════
# 2. COTAS
# ════════════════════════════════════════════════════════════


def q_accuracy(
    graph: MeasurementGraph,
    i: int,
    traza: Traza,
    oraculo: SolucionML,
    estabilidad: Optional[StabilityReport] = None,
    reducidas: Optional[tuple[float, float]] = None,
) -> RegistroQ:
    """Compara Q_i(k_q) y Q_i(∞) con Q_i^ML.

    Args:
        reducidas: (α̃_i, ρ̃_i); ``None`` si no están disponibles.
    """
    d = cycle_free_depth(graph, i)
    k_q, _ = _indices(graph, i, d)
    Q_ml = oraculo.Q[i]
    notas = []

    cota = None
    if math.isinf(d):
        cota = 0.0
    elif reducidas is not None:
        cota = reducidas[0] * reducidas[1] ** (k_q - 1)
    else:
        notas.append("reduced constants unavailable")

    gap_min = gap_max = None
    if traza.iteraciones >= k_q and traza.en(k_q).creencias[i] is not None:
        gap_min, gap_max = _autovalores_relativos(traza.en(k_q).creencias[i].Q - Q_ml, Q_ml)
    else:
        notas.append(f"no belief at k={k_q}")

    cumple_d = None
    if gap_min is not None and cota is not None:
        cumple_d = gap_min >= -HOLGURA_PSD and _dentro(gap_max, cota)

    cota_inferior = gap_inf_min = gap_inf_max = cumple_inf = None
    if estabilidad is not None:
        c = 0.0 if math.isinf(d) else estabilidad.alpha * estabilidad.rho ** (k_q - 1)
        cota_inferior = c / (1.0 + c)
        gap_inf_min, gap_inf_max = _autovalores_relativos(estabilidad.fp.Q_nodo[i] - Q_ml, Q_ml)
        if cota is not None:
            cumple_inf = gap_inf_min >= -cota_inferior - HOLGURA_PSD and _dentro(gap_inf_max, cota)

    if cumple_d is False or cumple_inf is False:
        logger.warning("Cota de información violada en el nodo %d (k=%d)", i, k_q)
    return RegistroQ(
        k=k_q, cota=cota, gap_min=gap_min, gap_max=gap_max,
        cota_inf_inferior=cota_inferior, gap_inf_min=gap_inf_min, gap_inf_max=gap_inf_max,
        cumple_d=cumple_d, cumple_inf=cumple_inf, nota="; ".join(notas),
    )


def x_accuracy(
    graph: MeasurementGraph,
    i: int,
    traza: Traza,
    oraculo: SolucionML,
    eta: float,
    estabilidad: Optional[StabilityReport] = None,
) -> RegistroX:
    """Cota del error de estimación en k_x = d_i + 1 y, si aplica, en el límite.

    La cota asintótica se comprueba solo si Ā(∞) es estable y
    ρ^{d−1}, β^{d−1} < ``UMBRAL_PEQUENEZ_ASINTOTICA``; x̂_i(∞) es el último
    estado de la traza convergida.
    """
    d = cycle_free_depth(graph, i)
    _, k_x = _indices(graph, i, d)
    k_val = kappa(graph, i, oraculo)
    cota = 0.0 if math.isinf(d) else k_val * eta ** int(d)

    error = cumple = None
    if traza.iteraciones >= k_x and traza.iteraciones >= 1:
        creencia = traza.en(k_x).creencias[i]
        Q_1 = traza.en(1).creencias[i]
        if creencia is not None and Q_1 is not None:
            delta = creencia.x_hat - oraculo.x[i]
            error = float(delta @ Q_1.Q @ delta)
            cumple = error <= cota * (1.0 + 1e-9) + 1e-12

    aplica = False
    error_inf = cota_inf = cumple_inf = None
    if estabilidad is not None and estabilidad.veredicto.estable and not math.isinf(d):
        exponente = int(d) - 1
        aplica = (
            estabilidad.rho ** exponente < UMBRAL_PEQUENEZ_ASINTOTICA
            and estabilidad.beta ** exponente < UMBRAL_PEQUENEZ_ASINTOTICA
        )
        final = traza.final
        Q_1 = traza.en(1).creencias[i] if traza.iteraciones else None
        if final is not None and final.creencias[i] is not None and Q_1 is not None:
            delta_inf = final.creencias[i].x_hat - oraculo.x[i]
            error_inf = float(delta_inf @ delta_inf)
            cota_inf = (1.0 + HOLGURA_ASINTOTICA) * cota * norma_espectral(Q_1.Sigma)
            if aplica:
                cumple_inf = error_inf <= cota_inf + 1e-12

    if cumple is False or cumple_inf is False:
        logger.warning("Cota del error de estimación violada en el nodo %d", i)
    return RegistroX(
        k=k_x, kappa=k_val, eta=eta, cota=cota, error=error, cumple=cumple,
        asintotica_aplica=aplica, error_inf=error_inf, cota_inf=cota_inf, cumple_inf=cumple_inf,
    )


def layered_validation(graph: MeasurementGraph, i: int, traza: Traza, oraculo: SolucionML) -> RegistroCapas:
    """Compara los tres cálculos de Δx_i(d_i + 1).

    (a) x̂_i(d_i+1) − x_i^ML del motor; (b) solución truncada menos la
    completa del grafo de capas; (c) la fórmula de producto.
    """
    d = cycle_free_depth(graph, i)
    if math.isinf(d):
        return RegistroCapas(aplica=False)
    k = int(d) + 1
    if traza.iteraciones < k or traza.en(k).creencias[i] is None:
        return RegistroCapas(aplica=False)

    linea = build_line_graph(graph, i)
    sistema = assemble_tridiagonal(linea)
    completa = resolver_linea(sistema)
    motor = traza.en(k).creencias[i].x_hat - oraculo.x[i]
    try:
        truncado = solve_truncated(linea) - completa[0]
        producto = error_product_formula(sistema, completa[-1])
    except MatrizSingularError as exc:
        logger.warning("Validación por capas no disponible en %d: %s", i, exc)
        return RegistroCapas(aplica=False)

    discrepancia = float(max(
        np.linalg.norm(motor - truncado),
        np.linalg.norm(motor - producto),
        np.linalg.norm(truncado - producto),
    ))
    acuerdo = discrepancia <= TOL_CONSISTENCIA * (1.0 + float(np.linalg.norm(oraculo.x[i])))
    if not acuerdo:
        logger.warning("Los tres cálculos del error no coinciden en %d (%.3e)", i, discrepancia)
    return RegistroCapas(True, motor, truncado, producto, discrepancia, acuerdo)


# ════════════════════════════════════════════════════════════
# 3. REPORTE POR NODO
# ════════════════════════════════════════════════════════════


def analizar_precision(
    graph: MeasurementGraph,
    estabilidad: Optional[StabilityReport] = None,
    traza: Optional[Traza] = None,
    oraculo: Optional[SolucionML] = None,
    hilos: int = 1,
) -> list[AccuracyReport]:
    """Un ``AccuracyReport`` por nodo.

    Si no se entrega la traza se ejecuta el motor con al menos
    max(d_i) + 2 iteraciones y tolerancia por defecto.
    """
    oraculo = oraculo or solve_ml(graph)
    if estabilidad is None:
        try:
            estabilidad = analizar_estabilidad(graph)
        except EstimadorError as exc:
            logger.warning("Análisis de estabilidad no disponible: %s", exc)
    profundidades = {i: cycle_free_depth(graph, i) for i in graph.ids}
    necesarias = max(_indices(graph, i, d)[1] for i, d in profundidades.items()) + 1
    if traza is None or traza.iteraciones < necesarias:
        traza = run(
            graph,
            max_iters=max(MAX_ITERS_DEFECTO, necesarias),
            tol=TOL_EJECUCION_DEFECTO,
            hilos=hilos,
            min_iters=necesarias,
        )

    eta = estabilidad.eta if estabilidad is not None else _eta_directo(graph)
    reportes: list[AccuracyReport] = []
    for i in graph.ids:
        reducidas = None
        try:
            reducidas = reduced_constants(graph, i)
        except EstimadorError as exc:
            logger.warning("Constantes reducidas no disponibles para %d: %s", i, exc)
        alpha_t, rho_t = reducidas if reducidas is not None else (None, None)
        reportes.append(AccuracyReport(
            nodo=i,
            d=profundidades[i],
            alpha_tilde=alpha_t,
            rho_tilde=rho_t,
            q=q_accuracy(graph, i, traza, oraculo, estabilidad, reducidas),
            x=x_accuracy(graph, i, traza, oraculo, eta, estabilidad),
            capas=layered_validation(graph, i, traza, oraculo),
        ))
    logger.info("Precisión analizada para %d nodos", len(reportes))
    return reportes
