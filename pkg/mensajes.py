"""
mensajes.py — Motor de mensajes: propagación de creencias gaussiana síncrona.

Responsabilidades:
  1. ``init_messages``: mensajes factor→variable en k=0 (solo la
     medición conjunta, el vecino fijo en 0).
  2. ``step``: una iteración síncrona completa:
       Q_i(k) = C_iᵀR_i⁻¹C_i + Σ_j Q_{i,j→i}(k−1)        (ídem α_i)
       Q_{i→i,j}(k) = Q_i(k) − Q_{i,j→i}(k−1)            (ídem α)
       R_{i,j→j}(k) = R_ij + C_ij Q_{i→i,j}⁻¹ C_ijᵀ
       z_{i,j→j}(k) = z_ij − C_ij Q_{i→i,j}⁻¹ α_{i→i,j}
       Q_{i,j→j}(k) = C_jiᵀ R_{i,j→j}⁻¹ C_ji,  α_{i,j→j}(k) = C_jiᵀ R_{i,j→j}⁻¹ z_{i,j→j}
  3. ``run``: itera hasta convergencia, tope de iteraciones o divergencia.
  4. ``recursion_informacion``: la parte de la iteración que no depende
     de las mediciones (Q y R), usada por el punto fijo.

Claves de los mensajes:
  var_a_factor[(i, j)]  → mensaje i → (i,j)
  factor_a_var[(a, b)]  → mensaje del factor {a,b} hacia b
  derivados[(a, b)]     → (z_{a,b→b}, R_{a,b→b})

Cada iteración es una función pura de la anterior; con ``hilos > 1`` los
nodos y las ranuras se reparten en un ``ThreadPoolExecutor`` y los
resultados se ensamblan en orden canónico.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, TypeVar

import numpy as np
from scipy import linalg as sla

from algebra import (
    es_spd,
    factorizar_spd,
    informacion,
    inversa_spd,
    simetrizar,
    vector_informacion,
)
from config import UMBRAL_DIVERGENCIA
from exceptions import ConfiguracionError, MatrizSingularError
from modelo_grafo import MeasurementGraph

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")

Ranura = tuple[int, int]


@dataclass(frozen=True, eq=False)
class DirectedMessage:
    """Parámetros de información (α, Q) de un mensaje dirigido."""

    alpha: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class MensajeDerivado:
    """Cantidades del factor hacia el destino: (z_{i,j→j}, R_{i,j→j})."""

    z: Optional[np.ndarray]
    R: np.ndarray


@dataclass(frozen=True, eq=False)
class MessageSet:
    iteracion: int
    var_a_factor: dict[Ranura, DirectedMessage] = field(default_factory=dict)
    factor_a_var: dict[Ranura, DirectedMessage] = field(default_factory=dict)
    derivados: dict[Ranura, MensajeDerivado] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Creencia:
    """Creencia de un nodo: x̂_i = Q_i⁻¹α_i, Σ_i = Q_i⁻¹."""

    alpha: np.ndarray
    Q: np.ndarray
    x_hat: np.ndarray
    Sigma: np.ndarray


@dataclass(frozen=True, eq=False)
class BeliefState:
    """Creencias de todos los nodos en la iteración k.

    ``creencias[i]`` es ``None`` cuando Q_i(k) no es invertible.
    """

    iteracion: int
    creencias: dict[int, Optional[Creencia]]

    def x_hat(self, i: int) -> Optional[np.ndarray]:
        creencia = self.creencias.get(i)
        return None if creencia is None else creencia.x_hat

    def norma_maxima(self) -> float:
        normas = [np.linalg.norm(c.x_hat) for c in self.creencias.values() if c is not None]
        return float(max(normas)) if normas else 0.0


class TerminationReason(str, Enum):
    CONVERGIDO = "converged"
    TOPE_ITERACIONES = "iteration cap"
    DIVERGENCIA = "diverged"


@dataclass(frozen=True, eq=False)
class Traza:
    """Resultado de ``run``.

    Attributes:
        estados:  BeliefState de k = 1..K.
        razon:    Motivo de parada.
        mensajes: MessageSet de k = 0..K si se pidió guardarlos.
    """

    estados: list[BeliefState]
    razon: TerminationReason
    mensajes: list[MessageSet] = field(default_factory=list)

    @property
    def iteraciones(self) -> int:
        return len(self.estados)

    @property
    def final(self) -> Optional[BeliefState]:
        return self.estados[-1] if self.estados else None

    def en(self, k: int) -> BeliefState:
        """Estado de la iteración k (k ≥ 1)."""
        return self.estados[k - 1]


# ════════════════════════════════════════════════════════════
# UTILIDADES
# ════════════════════════════════════════════════════════════


def _mapear(funcion: Callable[[T], U], elementos: Iterable[T], hilos: int) -> list[U]:
    """``map`` ordenado, secuencial o con hilos."""
    elementos = list(elementos)
    if hilos <= 1 or len(elementos) < 2:
        return [funcion(e) for e in elementos]
    with ThreadPoolExecutor(max_workers=hilos) as executor:
        return list(executor.map(funcion, elementos))


def _saliente(
    graph: MeasurementGraph,
    i: int,
    j: int,
    Q_var: np.ndarray,
    alpha_var: Optional[np.ndarray],
    k: int,
) -> tuple[DirectedMessage, MensajeDerivado]:
    """Mensaje del factor {i,j} hacia j a partir del mensaje i → (i,j)."""
    arista = graph.arista(i, j)
    C_i = arista.coeficiente(i)
    C_j = arista.coeficiente(j)
    try:
        factor = factorizar_spd(Q_var, {"i": i, "j": j, "k": k})
    except MatrizSingularError as exc:
        raise MatrizSingularError(
            "singular outgoing information", {"i": i, "j": j, "k": k, **exc.context}
        ) from exc
    if C_i.shape[0] == 0:
        R_sal = arista.R_ij
    else:
        R_sal = simetrizar(arista.R_ij + C_i @ sla.cho_solve(factor, C_i.T))
    z_sal = None
    alpha_sal = None
    if alpha_var is not None:
        z_sal = arista.z_ij - C_i @ sla.cho_solve(factor, alpha_var)
        alpha_sal = vector_informacion(C_j, R_sal, z_sal)
    Q_sal = informacion(C_j, R_sal)
    return DirectedMessage(alpha_sal, Q_sal), MensajeDerivado(z_sal, R_sal)


def _creencia(i: int, alpha: np.ndarray, Q: np.ndarray, k: int) -> Optional[Creencia]:
    if not es_spd(Q):
        logger.debug("belief singular: nodo %d en k=%d", i, k)
        return None
    try:
        Sigma = inversa_spd(Q, {"i": i, "k": k})
    except MatrizSingularError:
        logger.debug("belief singular: nodo %d en k=%d", i, k)
        return None
    return Creencia(alpha=alpha, Q=Q, x_hat=Sigma @ alpha, Sigma=Sigma)


# ════════════════════════════════════════════════════════════
# OPERACIONES
# ════════════════════════════════════════════════════════════


def init_messages(graph: MeasurementGraph) -> MessageSet:
    """Mensajes en k=0: (C_{i,j}ᵀR⁻¹z_{i,j}, C_{i,j}ᵀR⁻¹C_{i,j}) hacia cada i.

    No hay mensajes variable→factor en k=0.
    """
    factor_a_var: dict[Ranura, DirectedMessage] = {}
    for j, i in graph.ranuras:
        arista = graph.arista(i, j)
        factor_a_var[(j, i)] = DirectedMessage(arista.vector(i), arista.informacion(i))
    return MessageSet(iteracion=0, factor_a_var=factor_a_var)


def _agregar(graph: MeasurementGraph, entrantes: dict[Ranura, DirectedMessage], i: int, con_alpha: bool):
    nodo = graph.nodo(i)
    Q = nodo.informacion_propia()
    alpha = nodo.vector_propio() if con_alpha else None
    for j in graph.vecinos[i]:
        mensaje = entrantes[(j, i)]
        Q = Q + mensaje.Q
        if con_alpha:
            alpha = alpha + mensaje.alpha
    return alpha, simetrizar(Q)


def step(graph: MeasurementGraph, msgs: MessageSet, hilos: int = 1) -> tuple[MessageSet, BeliefState]:
    """Una iteración síncrona: de los mensajes de k−1 a los de k.

    Returns:
        ``(MessageSet(k), BeliefState(k))``.

    Raises:
        MatrizSingularError: "singular outgoing information" con (i, j, k)
            si algún Q_{i→i,j}(k) no es invertible.
    """
    k = msgs.iteracion + 1
    entrantes = msgs.factor_a_var

    agregados = dict(zip(graph.ids, _mapear(lambda i: _agregar(graph, entrantes, i, True), graph.ids, hilos)))
    creencias = {i: _creencia(i, alpha, Q, k) for i, (alpha, Q) in agregados.items()}

    var_a_factor: dict[Ranura, DirectedMessage] = {}
    for i, j in graph.ranuras:
        alpha_i, Q_i = agregados[i]
        entrante = entrantes[(j, i)]
        var_a_factor[(i, j)] = DirectedMessage(alpha_i - entrante.alpha, simetrizar(Q_i - entrante.Q))

    def _hacia_factor(ranura: Ranura):
        i, j = ranura
        mensaje = var_a_factor[ranura]
        return _saliente(graph, i, j, mensaje.Q, mensaje.alpha, k)

    salientes = _mapear(_hacia_factor, graph.ranuras, hilos)
    factor_a_var = {ranura: m for ranura, (m, _) in zip(graph.ranuras, salientes)}
    derivados = {ranura: d for ranura, (_, d) in zip(graph.ranuras, salientes)}

    singulares = [i for i, c in creencias.items() if c is None]
    if singulares:
        logger.debug("k=%d: %d creencias singulares", k, len(singulares))
    return (
        MessageSet(k, var_a_factor, factor_a_var, derivados),
        BeliefState(k, creencias),
    )


def recursion_informacion(
    graph: MeasurementGraph, Q_entrantes: dict[Ranura, np.ndarray], k: int
) -> tuple[dict[Ranura, np.ndarray], dict[Ranura, np.ndarray], dict[Ranura, np.ndarray], dict[int, np.ndarray]]:
    """Parte de ``step`` independiente de las mediciones.

    Args:
        Q_entrantes: Q_{a,b→b}(k−1) por ranura (a, b).
        k:           Iteración que se calcula.

    Returns:
        ``(Q_var, Q_factor, R_factor, Q_nodo)`` de la iteración k.
    """
    mensajes = {r: DirectedMessage(None, Q) for r, Q in Q_entrantes.items()}
    Q_nodo = {i: _agregar(graph, mensajes, i, False)[1] for i in graph.ids}
    Q_var: dict[Ranura, np.ndarray] = {}
    Q_factor: dict[Ranura, np.ndarray] = {}
    R_factor: dict[Ranura, np.ndarray] = {}
    for i, j in graph.ranuras:
        Q_var[(i, j)] = simetrizar(Q_nodo[i] - Q_entrantes[(j, i)])
        mensaje, derivado = _saliente(graph, i, j, Q_var[(i, j)], None, k)
        Q_factor[(i, j)] = mensaje.Q
        R_factor[(i, j)] = derivado.R
    return Q_var, Q_factor, R_factor, Q_nodo


def _cambio_relativo(actual: BeliefState, previo: BeliefState) -> Optional[tuple[float, float]]:
    """Mayor cambio relativo en x̂ y en Q; ``None`` si falta alguna creencia."""
    cambio_x = 0.0
    cambio_Q = 0.0
    for i, creencia in actual.creencias.items():
        anterior = previo.creencias.get(i)
        if creencia is None or anterior is None:
            return None
        cambio_x = max(
            cambio_x,
            float(np.linalg.norm(creencia.x_hat - anterior.x_hat) / (1.0 + np.linalg.norm(creencia.x_hat))),
        )
        cambio_Q = max(
            cambio_Q,
            float(np.linalg.norm(creencia.Q - anterior.Q, "fro") / (1.0 + np.linalg.norm(creencia.Q, "fro"))),
        )
    return cambio_x, cambio_Q


def _divergente(estado: BeliefState) -> bool:
    for creencia in estado.creencias.values():
        if creencia is None:
            continue
        if not np.all(np.isfinite(creencia.x_hat)) or np.linalg.norm(creencia.x_hat) > UMBRAL_DIVERGENCIA:
            return True
    return False


def run(
    graph: MeasurementGraph,
    max_iters: int,
    tol: float,
    hilos: int = 1,
    min_iters: int = 1,
    guardar_mensajes: bool = False,
) -> Traza:
    """Itera ``step`` hasta converger, divergir o agotar ``max_iters``.

    Converge cuando, para todo nodo,
    ‖x̂_i(k)−x̂_i(k−1)‖/(1+‖x̂_i(k)‖) < tol y
    ‖Q_i(k)−Q_i(k−1)‖_F/(1+‖Q_i(k)‖_F) < tol, con k ≥ min_iters.
    Diverge cuando algún ‖x̂_i(k)‖ supera ``UMBRAL_DIVERGENCIA``.

    Args:
        graph:            Grafo válido.
        max_iters:        Tope (≥ 1).
        tol:              Tolerancia relativa (> 0).
        hilos:            Trabajadores por iteración.
        min_iters:        Iteraciones mínimas antes de declarar convergencia.
        guardar_mensajes: Conserva los MessageSet de cada iteración.

    Raises:
        ConfiguracionError: si max_iters < 1 o tol ≤ 0.
        MatrizSingularError: propagado desde ``step``.
    """
    if max_iters < 1:
        raise ConfiguracionError("max_iters debe ser ≥ 1", {"max_iters": max_iters})
    if not tol > 0:
        raise ConfiguracionError("tol debe ser > 0", {"tol": tol})

    mensajes = init_messages(graph)
    historial = [mensajes] if guardar_mensajes else []
    estados: list[BeliefState] = []
    razon = TerminationReason.TOPE_ITERACIONES

    for _ in range(max_iters):
        mensajes, estado = step(graph, mensajes, hilos)
        estados.append(estado)
        if guardar_mensajes:
            historial.append(mensajes)

        if _divergente(estado):
            razon = TerminationReason.DIVERGENCIA
            logger.warning("Divergencia en k=%d: ‖x̂‖ = %.3e", estado.iteracion, estado.norma_maxima())
            break
        if len(estados) >= 2 and estado.iteracion >= min_iters:
            cambio = _cambio_relativo(estado, estados[-2])
            if cambio is not None and cambio[0] < tol and cambio[1] < tol:
                razon = TerminationReason.CONVERGIDO
                break

    logger.info("Motor detenido en k=%d (%s)", len(estados), razon.value)
    return Traza(estados=estados, razon=razon, mensajes=historial)
