"""
algebra.py — Utilidades de álgebra lineal con la política numérica única.

Responsabilidades:
  1. Simetrizar tras cada ensamblaje matemáticamente simétrico.
  2. Decidir si una matriz es SPD con tolerancia relativa
     (λ_min > TOL_SPD_RELATIVA · λ_max).
  3. Raíces simétricas PSD (``M^{1/2}``, ``M^{-1/2}``) por
     descomposición espectral.
  4. Resoluciones por Cholesky con control de condición recíproca.
  5. Órdenes PSD con holgura relativa (``A ⪯ B``) para las
     comprobaciones de monotonía y de cotas.
  6. Radio espectral y normas espectrales, tolerando matrices vacías.
"""

from __future__ import annotations

import logging
from typing import Any, Optional

import numpy as np
from scipy import linalg as sla

from config import RCOND_MINIMO, TOL_SPD_RELATIVA
from exceptions import MatrizSingularError

logger = logging.getLogger(__name__)


def simetrizar(matriz: np.ndarray) -> np.ndarray:
    """Devuelve ``(M + Mᵀ)/2``."""
    return 0.5 * (matriz + matriz.T)


def autovalores_simetricos(matriz: np.ndarray) -> np.ndarray:
    """Autovalores ascendentes de la parte simétrica de ``matriz``."""
    if matriz.size == 0:
        return np.zeros(0)
    return sla.eigh(simetrizar(matriz), eigvals_only=True)


def es_spd(matriz: np.ndarray, tol_relativa: float = TOL_SPD_RELATIVA) -> bool:
    """Indica si una matriz simétrica es definida positiva.

    Args:
        matriz:       Matriz cuadrada (se simetriza antes de evaluar).
        tol_relativa: Umbral relativo sobre el mayor autovalor.

    Returns:
        ``True`` si λ_min > tol_relativa · λ_max y λ_max > 0. Las
        matrices vacías (dimensión cero) se consideran SPD.
    """
    if matriz.size == 0:
        return True
    if not np.all(np.isfinite(matriz)):
        return False
    valores = autovalores_simetricos(matriz)
    return bool(valores[-1] > 0 and valores[0] > tol_relativa * valores[-1])


def condicion_reciproca(matriz: np.ndarray) -> float:
    """Estimación de la condición recíproca de una matriz simétrica."""
    if matriz.size == 0:
        return 1.0
    valores = np.abs(autovalores_simetricos(matriz))
    if valores[-1] == 0:
        return 0.0
    return float(valores.min() / valores.max())


def raiz_psd(matriz: np.ndarray) -> np.ndarray:
    """Raíz cuadrada simétrica PSD (autovalores negativos se truncan a 0)."""
    if matriz.size == 0:
        return np.zeros_like(matriz, dtype=float)
    valores, vectores = sla.eigh(simetrizar(matriz))
    valores = np.clip(valores, 0.0, None)
    return simetrizar((vectores * np.sqrt(valores)) @ vectores.T)


def raiz_inversa_spd(matriz: np.ndarray, contexto: Optional[dict[str, Any]] = None) -> np.ndarray:
    """Raíz cuadrada inversa simétrica ``M^{-1/2}`` de una matriz SPD.

    Raises:
        MatrizSingularError: si ``M`` no supera la tolerancia SPD.
    """
    if matriz.size == 0:
        return np.zeros_like(matriz, dtype=float)
    if not es_spd(matriz):
        raise MatrizSingularError("Raíz inversa de una matriz no SPD", contexto)
    valores, vectores = sla.eigh(simetrizar(matriz))
    return simetrizar((vectores / np.sqrt(valores)) @ vectores.T)


def factorizar_spd(matriz: np.ndarray, contexto: Optional[dict[str, Any]] = None):
    """Factoriza por Cholesky tras comprobar la condición recíproca.

    Returns:
        El par ``(c, lower)`` de ``scipy.linalg.cho_factor``.

    Raises:
        MatrizSingularError: si la condición recíproca es menor que
            ``RCOND_MINIMO`` o la factorización falla.
    """
    rcond = condicion_reciproca(matriz)
    if rcond < RCOND_MINIMO:
        ctx = dict(contexto or {})
        ctx["rcond"] = rcond
        raise MatrizSingularError("Matriz singular o mal condicionada", ctx)
    try:
        return sla.cho_factor(simetrizar(matriz), lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        ctx = dict(contexto or {})
        ctx["causa"] = str(exc)
        raise MatrizSingularError("Falló la factorización de Cholesky", ctx) from exc


def resolver_spd(
    matriz: np.ndarray,
    lado_derecho: np.ndarray,
    contexto: Optional[dict[str, Any]] = None,
) -> np.ndarray:
    """Resuelve ``M x = b`` con ``M`` SPD."""
    if matriz.size == 0:
        return np.zeros_like(lado_derecho, dtype=float)
    return sla.cho_solve(factorizar_spd(matriz, contexto), lado_derecho)


def inversa_spd(matriz: np.ndarray, contexto: Optional[dict[str, Any]] = None) -> np.ndarray:
    """Inversa explícita de una matriz SPD (solo donde la fórmula la usa como dato)."""
    if matriz.size == 0:
        return np.zeros_like(matriz, dtype=float)
    identidad = np.eye(matriz.shape[0])
    return simetrizar(resolver_spd(matriz, identidad, contexto))


def informacion(coeficiente: np.ndarray, covarianza: np.ndarray) -> np.ndarray:
    """``Cᵀ R⁻¹ C``; matriz nula cuando ``C`` no tiene filas."""
    columnas = coeficiente.shape[1]
    if coeficiente.shape[0] == 0:
        return np.zeros((columnas, columnas))
    return simetrizar(coeficiente.T @ resolver_spd(covarianza, coeficiente))


def informacion_cruzada(
    coef_fila: np.ndarray, covarianza: np.ndarray, coef_columna: np.ndarray
) -> np.ndarray:
    """``C_aᵀ R⁻¹ C_b`` (bloque fuera de la diagonal)."""
    if coef_fila.shape[0] == 0:
        return np.zeros((coef_fila.shape[1], coef_columna.shape[1]))
    return coef_fila.T @ resolver_spd(covarianza, coef_columna)


def vector_informacion(
    coeficiente: np.ndarray, covarianza: np.ndarray, medicion: np.ndarray
) -> np.ndarray:
    """``Cᵀ R⁻¹ z``; vector nulo cuando ``C`` no tiene filas."""
    if coeficiente.shape[0] == 0:
        return np.zeros(coeficiente.shape[1])
    return coeficiente.T @ resolver_spd(covarianza, medicion)


def norma_espectral(matriz: np.ndarray) -> float:
    """Mayor valor singular; 0 para matrices vacías."""
    if matriz.size == 0:
        return 0.0
    return float(np.linalg.norm(matriz, ord=2))


def radio_espectral(matriz: np.ndarray) -> float:
    """Mayor módulo de autovalor; 0 para matrices vacías."""
    if matriz.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(matriz))))


def autovalor_max_relativo(numerador: np.ndarray, base: np.ndarray) -> float:
    """Mayor autovalor de ``B^{-1/2} A B^{-1/2}`` (problema generalizado).

    Args:
        numerador: Matriz simétrica ``A``.
        base:      Matriz SPD ``B``.
    """
    if numerador.size == 0:
        return 0.0
    valores = sla.eigh(simetrizar(numerador), simetrizar(base), eigvals_only=True)
    return float(valores[-1])


def congruencia_normalizada(matriz: np.ndarray, referencia: np.ndarray) -> np.ndarray:
    """``R^{-1/2} M R^{-1/2}`` con ``R`` SPD."""
    raiz = raiz_inversa_spd(referencia)
    return simetrizar(raiz @ matriz @ raiz)


def minimo_autovalor(matriz: np.ndarray) -> float:
    """Menor autovalor de la parte simétrica (``+inf`` si es vacía)."""
    if matriz.size == 0:
        return float("inf")
    return float(autovalores_simetricos(matriz)[0])


def precede_psd(menor: np.ndarray, mayor: np.ndarray, holgura: float) -> bool:
    """Comprueba ``menor ⪯ mayor`` con holgura relativa.

    Se acepta si λ_min(mayor − menor) ≥ −holgura · max(1, ‖mayor‖, ‖menor‖).
    """
    escala = max(1.0, norma_espectral(mayor), norma_espectral(menor))
    return minimo_autovalor(mayor - menor) >= -holgura * escala
