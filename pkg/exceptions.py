"""
exceptions.py — Excepciones personalizadas del estimador GBP.

Jerarquía:
  EstimadorError (base)
  ├── ConfiguracionError          → Parámetros de ejecución fuera de rango.
  ├── FormatoGrafoError           → Documento de grafo mal formado.
  ├── GrafoInvalidoError          → El grafo no supera ``validate``.
  ├── OmegaNoDefinidaError        → Ω_{i,j} no es definida positiva.
  ├── SupuestoNoCumplidoError     → Se exige el Supuesto 1 y no se cumple.
  ├── MatrizSingularError         → Un bloque que debe invertirse es singular.
  ├── SistemaNoObservableError    → La matriz de información global no es SPD.
  ├── PuntoFijoNoAlcanzadoError   → La recursión de información no se estabilizó.
  ├── GrafoReducidoError          → Grafo reducido / de capas no definido.
  ├── EscenarioError              → Faltan parámetros del generador.
  └── ArtefactoIncompatibleError  → Huellas de artefactos que no coinciden.

Cada excepción lleva un mensaje descriptivo y, opcionalmente, el
contexto (nodo, arista, iteración, ruta del archivo) para facilitar la
depuración en los logs.
"""

from __future__ import annotations

from typing import Any, Optional, Sequence


class EstimadorError(Exception):
    """Excepción base para todos los errores del estimador.

    Args:
        message: Descripción legible del error.
        context: Diccionario opcional con datos de depuración
                 (nodo, arista, iteración, archivo, etc.).
    """

    def __init__(self, message: str, context: Optional[dict[str, Any]] = None) -> None:
        self.context = context or {}
        super().__init__(message)

    def __str__(self) -> str:
        base = super().__str__()
        if self.context:
            ctx = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
            return f"{base} [{ctx}]"
        return base


class ConfiguracionError(EstimadorError):
    """Un parámetro de ``RunConfig`` o de la CLI está fuera de rango."""


class FormatoGrafoError(EstimadorError):
    """El documento JSON del grafo no respeta el esquema.

    El ``context`` incluye la ruta del archivo y, cuando se conoce, la
    línea o el elemento (``nodes[3]``, ``edges[0].R_ij``) problemático.
    """


class GrafoInvalidoError(EstimadorError):
    """El grafo viola alguna regla de ``validate``.

    Args:
        message:     Descripción general.
        violaciones: Lista de violaciones individuales.
        context:     Contexto adicional.
    """

    def __init__(
        self,
        message: str,
        violaciones: Sequence[Any] = (),
        context: Optional[dict[str, Any]] = None,
    ) -> None:
        self.violaciones = list(violaciones)
        super().__init__(message, context)


class OmegaNoDefinidaError(EstimadorError):
    """Ω_{i,j} no es definida positiva.

    El algoritmo exige Ω_{i,j} > 0 para todo par; suele deberse a una
    hoja sin medición propia.
    """


class SupuestoNoCumplidoError(EstimadorError):
    """La operación exige el Supuesto 1 (η < 1) o Ω > 0 y no se cumple."""


class MatrizSingularError(EstimadorError):
    """Un bloque que debe invertirse no supera el umbral de condición."""


class SistemaNoObservableError(EstimadorError):
    """La matriz de información global no es definida positiva.

    Indica que las mediciones no determinan el estado completo.
    """


class PuntoFijoNoAlcanzadoError(EstimadorError):
    """La recursión de información no alcanzó la tolerancia pedida.

    El ``context`` incluye el residuo final y las iteraciones usadas.
    """


class GrafoReducidoError(EstimadorError):
    """El grafo reducido o el grafo de capas no está definido.

    Ocurre cuando la profundidad libre de ciclos es infinita y la
    operación no admite ese caso.
    """


class EscenarioError(EstimadorError):
    """No se puede generar el escenario (parámetros ausentes o inválidos)."""


class ArtefactoIncompatibleError(EstimadorError):
    """Los artefactos combinados provienen de grafos o escenarios distintos."""
