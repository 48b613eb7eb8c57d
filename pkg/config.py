"""
config.py — Constantes de configuración centralizadas del estimador GBP.

Contiene:
  • Rutas de salida y de logs.
  • Política numérica única del repositorio: tolerancia SPD relativa,
    umbral de condición recíproca, guardas de divergencia, márgenes de
    estabilidad y holguras de las comprobaciones de cotas.
  • Parámetros por defecto del protocolo de simulación (R_i = 5,
    R_ij = 1) y del generador de escenarios.
  • Formato de exportación (CSV / Parquet / JSON) determinista.
  • ``RunConfig``: parámetros de una ejecución del arnés.
  • Configuración de logging estructurado.

Se importa desde todos los demás módulos para evitar valores mágicos.
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from exceptions import ConfiguracionError

# ────────────────────────────────────────────────────────────
# 1. RUTAS Y DIRECTORIOS
# ────────────────────────────────────────────────────────────

BASE_DIR: Path = Path(__file__).resolve().parent
OUTPUT_DIR: Path = BASE_DIR / "output"
LOG_DIR: Path = BASE_DIR / "logs"


def _asegurar_directorio(ruta: Path) -> bool:
    """Crea un directorio si se puede escribir en él.

    Se ejecuta al importar el módulo; en un sistema de archivos de solo
    lectura el fallo se degrada a ``False`` en vez de abortar.

    Returns:
        ``True`` si el directorio existe y es utilizable.
    """
    try:
        ruta.mkdir(exist_ok=True, parents=True)
        return True
    except OSError:
        return False


_asegurar_directorio(OUTPUT_DIR)
_LOGS_DISPONIBLES: bool = _asegurar_directorio(LOG_DIR)


# ────────────────────────────────────────────────────────────
# 2. CONSOLA UTF-8 (Windows)
# ────────────────────────────────────────────────────────────


def configurar_consola_utf8() -> None:
    """Fuerza la salida estándar a UTF-8.

    Los resúmenes imprimen símbolos (``ρ``, ``η``, ``⪯``) que cp1252 no
    codifica. Se invoca desde los puntos de entrada antes de imprimir.
    """
    for stream in (sys.stdout, sys.stderr):
        reconfig = getattr(stream, "reconfigure", None)
        if reconfig is not None:
            try:
                reconfig(encoding="utf-8", errors="replace")
            except (ValueError, OSError):  # pragma: no cover - stream exótico
                pass


def _entero_env(nombre: str, defecto: int) -> int:
    """Lee un entero positivo de una variable de entorno."""
    valor = os.getenv(nombre)
    if valor is None or not valor.strip():
        return defecto
    try:
        entero = int(valor)
    except ValueError:
        return defecto
    return entero if entero > 0 else defecto


# ────────────────────────────────────────────────────────────
# 3. POLÍTICA NUMÉRICA
# ────────────────────────────────────────────────────────────

# Una matriz simétrica es SPD si λ_min > TOL_SPD_RELATIVA · λ_max.
TOL_SPD_RELATIVA: float = 1e-10

# Condición recíproca mínima antes de declarar singular un bloque.
RCOND_MINIMO: float = 1e-12

# ‖x̂‖ por encima de este valor se considera divergencia.
UMBRAL_DIVERGENCIA: float = 1e12

# Radio espectral < 1 − MARGEN_ESTABILIDAD ⇒ estable; dentro del margen, marginal.
MARGEN_ESTABILIDAD: float = 1e-10

# Punto fijo de los mensajes de información.
TOL_PUNTO_FIJO: float = 1e-12
MIN_ITERS_PUNTO_FIJO: int = 500
FACTOR_ITERS_PUNTO_FIJO: int = 10

# Holguras de las comprobaciones de orden PSD.
HOLGURA_PSD: float = 1e-8
HOLGURA_MONOTONIA: float = 1e-9

# Condiciones de pequeñez de la cota asintótica del error de estimación.
UMBRAL_PEQUENEZ_ASINTOTICA: float = 1e-3
HOLGURA_ASINTOTICA: float = 0.1

# Acuerdo entre los tres cálculos del error por capas.
TOL_CONSISTENCIA: float = 1e-9

# Nodos a partir de los cuales no se materializa la covarianza global.
MAX_NODOS_SIGMA: int = _entero_env("GBP_MAX_NODOS_SIGMA", 200)


# ────────────────────────────────────────────────────────────
# 4. PROTOCOLO DE SIMULACIÓN
# ────────────────────────────────────────────────────────────

# z_i = x_i + v_i,   z_ij = x_i + x_j + v_ij
R_PROPIA_DEFECTO: float = 5.0
R_CONJUNTA_DEFECTO: float = 1.0

MAX_ITERS_DEFECTO: int = 200
TOL_EJECUCION_DEFECTO: float = 1e-10
HILOS_DEFECTO: int = _entero_env("GBP_HILOS", 1)

EMISIONES_VALIDAS: frozenset[str] = frozenset({"trace", "stability", "accuracy"})


# ────────────────────────────────────────────────────────────
# 5. EXPORTACIÓN
# ────────────────────────────────────────────────────────────

CSV_SEPARATOR: str = ","
CSV_ENCODING: str = "utf-8"
# 17 cifras significativas: lectura exacta y bytes idénticos entre corridas.
FORMATO_FLOTANTE: str = "%.17g"
PARQUET_ENGINE: str = "pyarrow"
FORMATOS_TABLA: tuple[str, ...] = ("csv", "parquet")


# ────────────────────────────────────────────────────────────
# 6. DATACLASS DE PARÁMETROS DE EJECUCIÓN
# ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class RunConfig:
    """Parámetros de una ejecución del arnés.

    Attributes:
        max_iters:         Tope de iteraciones del motor de mensajes.
        tol:               Tolerancia relativa de parada.
        emitir:            Artefactos a emitir (``trace``, ``stability``,
                           ``accuracy``).
        directorio_salida: Carpeta de los artefactos.
        hilos:             Trabajadores por iteración (no altera resultados).
        centro:            Nodo cuyas series se exportan; ``None`` = menor id.
        formato:           ``csv`` o ``parquet`` para las tablas de traza.
    """

    max_iters: int = MAX_ITERS_DEFECTO
    tol: float = TOL_EJECUCION_DEFECTO
    emitir: frozenset[str] = field(default_factory=lambda: frozenset({"trace"}))
    directorio_salida: Path = OUTPUT_DIR
    hilos: int = HILOS_DEFECTO
    centro: Optional[int] = None
    formato: str = "csv"

    def validada(self) -> "RunConfig":
        """Devuelve la misma configuración si es coherente.

        Raises:
            ConfiguracionError: si algún parámetro está fuera de rango.
        """
        if self.max_iters < 1:
            raise ConfiguracionError(
                "max_iters debe ser ≥ 1", {"max_iters": self.max_iters}
            )
        if not self.tol > 0:
            raise ConfiguracionError("tol debe ser > 0", {"tol": self.tol})
        if self.hilos < 1:
            raise ConfiguracionError("hilos debe ser ≥ 1", {"hilos": self.hilos})
        desconocidas = set(self.emitir) - EMISIONES_VALIDAS
        if desconocidas:
            raise ConfiguracionError(
                "Emisiones desconocidas", {"emitir": sorted(desconocidas)}
            )
        if self.formato not in FORMATOS_TABLA:
            raise ConfiguracionError("Formato de tabla desconocido", {"formato": self.formato})
        return self


# ────────────────────────────────────────────────────────────
# 7. CONFIGURACIÓN DE LOGGING ESTRUCTURADO
# ────────────────────────────────────────────────────────────

LOG_FORMAT: str = (
    "%(asctime)s | %(levelname)-8s | %(name)-20s | %(funcName)-25s | %(message)s"
)
LOG_DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"
LOG_FILE: Path = LOG_DIR / "estimador_gbp.log"


def nivel_log() -> int:
    """Nivel vigente según ``GBP_DEBUG`` (se relee para honrar ``--debug``)."""
    return logging.DEBUG if os.getenv("GBP_DEBUG", "0") == "1" else logging.INFO


def setup_logging() -> None:
    """Configura logging con salida a consola **y** a archivo rotativo.

    Se invoca una sola vez desde el punto de entrada. Usa
    ``RotatingFileHandler`` para evitar archivos de log gigantes.
    """
    from logging.handlers import RotatingFileHandler

    configurar_consola_utf8()

    nivel = nivel_log()
    root_logger = logging.getLogger()
    root_logger.setLevel(nivel)

    # Evitar handlers duplicados en re-imports
    if root_logger.handlers:
        return

    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(nivel)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if _LOGS_DISPONIBLES:
        try:
            file_handler = RotatingFileHandler(
                LOG_FILE,
                maxBytes=5 * 1024 * 1024,
                backupCount=5,
                encoding="utf-8",
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except OSError:
            root_logger.warning(
                "No se pudo abrir %s; se registrará solo por consola.", LOG_FILE
            )
