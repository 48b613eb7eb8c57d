"""
reportes.py — Tablas (pandas) y exportadores de los artefactos del arnés.

Responsabilidades:
  1. Traza de una ejecución: serie del nodo centro (‖x̂(k)‖, traza(Q(k))
     y envolventes teóricas) y datos completos por nodo.
  2. Reporte de análisis: estabilidad (JSON + CSV por nodo), precisión
     por nodo (CSV) y resumen legible.
  3. Comparación medido vs. cotas a partir de los artefactos de una
     ejecución, con verificación de hashes.

Todos los archivos son deterministas: filas ordenadas, flotantes con
``FORMATO_FLOTANTE`` y JSON con claves ordenadas.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np
import pandas as pd

from config import (
    CSV_ENCODING,
    CSV_SEPARATOR,
    FORMATO_FLOTANTE,
    PARQUET_ENGINE,
    RunConfig,
)
from convergencia import StabilityReport
from exceptions import ArtefactoIncompatibleError
from formato_grafo import DocumentoGrafo, hash_documento, hash_grafo
from mensajes import Traza
from modelo_grafo import MeasurementGraph
from oraculo import SolucionML
from precision import AccuracyReport

logger = logging.getLogger(__name__)

ARCHIVO_TRAZA_CENTRO = "traza_centro"
ARCHIVO_TRAZA_NODOS = "traza_nodos"
ARCHIVO_EJECUCION = "ejecucion.json"
ARCHIVO_ESTABILIDAD_JSON = "estabilidad.json"
ARCHIVO_ESTABILIDAD_CSV = "estabilidad.csv"
ARCHIVO_PRECISION = "precision.csv"
ARCHIVO_ANALISIS_TXT = "analisis.txt"
ARCHIVO_ANALISIS_JSON = "analisis.json"
ARCHIVO_COMPARACION = "comparacion.csv"
ARCHIVO_RESUMEN = "resumen.txt"

SIN_ITERACIONES = "no iterations"
NO_DISPONIBLE = "unavailable"

COLUMNAS_TRAZA_CENTRO = ["k", "norma_x", "traza_Q", "envolvente_Q", "envolvente_x"]
COLUMNAS_TRAZA_NODOS = ["k", "nodo", "norma_x", "traza_Q", "componente", "x_hat", "sigma"]
COLUMNAS_PRECISION = [
    "nodo", "d", "alpha_tilde", "rho_tilde",
    "k_q", "gap_q_min", "gap_q_max", "cota_q", "cumple_q",
    "gap_q_inf_min", "gap_q_inf_max", "cota_q_inf_inferior", "cumple_q_inf",
    "k_x", "kappa", "eta", "error_x", "cota_x", "cumple_x",
    "asintotica_aplica", "error_x_inf", "cota_x_inf", "cumple_x_inf",
    "capas_aplica", "capas_discrepancia", "capas_acuerdo", "nota",
]
COLUMNAS_COMPARACION = [
    "nodo", "iteraciones", "razon", "error_final",
    "error_x", "cota_x", "cumple_x",
    "gap_q_max", "cota_q", "cumple_q", "cumple_q_inf",
    "error_x_inf", "cota_x_inf", "cumple_x_inf", "nota",
]


# ════════════════════════════════════════════════════════════
# UTILIDADES DE ESCRITURA
# ════════════════════════════════════════════════════════════


def _flotante(valor: Optional[float]) -> Optional[float]:
    """``None`` para ausentes, NaN e infinitos (JSON estricto)."""
    if valor is None:
        return None
    valor = float(valor)
    return valor if math.isfinite(valor) else None


def _profundidad(d: Union[int, float]) -> Optional[int]:
    return None if math.isinf(d) else int(d)


def escribir_tabla(df: pd.DataFrame, ruta: Path, formato: str = "csv") -> Path:
    """Escribe ``df`` como CSV o Parquet; devuelve la ruta con extensión."""
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    if formato == "parquet":
        ruta = ruta.with_suffix(".parquet")
        df.to_parquet(ruta, index=False, engine=PARQUET_ENGINE)
    else:
        ruta = ruta.with_suffix(".csv")
        df.to_csv(
            ruta,
            index=False,
            sep=CSV_SEPARATOR,
            encoding=CSV_ENCODING,
            float_format=FORMATO_FLOTANTE,
            na_rep="",
            lineterminator="\n",
        )
    logger.info("Tabla exportada: %s (%d filas)", ruta, len(df))
    return ruta


def leer_tabla(ruta_sin_extension: Path) -> pd.DataFrame:
    """Lee la tabla en CSV o Parquet, la que exista.

    Raises:
        ArtefactoIncompatibleError: si no existe ninguna.
    """
    base = Path(ruta_sin_extension)
    for sufijo in (".csv", ".parquet"):
        ruta = base.with_suffix(sufijo)
        if ruta.exists():
            if sufijo == ".parquet":
                return pd.read_parquet(ruta, engine=PARQUET_ENGINE)
            return pd.read_csv(ruta, sep=CSV_SEPARATOR, encoding=CSV_ENCODING)
    raise ArtefactoIncompatibleError("Artefacto inexistente", {"ruta": str(base)})


def escribir_json(datos: dict[str, Any], ruta: Path) -> Path:
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text(
        json.dumps(datos, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    logger.info("JSON exportado: %s", ruta)
    return ruta


def leer_json(ruta: Path) -> dict[str, Any]:
    ruta = Path(ruta)
    if not ruta.exists():
        raise ArtefactoIncompatibleError("Artefacto inexistente", {"ruta": str(ruta)})
    return json.loads(ruta.read_text(encoding="utf-8"))


def escribir_texto(lineas: Iterable[str], ruta: Path) -> Path:
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text("\n".join(lineas) + "\n", encoding="utf-8")
    logger.info("Texto exportado: %s", ruta)
    return ruta


# ════════════════════════════════════════════════════════════
# 1. TRAZA DE EJECUCIÓN
# ════════════════════════════════════════════════════════════


def tabla_traza_centro(
    traza: Traza, centro: int, estabilidad: Optional[StabilityReport] = None
) -> pd.DataFrame:
    """Serie del nodo centro con las envolventes teóricas.

    ``envolvente_Q`` = α ρ^{k−1}; ``envolvente_x`` = ρ̄^k solo si la
    condición distribuida se cumple. Creencias singulares quedan vacías.
    """
    filas = []
    for estado in traza.estados:
        k = estado.iteracion
        creencia = estado.creencias.get(centro)
        envolvente_q = envolvente_x = None
        if estabilidad is not None:
            envolvente_q = estabilidad.alpha * estabilidad.rho ** (k - 1)
            if estabilidad.condicion.cumple:
                envolvente_x = estabilidad.condicion.rho_bar ** k
        filas.append({
            "k": k,
            "norma_x": None if creencia is None else float(np.linalg.norm(creencia.x_hat)),
            "traza_Q": None if creencia is None else float(np.trace(creencia.Q)),
            "envolvente_Q": _flotante(envolvente_q),
            "envolvente_x": _flotante(envolvente_x),
        })
    return pd.DataFrame(filas, columns=COLUMNAS_TRAZA_CENTRO)


def tabla_traza_nodos(traza: Traza) -> pd.DataFrame:
    """Una fila por (k, nodo, componente): x̂, varianza marginal y traza(Q)."""
    filas = []
    for estado in traza.estados:
        for nodo in sorted(estado.creencias):
            creencia = estado.creencias[nodo]
            if creencia is None:
                filas.append({"k": estado.iteracion, "nodo": nodo, "componente": 0})
                continue
            traza_q = float(np.trace(creencia.Q))
            norma = float(np.linalg.norm(creencia.x_hat))
            for c, valor in enumerate(creencia.x_hat):
                filas.append({
                    "k": estado.iteracion,
                    "nodo": nodo,
                    "componente": c,
                    "x_hat": float(valor),
                    "sigma": float(creencia.Sigma[c, c]),
                    "traza_Q": traza_q,
                    "norma_x": norma,
                })
    return pd.DataFrame(filas, columns=COLUMNAS_TRAZA_NODOS)


def _vectores(vectores: dict[int, np.ndarray]) -> dict[str, list[Optional[float]]]:
    return {str(i): [_flotante(v) for v in vectores[i]] for i in sorted(vectores)}


def resumen_ejecucion(
    documento: DocumentoGrafo,
    traza: Traza,
    config: RunConfig,
    centro: int,
    estabilidad: Optional[StabilityReport] = None,
) -> dict[str, Any]:
    """Metadatos de ``ejecucion.json``; ``hilos`` queda fuera para no alterar bytes."""
    final = traza.final
    x_final = {}
    if final is not None:
        x_final = {i: c.x_hat for i, c in final.creencias.items() if c is not None}
    escenario = documento.escenario
    return {
        "graph_sha256": hash_grafo(documento.grafo),
        "scenario_sha256": hash_documento(documento),
        "seed": None if escenario is None else escenario.semilla,
        "centro": centro,
        "max_iters": config.max_iters,
        "tol": config.tol,
        "formato": config.formato,
        "iteraciones": traza.iteraciones,
        "razon": traza.razon.value,
        "x_hat_final": _vectores(x_final),
        "envolventes": {
            "alpha": None if estabilidad is None else _flotante(estabilidad.alpha),
            "rho": None if estabilidad is None else _flotante(estabilidad.rho),
            "rho_bar": (
                _flotante(estabilidad.condicion.rho_bar)
                if estabilidad is not None and estabilidad.condicion.cumple else None
            ),
        },
    }


def exportar_ejecucion(
    documento: DocumentoGrafo,
    traza: Traza,
    config: RunConfig,
    centro: int,
    estabilidad: Optional[StabilityReport] = None,
) -> list[Path]:
    """Escribe traza_centro, traza_nodos y ejecucion.json en ``config.directorio_salida``."""
    destino = Path(config.directorio_salida)
    rutas = [
        escribir_tabla(tabla_traza_centro(traza, centro, estabilidad), destino / ARCHIVO_TRAZA_CENTRO, config.formato),
        escribir_tabla(tabla_traza_nodos(traza), destino / ARCHIVO_TRAZA_NODOS, config.formato),
        escribir_json(resumen_ejecucion(documento, traza, config, centro, estabilidad), destino / ARCHIVO_EJECUCION),
    ]
    return rutas


# ════════════════════════════════════════════════════════════
# 2. REPORTE DE ANÁLISIS
# ════════════════════════════════════════════════════════════


def datos_estabilidad(estabilidad: Optional[StabilityReport], motivo: str = "") -> dict[str, Any]:
    """Bloque de estabilidad; con ``disponible: false`` si el análisis falló."""
    if estabilidad is None:
        return {"disponible": False, "motivo": motivo or NO_DISPONIBLE}
    condicion = estabilidad.condicion
    return {
        "disponible": True,
        "aciclico": estabilidad.aciclico,
        "supuesto_1": estabilidad.supuesto_cumple,
        "eta": _flotante(estabilidad.eta),
        "rho": _flotante(estabilidad.rho),
        "alpha": _flotante(estabilidad.alpha),
        "beta": _flotante(estabilidad.beta),
        "punto_fijo": {
            "iteraciones": estabilidad.fp.iteraciones,
            "residuo": _flotante(estabilidad.fp.residuo),
        },
        "ranuras": len(estabilidad.indice.ranuras),
        "ranuras_podadas": len(estabilidad.indice_bar.ranuras),
        "veredicto": {
            "radio": _flotante(estabilidad.veredicto.radio),
            "estado": estabilidad.veredicto.estado,
        },
        "condicion_distribuida": {
            "estado": condicion.estado,
            "rho_bar": _flotante(condicion.rho_bar),
            "sigmas": {str(i): _flotante(s) for i, s in sorted(condicion.sigmas.items())},
        },
    }


def tabla_estabilidad(graph: MeasurementGraph, estabilidad: Optional[StabilityReport]) -> pd.DataFrame:
    """Una fila por nodo: grado, pertenencia a Ḡ y σ_i si se calculó."""
    podados = set()
    sigmas: dict[int, float] = {}
    if estabilidad is not None:
        podados = {i for i, _ in estabilidad.indice_bar.ranuras}
        sigmas = estabilidad.condicion.sigmas
    filas = [
        {
            "nodo": i,
            "grado": len(graph.vecinos[i]),
            "en_grafo_podado": i in podados if estabilidad is not None else None,
            "sigma": _flotante(sigmas.get(i)),
        }
        for i in graph.ids
    ]
    return pd.DataFrame(filas, columns=["nodo", "grado", "en_grafo_podado", "sigma"])


def fila_precision(reporte: AccuracyReport) -> dict[str, Any]:
    q, x, capas = reporte.q, reporte.x, reporte.capas
    return {
        "nodo": reporte.nodo,
        "d": _profundidad(reporte.d),
        "alpha_tilde": _flotante(reporte.alpha_tilde),
        "rho_tilde": _flotante(reporte.rho_tilde),
        "k_q": q.k,
        "gap_q_min": _flotante(q.gap_min),
        "gap_q_max": _flotante(q.gap_max),
        "cota_q": _flotante(q.cota),
        "cumple_q": q.cumple_d,
        "gap_q_inf_min": _flotante(q.gap_inf_min),
        "gap_q_inf_max": _flotante(q.gap_inf_max),
        "cota_q_inf_inferior": _flotante(q.cota_inf_inferior),
        "cumple_q_inf": q.cumple_inf,
        "k_x": x.k,
        "kappa": _flotante(x.kappa),
        "eta": _flotante(x.eta),
        "error_x": _flotante(x.error),
        "cota_x": _flotante(x.cota),
        "cumple_x": x.cumple,
        "asintotica_aplica": x.asintotica_aplica,
        "error_x_inf": _flotante(x.error_inf),
        "cota_x_inf": _flotante(x.cota_inf),
        "cumple_x_inf": x.cumple_inf,
        "capas_aplica": capas.aplica,
        "capas_discrepancia": _flotante(capas.discrepancia),
        "capas_acuerdo": capas.acuerdo,
        "nota": q.nota,
    }


def tabla_precision(reportes: list[AccuracyReport]) -> pd.DataFrame:
    filas = [fila_precision(r) for r in sorted(reportes, key=lambda r: r.nodo)]
    return pd.DataFrame(filas, columns=COLUMNAS_PRECISION)


def texto_analisis(
    graph: MeasurementGraph,
    estabilidad: Optional[StabilityReport],
    reportes: Optional[list[AccuracyReport]],
    motivo_estabilidad: str = "",
    motivo_precision: str = "",
) -> list[str]:
    """Resumen legible del análisis."""
    lineas = [
        "=" * 70,
        "ANÁLISIS DE CONVERGENCIA Y PRECISIÓN",
        "=" * 70,
        f"Nodos: {len(graph.ids)}   Aristas: {len(graph.aristas)}   Hash: {hash_grafo(graph)}",
    ]
    if graph.es_aciclico():
        lineas.append(f"acyclic: exact in diameter iterations (diámetro = {graph.diametro()})")

    lineas.append("")
    lineas.append("ESTABILIDAD")
    if estabilidad is None:
        lineas.append(f"  {NO_DISPONIBLE}: {motivo_estabilidad}")
    else:
        lineas += [
            f"  η = {estabilidad.eta:.6g}   ρ = {estabilidad.rho:.6g}   α = {estabilidad.alpha:.6g}",
            f"  Radio espectral de Ā(∞): {estabilidad.veredicto.radio:.6g} → {estabilidad.veredicto.estado}",
            f"  Condición distribuida: {estabilidad.condicion.estado} (ρ̄ = {estabilidad.condicion.rho_bar:.6g})",
        ]
        for i, sigma in sorted(estabilidad.condicion.sigmas.items()):
            lineas.append(f"    σ_{i} = {sigma:.6g}")

    lineas.append("")
    lineas.append("PRECISIÓN POR NODO")
    if reportes is None:
        lineas.append(f"  {NO_DISPONIBLE}: {motivo_precision}")
    else:
        for r in sorted(reportes, key=lambda r: r.nodo):
            d = "∞" if math.isinf(r.d) else str(int(r.d))
            cota_q = NO_DISPONIBLE if r.q.cota is None else f"{r.q.cota:.3e}"
            lineas.append(
                f"  nodo {r.nodo}: d={d}  cota Q={cota_q}  "
                f"error x={_texto(r.x.error)} ≤ {r.x.cota:.3e} [{_marca(r.x.cumple)}]"
            )
    return lineas


def _texto(valor: Optional[float]) -> str:
    return NO_DISPONIBLE if valor is None else f"{valor:.3e}"


def _marca(valor: Optional[bool]) -> str:
    return "—" if valor is None else ("OK" if valor else "FALLO")


def exportar_analisis(
    graph: MeasurementGraph,
    directorio: Path,
    estabilidad: Optional[StabilityReport],
    reportes: Optional[list[AccuracyReport]],
    motivo_estabilidad: str = "",
    motivo_precision: str = "",
) -> list[Path]:
    """Escribe estabilidad.json/.csv, precision.csv, analisis.txt y analisis.json."""
    directorio = Path(directorio)
    bloque = datos_estabilidad(estabilidad, motivo_estabilidad)
    precision = (
        {"disponible": False, "motivo": motivo_precision or NO_DISPONIBLE}
        if reportes is None
        else {"disponible": True, "nodos": tabla_precision(reportes).to_dict(orient="records")}
    )
    rutas = [
        escribir_json({"graph_sha256": hash_grafo(graph), **bloque}, directorio / ARCHIVO_ESTABILIDAD_JSON),
        escribir_tabla(tabla_estabilidad(graph, estabilidad), directorio / ARCHIVO_ESTABILIDAD_CSV),
    ]
    if reportes is not None:
        rutas.append(escribir_tabla(tabla_precision(reportes), directorio / ARCHIVO_PRECISION))
    rutas.append(escribir_texto(
        texto_analisis(graph, estabilidad, reportes, motivo_estabilidad, motivo_precision),
        directorio / ARCHIVO_ANALISIS_TXT,
    ))
    rutas.append(escribir_json(
        {
            "graph_sha256": hash_grafo(graph),
            "aciclico": graph.es_aciclico(),
            "estabilidad": bloque,
            "precision": _json_limpio(precision),
        },
        directorio / ARCHIVO_ANALISIS_JSON,
    ))
    return rutas


def _json_limpio(datos: Any) -> Any:
    """Convierte escalares numpy/NaN de ``to_dict`` a tipos JSON."""
    if isinstance(datos, dict):
        return {k: _json_limpio(v) for k, v in datos.items()}
    if isinstance(datos, list):
        return [_json_limpio(v) for v in datos]
    if isinstance(datos, (bool, np.bool_)):
        return bool(datos)
    if isinstance(datos, (int, np.integer)):
        return int(datos)
    if isinstance(datos, (float, np.floating)):
        return _flotante(datos)
    return datos


# ════════════════════════════════════════════════════════════
# 3. COMPARACIÓN MEDIDO VS. COTAS
# ════════════════════════════════════════════════════════════


def verificar_artefactos(documento: DocumentoGrafo, directorio: Path) -> dict[str, Any]:
    """Lee ``ejecucion.json`` y comprueba que corresponde al escenario.

    Raises:
        ArtefactoIncompatibleError: si falta o no coinciden los hashes.
    """
    directorio = Path(directorio)
    ejecucion = leer_json(directorio / ARCHIVO_EJECUCION)
    esperado = hash_documento(documento)
    if ejecucion.get("scenario_sha256") != esperado:
        raise ArtefactoIncompatibleError(
            "artifact hash mismatch",
            {"esperado": esperado[:12], "encontrado": str(ejecucion.get("scenario_sha256"))[:12]},
        )
    analisis = directorio / ARCHIVO_ANALISIS_JSON
    if analisis.exists():
        grafo = leer_json(analisis).get("graph_sha256")
        if grafo != hash_grafo(documento.grafo):
            raise ArtefactoIncompatibleError(
                "artifact hash mismatch", {"artefacto": ARCHIVO_ANALISIS_JSON}
            )
    return ejecucion


def _finales_de_traza(traza_nodos: pd.DataFrame) -> dict[int, np.ndarray]:
    """x̂_i en la última iteración registrada de la tabla por nodo."""
    ultima = traza_nodos[traza_nodos["k"] == traza_nodos["k"].max()].dropna(subset=["x_hat"])
    finales = {}
    for nodo, grupo in ultima.groupby("nodo", sort=True):
        finales[int(nodo)] = grupo.sort_values("componente")["x_hat"].to_numpy(dtype=float)
    return finales


def tabla_comparacion(
    ejecucion: dict[str, Any],
    traza_nodos: pd.DataFrame,
    oraculo: SolucionML,
    reportes: list[AccuracyReport],
) -> pd.DataFrame:
    """Une los valores del oráculo, la traza registrada y las cotas por nodo.

    Una traza vacía produce una sola fila con ``nota = "no iterations"``.
    """
    if traza_nodos.empty:
        return pd.DataFrame([{"iteraciones": 0, "razon": ejecucion.get("razon"), "nota": SIN_ITERACIONES}],
                            columns=COLUMNAS_COMPARACION)

    finales = _finales_de_traza(traza_nodos)
    filas = []
    for r in sorted(reportes, key=lambda r: r.nodo):
        x_final = finales.get(r.nodo)
        filas.append({
            "nodo": r.nodo,
            "iteraciones": int(traza_nodos["k"].max()),
            "razon": ejecucion.get("razon"),
            "error_final": None if x_final is None else float(np.linalg.norm(x_final - oraculo.x[r.nodo])),
            "error_x": _flotante(r.x.error),
            "cota_x": _flotante(r.x.cota),
            "cumple_x": r.x.cumple,
            "gap_q_max": _flotante(r.q.gap_max),
            "cota_q": _flotante(r.q.cota),
            "cumple_q": r.q.cumple_d,
            "cumple_q_inf": r.q.cumple_inf,
            "error_x_inf": _flotante(r.x.error_inf),
            "cota_x_inf": _flotante(r.x.cota_inf),
            "cumple_x_inf": r.x.cumple_inf,
            "nota": r.q.nota,
        })
    return pd.DataFrame(filas, columns=COLUMNAS_COMPARACION)


def texto_resumen(ejecucion: dict[str, Any], comparacion: pd.DataFrame) -> list[str]:
    columnas = ["cumple_x", "cumple_q", "cumple_q_inf", "cumple_x_inf"]
    evaluadas = [v for c in columnas for v in comparacion[c] if isinstance(v, (bool, np.bool_))]
    violaciones = sum(1 for v in evaluadas if not v)
    lineas = [
        "=" * 70,
        "COMPARACIÓN MEDIDO VS. COTAS",
        "=" * 70,
        f"Escenario: {ejecucion.get('scenario_sha256')}",
        f"Semilla:   {ejecucion.get('seed')}",
        f"Iteraciones: {ejecucion.get('iteraciones')}   Parada: {ejecucion.get('razon')}",
        f"Cotas evaluadas: {len(evaluadas)}   Violaciones: {violaciones}",
    ]
    if (comparacion["nota"] == SIN_ITERACIONES).any():
        lineas.append(f"Traza vacía: {SIN_ITERACIONES}")
    return lineas


def exportar_reporte(
    directorio: Path, ejecucion: dict[str, Any], comparacion: pd.DataFrame
) -> list[Path]:
    directorio = Path(directorio)
    return [
        escribir_tabla(comparacion, directorio / ARCHIVO_COMPARACION),
        escribir_texto(texto_resumen(ejecucion, comparacion), directorio / ARCHIVO_RESUMEN),
    ]
