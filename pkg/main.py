"""
main.py — Orquestador CLI del estimador distribuido por BP gaussiana.

Punto de entrada principal. Comandos:

  1. **validate**: reglas del grafo + Supuesto 1 (imprime η).
  2. **generate**: escenario sembrado (x_true, ruido, mediciones).
  3. **run**:      motor de mensajes → traza del centro y por nodo.
  4. **analyze**:  estabilidad (A(∞), Ā(∞), condición distribuida) y
                   precisión por nodo (cotas de información y de error).
  5. **report**:   comparación medido vs. cotas de una ejecución previa.
  6. **corpus**:   exporta un grafo del corpus a un archivo.

Códigos de salida: 0 correcto, 1 fallo de validación, 2 error de ejecución.

Uso:
  python main.py corpus --corpus anillo-8 --out output/anillo8.json
  python main.py generate --graph output/anillo8.json --seed 42 \\
      --out output/anillo8_s42.json
  python main.py run --scenario output/anillo8_s42.json --out output/corrida
  python main.py report --scenario output/anillo8_s42.json --out output/corrida
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Optional

from config import (
    EMISIONES_VALIDAS,
    FORMATOS_TABLA,
    HILOS_DEFECTO,
    MAX_ITERS_DEFECTO,
    OUTPUT_DIR,
    TOL_EJECUCION_DEFECTO,
    RunConfig,
    setup_logging,
)
from corpus import CORPUS, buscar_entrada
from exceptions import (
    ConfiguracionError,
    EstimadorError,
    FormatoGrafoError,
    GrafoInvalidoError,
    OmegaNoDefinidaError,
)
from formato_grafo import DocumentoGrafo, escribir_documento, leer_documento
from modelo_grafo import MeasurementGraph, check_assumption1, exigir_valido, validate

logger = logging.getLogger(__name__)

COMANDOS = ("validate", "generate", "run", "analyze", "report", "corpus")


# ════════════════════════════════════════════════════════════
# 1. ARGUMENTOS DE LÍNEA DE COMANDOS
# ════════════════════════════════════════════════════════════


def construir_parser_args() -> argparse.ArgumentParser:
    """Construye el parser de argumentos CLI.

    Returns:
        Instancia de ``ArgumentParser`` configurada.
    """
    parser = argparse.ArgumentParser(
        description="Estimador estático distribuido por propagación de creencias gaussiana.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos:
  # Validar un grafo e imprimir η
  python main.py validate --graph output/anillo8.json

  # Escenario sembrado y ejecución con traza en Parquet
  python main.py generate --corpus anillo-8 --seed 7 --out output/s7.json
  python main.py run --scenario output/s7.json --out output/s7 --formato parquet

  # Análisis completo de estabilidad y precisión
  python main.py analyze --scenario output/s7.json --out output/s7

  # Listar el corpus
  python main.py corpus

  # Modo depuración
  GBP_DEBUG=1 python main.py run --scenario output/s7.json
        """,
    )
    parser.add_argument("comando", choices=COMANDOS, help="Operación a ejecutar.")

    # --- Entrada/Salida ---
    grupo_io = parser.add_argument_group("Entrada / Salida")
    grupo_io.add_argument(
        "--graph", "-g",
        type=str,
        default=None,
        help="Documento JSON del grafo.",
    )
    grupo_io.add_argument(
        "--scenario", "-s",
        type=str,
        default=None,
        help="Documento JSON de un escenario generado (grafo + mediciones).",
    )
    grupo_io.add_argument(
        "--corpus",
        type=str,
        default=None,
        help="Nombre de un grafo del corpus (en lugar de --graph).",
    )
    grupo_io.add_argument(
        "--out", "-o",
        type=str,
        default=None,
        help=(
            "Archivo de salida (generate, corpus) o carpeta de artefactos "
            "(run, analyze, report). Default: output/"
        ),
    )

    # --- Parámetros de ejecución ---
    grupo_ejecucion = parser.add_argument_group("Parámetros de ejecución")
    grupo_ejecucion.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Semilla de 64 bits del generador (generate).",
    )
    grupo_ejecucion.add_argument(
        "--tol",
        type=float,
        default=TOL_EJECUCION_DEFECTO,
        help=f"Tolerancia relativa de parada (default: {TOL_EJECUCION_DEFECTO:g}).",
    )
    grupo_ejecucion.add_argument(
        "--max-iters",
        type=int,
        default=MAX_ITERS_DEFECTO,
        help=f"Tope de iteraciones (default: {MAX_ITERS_DEFECTO}).",
    )
    grupo_ejecucion.add_argument(
        "--emit",
        nargs="+",
        choices=sorted(EMISIONES_VALIDAS),
        default=["trace"],
        help="Artefactos de run: trace, stability, accuracy (default: trace).",
    )
    grupo_ejecucion.add_argument(
        "--centro",
        type=int,
        default=None,
        help="Nodo cuya serie se exporta en traza_centro (default: menor id).",
    )

    # --- Opciones avanzadas ---
    grupo_avanzado = parser.add_argument_group("Opciones avanzadas")
    grupo_avanzado.add_argument(
        "--hilos",
        type=int,
        default=HILOS_DEFECTO,
        help="Trabajadores por iteración; no cambia los resultados (default: GBP_HILOS o 1).",
    )
    grupo_avanzado.add_argument(
        "--formato",
        choices=FORMATOS_TABLA,
        default="csv",
        help="Formato de las tablas de traza (default: csv).",
    )
    grupo_avanzado.add_argument(
        "--debug",
        action="store_true",
        help="Activar logging nivel DEBUG.",
    )

    return parser


# ════════════════════════════════════════════════════════════
# 2. ENTRADAS COMUNES
# ════════════════════════════════════════════════════════════


def cargar_documento(args: argparse.Namespace, preferir_escenario: bool = True) -> DocumentoGrafo:
    """Documento indicado por --scenario, --graph o --corpus (en ese orden).

    Raises:
        ConfiguracionError: si no se indicó ninguno o el corpus no existe.
        FormatoGrafoError:  si el archivo no se puede interpretar.
    """
    if preferir_escenario and args.scenario:
        return leer_documento(args.scenario)
    if args.graph:
        return leer_documento(args.graph)
    if args.corpus:
        try:
            return buscar_entrada(args.corpus).documento()
        except KeyError as exc:
            raise ConfiguracionError(str(exc.args[0]), {"corpus": args.corpus}) from exc
    raise ConfiguracionError("Falta el grafo: use --graph, --scenario o --corpus")


def directorio_salida(args: argparse.Namespace) -> Path:
    return Path(args.out) if args.out else OUTPUT_DIR


def config_ejecucion(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        max_iters=args.max_iters,
        tol=args.tol,
        emitir=frozenset(args.emit),
        directorio_salida=directorio_salida(args),
        hilos=args.hilos,
        centro=args.centro,
        formato=args.formato,
    ).validada()


def elegir_centro(graph: MeasurementGraph, centro: Optional[int]) -> int:
    if centro is None:
        return graph.ids[0]
    if centro not in graph.indice_nodos:
        raise ConfiguracionError("El centro no es un nodo del grafo", {"centro": centro})
    return centro


def _banner(titulo: str) -> None:
    logger.info("=" * 70)
    logger.info(titulo)
    logger.info("=" * 70)


# ════════════════════════════════════════════════════════════
# 3. COMANDOS
# ════════════════════════════════════════════════════════════


def cmd_validate(args: argparse.Namespace) -> int:
    """Reglas del grafo y Supuesto 1. Devuelve 1 ante cualquier violación."""
    graph = cargar_documento(args).grafo
    _banner("VALIDACIÓN DEL GRAFO")

    resultado = validate(graph)
    if not resultado.valido:
        logger.warning("Grafo inválido: %d violaciones", len(resultado.violaciones))
        print(f"\n❌ Grafo inválido ({len(resultado.violaciones)} violaciones):")
        for violacion in resultado.violaciones:
            print(f"  - {violacion}")
        return 1

    try:
        supuesto = check_assumption1(graph)
    except OmegaNoDefinidaError as exc:
        logger.warning("Supuesto 1 no evaluable: %s", exc)
        print(f"\n❌ Assumption 1 failure: {exc}")
        return 1

    logger.info("RESUMEN")
    logger.info("  Nodos:    %d", len(graph.ids))
    logger.info("  Aristas:  %d", len(graph.aristas))
    logger.info("  Acíclico: %s", graph.es_aciclico())
    logger.info("  η:        %.6g", supuesto.eta)

    print(f"\neta = {supuesto.eta:.17g}")
    if not supuesto.cumple:
        print(f"❌ Assumption 1 failure: η = {supuesto.eta:.6g} ≥ 1")
        return 1
    print("✔ Grafo válido; Supuesto 1 se cumple.")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    """Escribe el escenario sembrado del grafo."""
    from escenarios import generar_escenario

    if args.seed is None:
        raise ConfiguracionError("generate requiere --seed")
    documento = cargar_documento(args, preferir_escenario=False)
    _banner("GENERACIÓN DE ESCENARIO")

    escenario = generar_escenario(documento, args.seed)
    ruta = Path(args.out) if args.out else OUTPUT_DIR / f"escenario_{args.seed}.json"
    escribir_documento(escenario.como_documento(), ruta)

    logger.info("RESUMEN")
    logger.info("  Semilla:  %d", args.seed)
    logger.info("  Hash:     %s", escenario.hash_grafo)
    logger.info("  Archivo:  %s", ruta)
    print(f"\n[Escenario semilla {args.seed} → {ruta}]")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    """Ejecuta el motor de mensajes y exporta la traza."""
    from convergencia import analizar_estabilidad
    from mensajes import TerminationReason, run
    from reportes import exportar_ejecucion

    config = config_ejecucion(args)
    documento = cargar_documento(args)
    graph = exigir_valido(documento.grafo)
    centro = elegir_centro(graph, config.centro)
    _banner("EJECUCIÓN DEL MOTOR DE MENSAJES")

    estabilidad = None
    try:
        estabilidad = analizar_estabilidad(graph)
    except EstimadorError as exc:
        logger.warning("Envolventes no disponibles: %s", exc)

    traza = run(graph, config.max_iters, config.tol, hilos=config.hilos)
    rutas = []
    if "trace" in config.emitir:
        rutas += exportar_ejecucion(documento, traza, config, centro, estabilidad)
    if config.emitir & {"stability", "accuracy"}:
        rutas += _analizar(graph, config.directorio_salida, config.hilos, estabilidad, traza)

    logger.info("RESUMEN")
    logger.info("  Iteraciones: %d", traza.iteraciones)
    logger.info("  Parada:      %s", traza.razon.value)
    logger.info("  Artefactos:  %d en %s", len(rutas), config.directorio_salida)

    final = traza.final
    print("\n" + "=" * 70)
    print(f"Parada: {traza.razon.value} en k = {traza.iteraciones}")
    if final is not None and final.creencias.get(centro) is not None:
        print(f"x̂_{centro} = {final.creencias[centro].x_hat}")
    if traza.razon is TerminationReason.DIVERGENCIA:
        print("⚠ La ejecución divergió: ‖x̂‖ superó el umbral.")
    print(f"[{len(rutas)} artefactos → {config.directorio_salida}]")
    return 0


def _analizar(graph, directorio, hilos, estabilidad=None, traza=None) -> list[Path]:
    """Análisis con reportes parciales: cada parte fallida queda ``unavailable``."""
    from convergencia import analizar_estabilidad
    from oraculo import solve_ml
    from precision import analizar_precision
    from reportes import exportar_analisis

    motivo_estabilidad = motivo_precision = ""
    if estabilidad is None:
        try:
            estabilidad = analizar_estabilidad(graph)
        except EstimadorError as exc:
            logger.warning("Estabilidad no disponible: %s", exc)
            motivo_estabilidad = str(exc)
    reportes = None
    try:
        oraculo = solve_ml(graph)
        reportes = analizar_precision(graph, estabilidad, traza, oraculo, hilos=hilos)
    except EstimadorError as exc:
        logger.warning("Precisión no disponible: %s", exc)
        motivo_precision = str(exc)
    return exportar_analisis(graph, directorio, estabilidad, reportes, motivo_estabilidad, motivo_precision)


def cmd_analyze(args: argparse.Namespace) -> int:
    """Reporte de estabilidad y precisión."""
    documento = cargar_documento(args)
    graph = exigir_valido(documento.grafo)
    destino = directorio_salida(args)
    if args.hilos < 1:
        raise ConfiguracionError("hilos debe ser ≥ 1", {"hilos": args.hilos})
    _banner("ANÁLISIS DE CONVERGENCIA Y PRECISIÓN")

    rutas = _analizar(graph, destino, args.hilos)

    logger.info("RESUMEN")
    logger.info("  Artefactos: %d en %s", len(rutas), destino)
    texto = destino / "analisis.txt"
    print("\n" + texto.read_text(encoding="utf-8"))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    """Comparación medido vs. cotas a partir de una ejecución previa."""
    from oraculo import solve_ml
    from precision import analizar_precision
    from reportes import (
        ARCHIVO_TRAZA_NODOS,
        exportar_reporte,
        leer_tabla,
        tabla_comparacion,
        verificar_artefactos,
    )

    if not args.scenario:
        raise ConfiguracionError("report requiere --scenario")
    documento = leer_documento(args.scenario)
    graph = exigir_valido(documento.grafo)
    destino = directorio_salida(args)
    _banner("REPORTE MEDIDO VS. COTAS")

    ejecucion = verificar_artefactos(documento, destino)
    traza_nodos = leer_tabla(destino / ARCHIVO_TRAZA_NODOS)
    oraculo = solve_ml(graph)
    reportes = analizar_precision(graph, oraculo=oraculo, hilos=args.hilos)
    comparacion = tabla_comparacion(ejecucion, traza_nodos, oraculo, reportes)
    rutas = exportar_reporte(destino, ejecucion, comparacion)

    logger.info("RESUMEN")
    logger.info("  Filas:      %d", len(comparacion))
    logger.info("  Artefactos: %s", [str(r) for r in rutas])
    print("\n" + "=" * 70)
    print("VISTA PREVIA DE LA COMPARACIÓN")
    print("=" * 70)
    print(comparacion.head(10).to_string(index=False))
    return 0


def cmd_corpus(args: argparse.Namespace) -> int:
    """Lista el corpus o exporta una de sus entradas."""
    if not args.corpus:
        print("\nCorpus disponible:")
        for entrada in CORPUS:
            print(f"  {entrada.nombre:<18} {entrada.regimen:<8} {entrada.descripcion}")
        return 0
    documento = cargar_documento(args, preferir_escenario=False)
    ruta = Path(args.out) if args.out else OUTPUT_DIR / f"{args.corpus}.json"
    escribir_documento(documento, ruta)
    print(f"\n[{args.corpus} → {ruta}]")
    return 0


MANEJADORES: dict[str, Callable[[argparse.Namespace], int]] = {
    "validate": cmd_validate,
    "generate": cmd_generate,
    "run": cmd_run,
    "analyze": cmd_analyze,
    "report": cmd_report,
    "corpus": cmd_corpus,
}


# ════════════════════════════════════════════════════════════
# 4. PUNTO DE ENTRADA
# ════════════════════════════════════════════════════════════


def main(argv: Optional[list[str]] = None) -> int:
    """Punto de entrada principal del estimador.

    Returns:
        Código de salida del programa.
    """
    parser = construir_parser_args()
    args = parser.parse_args(argv)

    if args.debug:
        os.environ["GBP_DEBUG"] = "1"
    setup_logging()

    logger.info("Estimador GBP iniciado — comando=%s", args.comando)

    try:
        return MANEJADORES[args.comando](args)
    except (GrafoInvalidoError, FormatoGrafoError) as exc:
        logger.error("Validación fallida: %s", exc)
        print(f"\n❌ Error: {exc}")
        for violacion in getattr(exc, "violaciones", []):
            print(f"  - {violacion}")
        return 1
    except EstimadorError as exc:
        logger.error("Error de ejecución: %s", exc)
        print(f"\n❌ Error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
