"""
verificar_garantias.py — Chequeo de salud de las garantías del estimador.

Responde a una pregunta concreta: *¿el motor y los analizadores siguen
cumpliendo lo que prometen sobre el corpus?*

Comprueba:
  1. Árbol aleatorio: creencias exactas tras diámetro + 1 iteraciones.
  2. Monotonía de los mensajes de información y Q_{i→i,j}(k) ⪯ Ω_{i,j}.
  3. Envolvente αρ^{k−1} de mensajes (k ≥ 1) y creencias (k ≥ 2).
  4. Estabilidad: anillo-8 y rueda-7 convergen; la guarda de divergencia
     salta con mediciones de escala 1e13.
  5. Tasa de convergencia de x̂_1(k) en anillo-8 frente a ρ.
  6. Sándwich de Q_1(d_1) contra Q_1^ML en anillos de 6, 8 y 10 nodos.
  7. Cota de dos lados de Q_1(∞) y su decaimiento con d_1.
  8. Acuerdo de los tres cálculos del error por capas.
  9. Cota κη^{d} del error de estimación en todos los grafos con ciclos.
 10. Cota asintótica del error en anillo-12-preciso.
 11. Determinismo byte a byte de la CLI (misma semilla, distintos hilos).

Uso:
    python verificar_garantias.py            # informe completo
    python verificar_garantias.py --rapido   # menos semillas

Código de salida: 0 si todo está bien, 1 si hay algún fallo.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from algebra import norma_espectral, precede_psd
from config import HOLGURA_MONOTONIA, HOLGURA_PSD, configurar_consola_utf8, setup_logging
from convergencia import analizar_estabilidad, delta_congruente
from corpus import CORPUS, EntradaCorpus, buscar_entrada
from escenarios import generar_escenario
from formato_grafo import ParametrosGenerador
from mensajes import TerminationReason, run
from modelo_grafo import MeasurementGraph, check_assumption1, compute_omega, cycle_free_depth
from oraculo import solve_ml
from precision import analizar_precision, reduced_constants, x_accuracy

logger = logging.getLogger(__name__)

_OK = "[ OK ]"
_FALLO = "[FALLO]"
_AVISO = "[AVISO]"

SEMILLAS_COMPLETAS = 20
SEMILLAS_RAPIDAS = 3
TOL_ARBOL = 1e-9
HOLGURA_TASA = 0.05
ESCALA_DIVERGENTE = 1e13


class Resultado:
    """Acumula el resultado de las comprobaciones."""

    def __init__(self) -> None:
        self.fallos: list[str] = []
        self.avisos: list[str] = []

    def ok(self, mensaje: str) -> None:
        print(f"  {_OK} {mensaje}")

    def fallo(self, mensaje: str) -> None:
        print(f"  {_FALLO} {mensaje}")
        self.fallos.append(mensaje)

    def aviso(self, mensaje: str) -> None:
        print(f"  {_AVISO} {mensaje}")
        self.avisos.append(mensaje)

    def comprobar(self, condicion: bool, mensaje: str) -> None:
        if condicion:
            self.ok(mensaje)
        else:
            self.fallo(mensaje)


def _escenario(entrada: EntradaCorpus, semilla: int, **generador) -> MeasurementGraph:
    parametros = ParametrosGenerador(**generador) if generador else None
    return generar_escenario(entrada.documento(), semilla, parametros).grafo


def _ciclicos() -> list[EntradaCorpus]:
    return [e for e in CORPUS if e.ciclico]


def _pendiente(x: list[float], y: list[float]) -> float:
    return float(np.polyfit(np.asarray(x, dtype=float), np.log(np.asarray(y, dtype=float)), 1)[0])


# ════════════════════════════════════════════════════════════
# CONVERGENCIA
# ════════════════════════════════════════════════════════════


def verificar_arbol(res: Resultado) -> None:
    print("\n1. Exactitud en árboles")
    graph = _escenario(buscar_entrada("arbol-15"), 1)
    k = graph.diametro() + 1
    traza = run(graph, k, 1e-12, min_iters=k)
    oraculo = solve_ml(graph)
    peor = 0.0
    for i in graph.ids:
        creencia = traza.en(k).creencias[i]
        escala_x = max(1.0, float(np.linalg.norm(oraculo.x[i])))
        escala_s = max(1.0, norma_espectral(oraculo.Sigma[i]))
        peor = max(
            peor,
            float(np.linalg.norm(creencia.x_hat - oraculo.x[i])) / escala_x,
            norma_espectral(creencia.Sigma - oraculo.Sigma[i]) / escala_s,
        )
    res.comprobar(peor < TOL_ARBOL, f"arbol-15: error relativo {peor:.2e} en k = {k}")


def verificar_monotonia(res: Resultado) -> None:
    print("\n2. Monotonía de los mensajes de información")
    for entrada in CORPUS:
        graph = entrada.grafo
        if not check_assumption1(graph).cumple:
            continue
        traza = run(graph, 51, 1e-12, min_iters=51, guardar_mensajes=True)
        omegas = {r: compute_omega(graph, *r) for r in graph.ranuras}
        violaciones = 0
        for k in range(1, min(51, len(traza.mensajes) - 1)):
            actual, siguiente = traza.mensajes[k], traza.mensajes[k + 1]
            for r in graph.ranuras:
                Q_k, Q_sig = actual.var_a_factor[r].Q, siguiente.var_a_factor[r].Q
                R_k, R_sig = actual.derivados[r].R, siguiente.derivados[r].R
                if not (
                    precede_psd(Q_sig, Q_k, HOLGURA_MONOTONIA)
                    and precede_psd(R_k, R_sig, HOLGURA_MONOTONIA)
                    and precede_psd(Q_k, omegas[r], HOLGURA_MONOTONIA)
                ):
                    violaciones += 1
        res.comprobar(violaciones == 0, f"{entrada.nombre}: {violaciones} violaciones en k = 1..50")


def verificar_envolvente(res: Resultado) -> None:
    print("\n3. Envolvente de la información")
    for nombre in ("anillo-8", "anillo-12-preciso"):
        graph = buscar_entrada(nombre).grafo
        estabilidad = analizar_estabilidad(graph)
        res.comprobar(estabilidad.rho < 1.0, f"{nombre}: ρ = {estabilidad.rho:.4f} < 1")
        traza = run(graph, 30, 1e-12, min_iters=30, guardar_mensajes=True)
        violaciones_mensajes = violaciones_nodos = 0
        for k in range(1, traza.iteraciones + 1):
            cota = estabilidad.alpha * estabilidad.rho ** (k - 1)
            for r, Q_inf in estabilidad.fp.Q_var.items():
                brecha = norma_espectral(delta_congruente(traza.mensajes[k].var_a_factor[r].Q, Q_inf))
                if brecha > cota * (1.0 + HOLGURA_PSD) + HOLGURA_PSD:
                    violaciones_mensajes += 1
            # Q_i(1) lleva la información completa de las aristas: la cota por nodo rige desde k = 2.
            if k == 1:
                continue
            for i in graph.ids:
                brecha = norma_espectral(delta_congruente(traza.en(k).creencias[i].Q, estabilidad.fp.Q_nodo[i]))
                if brecha > cota * (1.0 + HOLGURA_PSD) + HOLGURA_PSD:
                    violaciones_nodos += 1
        res.comprobar(
            violaciones_mensajes == 0,
            f"{nombre}: ‖ΔQ_(i→i,j)(k)‖ ≤ αρ^(k−1) en k = 1..30 ({violaciones_mensajes} violaciones)",
        )
        res.comprobar(
            violaciones_nodos == 0,
            f"{nombre}: ‖ΔQ_i(k)‖ ≤ αρ^(k−1) en k = 2..30 ({violaciones_nodos} violaciones)",
        )


def verificar_estabilidad(res: Resultado, semillas: int) -> None:
    print("\n4. Estabilidad y guarda de divergencia")
    anillo = buscar_entrada("anillo-8")
    rueda = buscar_entrada("rueda-7")
    reporte_anillo = analizar_estabilidad(anillo.grafo)
    reporte_rueda = analizar_estabilidad(rueda.grafo)
    res.comprobar(reporte_anillo.veredicto.estable, f"anillo-8: radio(Ā) = {reporte_anillo.veredicto.radio:.4f} < 1")
    res.comprobar(
        reporte_rueda.veredicto.estable and not reporte_rueda.condicion.cumple,
        f"rueda-7: radio(Ā) = {reporte_rueda.veredicto.radio:.4f}, condición distribuida "
        f"{reporte_rueda.condicion.estado} (ρ̄ = {reporte_rueda.condicion.rho_bar:.3f})",
    )
    for semilla in range(1, semillas + 1):
        for entrada in (anillo, rueda):
            traza = run(_escenario(entrada, semilla), 500, 1e-10)
            res.comprobar(
                traza.razon is TerminationReason.CONVERGIDO,
                f"{entrada.nombre} semilla {semilla}: {traza.razon.value} en k = {traza.iteraciones}",
            )
        traza = run(_escenario(anillo, semilla, escala=ESCALA_DIVERGENTE), 200, 1e-10)
        res.comprobar(
            traza.razon is TerminationReason.DIVERGENCIA,
            f"anillo-8 × {ESCALA_DIVERGENTE:g} semilla {semilla}: {traza.razon.value}",
        )


def verificar_tasa(res: Resultado) -> None:
    print("\n5. Tasa de convergencia de x̂_1(k)")
    graph = _escenario(buscar_entrada("anillo-8"), 3)
    rho = analizar_estabilidad(graph).rho
    oraculo = solve_ml(graph)
    ks = [8, 16, 24, 32, 40]
    traza = run(graph, max(ks), 1e-15, min_iters=max(ks))
    errores = [float(np.linalg.norm(traza.en(k).creencias[1].x_hat - oraculo.x[1])) for k in ks]
    pendiente = _pendiente(ks, errores)
    res.comprobar(
        pendiente <= math.log(rho) + HOLGURA_TASA,
        f"anillo-8: pendiente {pendiente:.4f} ≤ log ρ + {HOLGURA_TASA} = {math.log(rho) + HOLGURA_TASA:.4f}",
    )


# ════════════════════════════════════════════════════════════
# PRECISIÓN
# ════════════════════════════════════════════════════════════


def verificar_sandwich(res: Resultado) -> None:
    print("\n6–7. Cotas de información en anillos")
    brechas, profundidades, distancias_inf, rhos = [], [], [], []
    for nombre in ("anillo-6", "anillo-8", "anillo-10"):
        graph = buscar_entrada(nombre).grafo
        reporte = analizar_precision(graph)[0]
        res.comprobar(
            bool(reporte.q.cumple_d),
            f"{nombre}: 0 ⪯ Q_1(d)−Q^ML ⪯ {reporte.q.cota:.3e}·Q^ML (brecha {reporte.q.gap_max:.3e})",
        )
        res.comprobar(bool(reporte.q.cumple_inf), f"{nombre}: cota de dos lados de Q_1(∞)")
        brechas.append(reporte.q.gap_max)
        profundidades.append(int(reporte.d))
        rhos.append(reduced_constants(graph, 1)[1])
        estabilidad = analizar_estabilidad(graph)
        distancias_inf.append(norma_espectral(estabilidad.fp.Q_nodo[1] - solve_ml(graph).Q[1]))
    res.comprobar(
        all(a > b for a, b in zip(brechas, brechas[1:])),
        "la brecha de Q_1(d) decrece con el tamaño del anillo",
    )
    pendiente = _pendiente(profundidades, distancias_inf)
    limite = math.log(max(rhos)) + HOLGURA_TASA
    res.comprobar(pendiente <= limite, f"‖Q_1(∞)−Q^ML‖: pendiente {pendiente:.3f} ≤ {limite:.3f}")


def verificar_capas(res: Resultado) -> None:
    print("\n8. Tres cálculos del error por capas")
    for nombre in ("anillo-8", "anillo-vectorial"):
        graph = _escenario(buscar_entrada(nombre), 5)
        reporte = analizar_precision(graph)[0]
        res.comprobar(
            bool(reporte.capas.acuerdo),
            f"{nombre}: discrepancia {reporte.capas.discrepancia:.2e}",
        )


def verificar_cota_error(res: Resultado, semillas: int) -> None:
    print("\n9. Cota κη^d del error de estimación")
    for entrada in _ciclicos():
        base = entrada.grafo
        estabilidad = analizar_estabilidad(base)
        necesarias = max(int(cycle_free_depth(base, i)) for i in base.ids) + 2
        violaciones = 0
        for semilla in range(1, semillas + 1):
            graph = _escenario(entrada, semilla)
            oraculo = solve_ml(graph)
            traza = run(graph, necesarias, 1e-12, min_iters=necesarias)
            for i in graph.ids:
                registro = x_accuracy(graph, i, traza, oraculo, estabilidad.eta, estabilidad)
                if registro.cumple is False:
                    violaciones += 1
        res.comprobar(violaciones == 0, f"{entrada.nombre}: {violaciones} violaciones en {semillas} semillas")


def verificar_asintotica(res: Resultado) -> None:
    print("\n10. Cota asintótica del error")
    graph = _escenario(buscar_entrada("anillo-12-preciso"), 11)
    for reporte in analizar_precision(graph):
        registro = reporte.x
        if not registro.asintotica_aplica or registro.cumple_inf is None:
            res.fallo(f"anillo-12-preciso, nodo {reporte.nodo}: fuera del régimen de pequeñez")
            continue
        res.comprobar(
            registro.cumple_inf,
            f"anillo-12-preciso, nodo {reporte.nodo}: ‖Δx(∞)‖² = {registro.error_inf:.3e} ≤ {registro.cota_inf:.3e}",
        )
    registro = analizar_precision(_escenario(buscar_entrada("anillo-12"), 11))[0].x
    if not registro.asintotica_aplica:
        res.aviso("anillo-12: ρ^(d−1) ≥ 1e-3, la cota asintótica no aplica")


def verificar_determinismo(res: Resultado) -> None:
    print("\n11. Determinismo de la CLI")
    from main import main as cli

    with tempfile.TemporaryDirectory() as tmp:
        raiz = Path(tmp)
        salidas = []
        for etiqueta, hilos in (("a", "1"), ("b", "1"), ("c", "4")):
            escenario = raiz / f"escenario_{etiqueta}.json"
            carpeta = raiz / etiqueta
            cli(["generate", "--corpus", "anillo-8", "--seed", "42", "--out", str(escenario)])
            cli(["run", "--scenario", str(escenario), "--out", str(carpeta), "--hilos", hilos])
            salidas.append({p.name: p.read_bytes() for p in sorted(carpeta.iterdir())} | {
                "escenario": escenario.read_bytes()
            })
        logging.getLogger().setLevel(logging.WARNING)
        res.comprobar(salidas[0] == salidas[1], "misma semilla: bytes idénticos")
        res.comprobar(salidas[0] == salidas[2], "1 vs 4 hilos: bytes idénticos")


def main() -> int:
    """Ejecuta las comprobaciones y devuelve el código de salida."""
    analizador = argparse.ArgumentParser(
        description="Verifica las garantías de convergencia y precisión sobre el corpus."
    )
    analizador.add_argument(
        "--rapido",
        action="store_true",
        help=f"Usar {SEMILLAS_RAPIDAS} semillas en lugar de {SEMILLAS_COMPLETAS}.",
    )
    args = analizador.parse_args()

    configurar_consola_utf8()
    setup_logging()
    logging.getLogger().setLevel(logging.WARNING)

    semillas = SEMILLAS_RAPIDAS if args.rapido else SEMILLAS_COMPLETAS
    print("=" * 66)
    print("VERIFICACIÓN DE GARANTÍAS DEL ESTIMADOR GBP")
    print("=" * 66)

    res = Resultado()
    verificar_arbol(res)
    verificar_monotonia(res)
    verificar_envolvente(res)
    verificar_estabilidad(res, min(semillas, 5))
    verificar_tasa(res)
    verificar_sandwich(res)
    verificar_capas(res)
    verificar_cota_error(res, semillas)
    verificar_asintotica(res)
    verificar_determinismo(res)

    print("\n" + "=" * 66)
    if res.fallos:
        print(f"RESULTADO: {len(res.fallos)} FALLO(S), {len(res.avisos)} aviso(s)")
        for fallo in res.fallos:
            print(f"  - {fallo}")
        print("=" * 66)
        return 1

    print(f"RESULTADO: todo correcto ({len(res.avisos)} aviso(s))")
    print("=" * 66)
    return 0


if __name__ == "__main__":
    sys.exit(main())
