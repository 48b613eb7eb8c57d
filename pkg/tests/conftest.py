"""Fixtures compartidas: grafos del corpus y escenarios sembrados."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

RAIZ = Path(__file__).resolve().parents[1]
if str(RAIZ) not in sys.path:
    sys.path.insert(0, str(RAIZ))

import corpus  # noqa: E402
from escenarios import generar_escenario  # noqa: E402


@pytest.fixture
def anillo8():
    return corpus.anillo(8)


@pytest.fixture
def triangulo():
    return corpus.anillo(3)


@pytest.fixture
def arbol():
    return corpus.arbol_aleatorio(15)


@pytest.fixture
def escenario_anillo8():
    """Anillo de 8 con mediciones sembradas (semilla 7)."""
    return generar_escenario(corpus.buscar_entrada("anillo-8").documento(), 7)


@pytest.fixture
def escenario_arbol():
    return generar_escenario(corpus.buscar_entrada("arbol-15").documento(), 3)
