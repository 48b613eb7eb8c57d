import numpy as np
import pytest

from algebra import (
    autovalor_max_relativo,
    congruencia_normalizada,
    es_spd,
    informacion,
    inversa_spd,
    precede_psd,
    raiz_inversa_spd,
    raiz_psd,
    resolver_spd,
)
from exceptions import MatrizSingularError


def test_es_spd_distingue_indefinidas():
    assert es_spd(np.array([[2.0, 0.5], [0.5, 1.0]]))
    assert not es_spd(np.array([[1.0, 0.0], [0.0, -0.1]]))
    assert not es_spd(np.zeros((2, 2)))
    assert es_spd(np.zeros((0, 0)))


def test_raices_simetricas():
    M = np.array([[4.0, 1.0], [1.0, 3.0]])
    raiz = raiz_psd(M)
    np.testing.assert_allclose(raiz @ raiz, M, atol=1e-12)
    inversa = raiz_inversa_spd(M)
    np.testing.assert_allclose(inversa @ M @ inversa, np.eye(2), atol=1e-12)


def test_raiz_inversa_rechaza_singular():
    with pytest.raises(MatrizSingularError):
        raiz_inversa_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_resolver_e_inversa():
    M = np.array([[4.0, 1.0], [1.0, 3.0]])
    b = np.array([1.0, 2.0])
    np.testing.assert_allclose(M @ resolver_spd(M, b), b, atol=1e-12)
    np.testing.assert_allclose(inversa_spd(M) @ M, np.eye(2), atol=1e-12)


def test_informacion_sin_filas_es_nula():
    assert np.array_equal(informacion(np.zeros((0, 3)), np.zeros((0, 0))), np.zeros((3, 3)))
    np.testing.assert_allclose(informacion(np.array([[1.0]]), np.array([[5.0]])), [[0.2]])


def test_autovalor_relativo_y_congruencia():
    assert autovalor_max_relativo(np.array([[1.0]]), np.array([[1.2]])) == pytest.approx(1 / 1.2)
    np.testing.assert_allclose(
        congruencia_normalizada(np.array([[2.0]]), np.array([[4.0]])), [[0.5]]
    )


def test_precede_psd_con_holgura():
    A = np.diag([1.0, 2.0])
    assert precede_psd(A, A + np.eye(2), 1e-9)
    assert precede_psd(A, A - 1e-12 * np.eye(2), 1e-9)
    assert not precede_psd(A, A - 0.1 * np.eye(2), 1e-9)
