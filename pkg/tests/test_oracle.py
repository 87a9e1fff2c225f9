import numpy as np
import pytest

from qccopt import oracle, sympoly
from qccopt.errors import DimensionError
from qccopt.operator import QubitOperator
from qccopt.pauli import PauliWord
from qccopt.state import apply_ansatz, reference

from conftest import random_instance


def test_dense_state_basics():
    h, gens, rng = random_instance(0)
    psi = oracle.dense_state(gens, np.zeros(8), reference=5)
    np.testing.assert_array_equal(psi, oracle.basis_vector(6, 5))
    for _ in range(10):
        psi = oracle.dense_state(gens, rng.uniform(-4, 4, 8))
        assert abs(np.linalg.norm(psi) - 1) < 1e-13


def test_dense_state_matches_sparse_state():
    h, gens, rng = random_instance(1)
    t = rng.uniform(-3, 3, 8)
    sparse = apply_ansatz(reference(6, 9), gens, t)
    np.testing.assert_allclose(oracle.dense_state(gens, t, 9).real, sparse.to_dense(), atol=1e-12)


def test_single_qubit_closed_forms():
    z0 = QubitOperator.from_text("1 Z0", 1)
    x0 = QubitOperator.from_text("1 X0", 1)
    y0 = [PauliWord.from_text("Y0", 1)]
    for t in (0.0, 0.4, -2.1):
        assert oracle.dense_energy(z0, y0, [t]) == pytest.approx(np.cos(t))
        assert oracle.dense_energy(x0, y0, [t]) == pytest.approx(np.sin(t))
        assert oracle.dense_gradient(z0, y0, [t])[0] == pytest.approx(-np.sin(t))


def test_dense_gradient_matches_fd_and_sympoly():
    h, gens, rng = random_instance(2)
    t = rng.uniform(-2, 2, 8)
    g = oracle.dense_gradient(h, gens, t)
    fd = oracle.fd_gradient(lambda x: oracle.dense_energy(h, gens, x), t, 1e-5)
    np.testing.assert_allclose(g, fd, atol=1e-8)
    np.testing.assert_allclose(g, sympoly.gradient(sympoly.compile(h, gens, 8), t), atol=1e-10)


def test_fd_gradient_trivial():
    np.testing.assert_allclose(oracle.fd_gradient(lambda t: float(t @ t), np.zeros(3)), 0.0)


def test_dense_ground():
    diag = QubitOperator.from_text("0.5 Z0\n-0.25 Z1\n0.1 Z0 Z1", 2)
    e0, vec = oracle.dense_ground(diag)
    diagonal = oracle.operator_matrix(diag).real.diagonal()
    assert e0 == pytest.approx(diagonal.min())
    assert abs(abs(vec[np.argmin(diagonal)]) - 1) < 1e-12
    e0, _ = oracle.dense_ground(QubitOperator.from_text("1 X0", 1))
    assert e0 == pytest.approx(-1.0)


def test_caps():
    with pytest.raises(DimensionError):
        oracle.dense_ground(QubitOperator.from_text("1 Z13", 14))
    with pytest.raises(DimensionError):
        oracle.dense_state([PauliWord.from_text("Y15", 16)], [0.1])


def test_lowest_diagonal_reference():
    rng = np.random.default_rng(4)
    h, ref = oracle.random_molecular_like(5, 10, rng)
    d = oracle.operator_matrix(h).real.diagonal()
    assert ref == int(np.argmin(d))
