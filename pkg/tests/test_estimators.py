import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qccopt import IterativeQCC, QCCOptimizer, oracle
from qccopt import operator as qop
from qccopt.errors import ContractViolation
from qccopt.operator import QubitOperator
from qccopt.validation import check_amplitudes, check_operator, check_reference, format_reference


@pytest.fixture
def molecule():
    rng = np.random.default_rng(21)
    return oracle.random_molecular_like(4, 12, rng, coupling=0.2)


def test_params_roundtrip():
    est = QCCOptimizer(n_generators=4, order=None, reference="0101")
    p = est.get_params()
    assert p["n_generators"] == 4 and p["order"] is None and p["reference"] == "0101"
    c = clone(est).set_params(order=3)
    assert c.order == 3 and est.order is None
    assert "drop_threshold" in IterativeQCC().get_params()


def test_not_fitted():
    with pytest.raises(NotFittedError):
        QCCOptimizer().predict()
    with pytest.raises(NotFittedError):
        IterativeQCC().transform(QubitOperator.from_text("1 Z0", 1))


def test_fit_predict_transform(molecule):
    h, ref = molecule
    est = QCCOptimizer(n_generators=4, order=None, reference=ref).fit(h)
    assert est.converged_
    assert est.predict() == pytest.approx(est.energy_, abs=1e-12)
    assert est.predict(np.zeros(len(est.generators_))) == pytest.approx(
        qop.matrix_element(h, ref, ref), abs=1e-12)
    dressed = est.transform(h)
    assert qop.matrix_element(dressed, ref, ref) == pytest.approx(est.energy_, abs=1e-9)
    assert est.score(h) == pytest.approx(-est.energy_, abs=1e-9)
    assert len(est.transform([h, h])) == 2
    e0, _ = oracle.dense_ground(h)
    assert est.energy_ >= e0 - 1e-10


def test_bitstring_reference(molecule):
    h, ref = molecule
    bits = format_reference(ref, 4)
    a = QCCOptimizer(n_generators=3, reference=bits).fit(h)
    b = QCCOptimizer(n_generators=3, reference=ref).fit(h)
    assert a.reference_ == ref
    assert a.energy_ == b.energy_


def test_fit_accepts_text_and_explicit_generators():
    h = "0.5 Z0\n-0.3 Z1\n0.2 X0 X1"
    est = QCCOptimizer(order=None, warm_start="dha").fit(h, generators=["Y0 X1"])
    # Y0 X1 couples |00> and |11> only: lowest eigenvalue of [[0.2, 0.2], [0.2, -0.2]]
    assert est.energy_ == pytest.approx(-np.sqrt(0.08), abs=1e-9)


def test_iterative_estimator(molecule):
    h, ref = molecule
    est = IterativeQCC(n_iterations=25, drop_threshold=0.0, reference=ref).fit(h)
    e0, _ = oracle.dense_ground(h)
    assert abs(est.energy_ - e0) < 1e-6
    assert est.energies_[0] == qop.matrix_element(h, ref, ref)
    out = est.transform(h)
    assert qop.matrix_element(out, ref, ref) == pytest.approx(est.energy_, abs=1e-10)
    assert est.score(h) == pytest.approx(-est.energy_, abs=1e-10)


def test_validation_helpers(tmp_path):
    assert check_reference(None, 3) == 0
    assert check_reference("011", 3) == 3
    with pytest.raises(ContractViolation):
        check_reference("01", 3)
    with pytest.raises(ContractViolation):
        check_reference("0a1", 3)
    with pytest.raises(ContractViolation):
        check_reference(8, 3)
    with pytest.raises(ContractViolation):
        check_amplitudes([0.1, np.nan], 2)
    with pytest.raises(ContractViolation):
        check_amplitudes([0.1], 2)
    path = tmp_path / "h.txt"
    qop.save(QubitOperator.from_text("1 Z0\n2 X0 X1", 2), path)
    assert len(check_operator(str(path))) == 2
    with pytest.raises(TypeError):
        check_operator(3.0)
    with pytest.raises(ContractViolation):
        check_operator(QubitOperator.from_text("1 Z0", 2), n_qubits=3)
