import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from qccopt import oracle
from qccopt import generators as gen
from qccopt.errors import ContractViolation
from qccopt.operator import QubitOperator
from qccopt.pauli import PauliWord

from conftest import distinct_generators


def commutator_gradient(h, t, ref=0):
    hm = oracle.operator_matrix(h)
    tm = oracle.pauli_matrix(t).toarray()
    v = oracle.basis_vector(h.n_qubits, ref)
    val = -0.5j * (v.conj() @ (hm @ tm - tm @ hm) @ v)
    assert abs(val.imag) < 1e-12
    return val.real


def test_gradient_examples():
    x0 = QubitOperator.from_text("1.0 X0", 1)
    y0 = PauliWord.from_text("Y0", 1)
    assert gen.gradient(x0, y0) == pytest.approx(1.0)
    diag = QubitOperator.from_text("0.3 Z0\n-1.2 Z0 Z1\n0.5 I", 2)
    assert gen.gradient(diag, PauliWord.from_text("Y0 X1", 2)) == 0.0
    commuting = QubitOperator.from_text("1.0 X0 X1", 3)
    w = PauliWord.from_text("Y0 Y1 Y2", 3)
    assert commutator_gradient(commuting, w) == 0.0 == gen.gradient(commuting, w)


def test_gradient_matches_commutator(rng):
    for _ in range(5):
        h = oracle.random_hamiltonian(5, 30, rng, real=False)
        ref = int(rng.integers(0, 32))
        for t in distinct_generators(5, 6, rng):
            assert abs(gen.gradient(h, t, ref) - commutator_gradient(h, t, ref)) < 1e-12


def test_diag_energy_examples(rng):
    c = QubitOperator.identity(3, 0.7)
    for t in distinct_generators(3, 3, rng):
        assert gen.diag_energy(c, t) == pytest.approx(0.7)
    assert gen.diag_energy(QubitOperator.from_text("1 Z0", 1), PauliWord.from_text("Y0", 1)) == -1.0


def test_diag_energy_matches_dense(rng):
    h = oracle.random_hamiltonian(6, 30, rng)
    hm = oracle.operator_matrix(h).real
    for t in distinct_generators(6, 8, rng):
        _, w = gen.excited_state(t, 0)
        assert abs(gen.diag_energy(h, t) - hm[w, w]) < 1e-12


def test_propose_generators():
    diag = QubitOperator.from_text("0.3 Z0\n-1.2 Z0 Z1", 2)
    assert len(gen.propose_generators(diag)) == 0
    pool = gen.propose_generators(QubitOperator.from_text("0.25 X0", 1))
    assert pool.generators == (PauliWord.from_text("Y0", 1),)
    assert pool.grads[0] == pytest.approx(0.25)


def test_pool_size_and_uniqueness(rng):
    h = oracle.random_hamiltonian(6, 40, rng)
    pool = gen.propose_generators(h)
    assert len(pool) == len([x for x in h.x_masks() if x])
    assert len(set(w.x_mask for w in pool.generators)) == len(pool)
    assert all(w.is_hermitian() and w.y_count % 2 == 1 for w in pool.generators)


def test_ranking_values():
    r = gen.ranking_values([0.0, 0.3, 0.1], [1.0, 0.0, 1.0])
    assert r[0] == 0.0
    assert r[1] == pytest.approx(math.pi / 2)
    assert r[2] == pytest.approx(0.19739555984988078, abs=1e-15)


@given(st.floats(1e-6, 1e3), st.floats(1e-8, 0.005), st.booleans())
def test_small_coupling_limit(d, ratio, negative):
    ratio = -ratio if negative else ratio
    g = 0.5 * ratio * d
    r = gen.ranking_values([g], [d])[0]
    x = abs(2 * g / d)
    assert abs(r - x) / x <= 1e-4


def test_rank_sorted_and_scale_invariant(rng):
    h = oracle.random_hamiltonian(6, 40, rng)
    a = gen.rank(gen.propose_generators(h))
    assert np.all(np.diff(a.rankings) <= 0)
    b = gen.rank(gen.propose_generators(h.scaled(3.7)))
    assert a.generators == b.generators


def test_degenerate_tie_break():
    pool = gen.GeneratorPool(
        tuple(gen.canonical_generator(3, x) for x in (6, 3, 5, 1)),
        np.array([0.1, 0.1, 0.2, 0.1]), np.array([1.0, 1.0, 1.0, 1.0]), 0, 0.0)
    ranked = gen.rank(pool)
    assert [w.x_mask for w in ranked.generators] == [5, 1, 3, 6]


def _pool_with_rankings(values):
    n = len(values)
    gens = tuple(gen.canonical_generator(4, x) for x in range(1, n + 1))
    return gen.GeneratorPool(gens, np.ones(n), np.zeros(n), 0, 0.0, np.asarray(values))


def test_select_examples():
    pool = _pool_with_rankings([0.5, 0.3, 0.3, 0.1])
    out, adj = gen.select(pool, 2)
    assert len(out) == 3 and adj == 1
    out, adj = gen.select(pool, 2, "shrink")
    assert len(out) == 1 and adj == -1
    assert len(gen.select(pool, 10)[0]) == 4
    with pytest.raises(ContractViolation):
        gen.select(pool, 0)
    # shrink would empty the selection, so it extends instead
    assert len(gen.select(_pool_with_rankings([0.3, 0.3, 0.1]), 1, "shrink")[0]) == 2


@given(st.lists(st.sampled_from([0.1, 0.2, 0.3, 0.4]), min_size=1, max_size=12), st.integers(1, 12))
@settings(max_examples=200)
def test_select_never_splits_groups(values, m):
    values = sorted(values, reverse=True)
    out, _ = gen.select(_pool_with_rankings(values), m)
    rest = values[len(out):]
    if rest:
        assert round(min(out.rankings), 11) != round(max(rest), 11)


def test_dha_trivial_and_two_by_two(rng):
    zero = gen.GeneratorPool((gen.canonical_generator(2, 1),), np.zeros(1), np.ones(1), 0, -1.0)
    sol = gen.dha_solve(zero)
    assert sol.energy == -1.0 and np.all(sol.t == 0)
    e0, e1, g = -1.0, 0.5, 0.3
    one = gen.GeneratorPool((gen.canonical_generator(2, 1),), np.array([g]), np.array([e1]), 0, e0)
    expect = 0.5 * (e0 + e1) - math.sqrt((0.5 * (e0 - e1)) ** 2 + g * g)
    assert abs(gen.dha_solve(one).energy - expect) < 1e-14


def test_dha_matches_dense_eigensolver(rng):
    for m in (5, 50, 200):
        e0 = float(rng.normal())
        diag, g = rng.normal(size=m) * 2, rng.normal(size=m) * 0.5
        e, _ = gen.arrowhead_lowest(e0, diag, g)
        ref = eigh(oracle.dense_arrowhead(e0, diag, g), eigvals_only=True)[0]
        assert abs(e - ref) < 1e-10
        assert e <= e0


def test_dha_solution_invariants(rng):
    h = oracle.random_hamiltonian(6, 40, rng)
    pool = gen.propose_generators(h)
    sol = gen.dha_solve(pool)
    assert sol.energy <= pool.e0
    assert np.all(np.abs(sol.t) < math.pi)
    # eigenvector check: (A - E) (1, C) = 0
    a = oracle.dense_arrowhead(pool.e0, pool.diag_energies, pool.grads)
    v = np.concatenate([[1.0], sol.c])
    np.testing.assert_allclose(a @ v, sol.energy * v, atol=1e-9)


def test_dha_ranking_mode(rng):
    h = oracle.random_hamiltonian(6, 40, rng)
    ranked = gen.rank(gen.propose_generators(h), mode="dha")
    assert np.all(np.diff(ranked.rankings) <= 0)
    with pytest.raises(ContractViolation):
        gen.rank(ranked, mode="bogus")
