"""Dense brute-force references used by the tests and the ``exact`` command.

Matrices here are assembled from Kronecker products of the 2x2 Pauli
matrices, independently of the bit-mask formulas used by the fast paths.
Qubit 0 is the least-significant bit of the state index, i.e. the rightmost
Kronecker factor.
"""

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError
from .operator import QubitOperator
from .pauli import PauliWord

DENSE_QUBIT_CAP = 14

_SIGMA = {
    "I": sp.identity(2, dtype=complex, format="csr"),
    "X": sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex)),
    "Y": sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex)),
    "Z": sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex)),
}


def _check_cap(n, cap):
    if n > cap:
        raise DimensionError(f"dense oracle limited to {cap} qubits, got {n}")


def pauli_matrix(word, cap=DENSE_QUBIT_CAP):
    """Sparse ``2**n`` matrix of *word* including its phase."""
    _check_cap(word.n_qubits, cap)
    return _pauli_matrix(word)


@lru_cache(maxsize=4096)
def _pauli_matrix(word):
    n = word.n_qubits
    out = sp.identity(1, dtype=complex, format="csr")
    for q in reversed(range(n)):
        bit = 1 << q
        xb, zb = word.x_mask & bit, word.z_mask & bit
        label = "Y" if xb and zb else "X" if xb else "Z" if zb else "I"
        out = sp.kron(out, _SIGMA[label], format="csr")
    # word = i**phase X Z while the Kronecker product is i**y_count X Z
    return (1j ** ((word.phase - word.y_count) % 4)) * out


def operator_matrix(op, cap=DENSE_QUBIT_CAP, dense=True):
    _check_cap(op.n_qubits, cap)
    total = _operator_matrix(op)
    return total.toarray() if dense else total.copy()


@lru_cache(maxsize=16)
def _operator_matrix(op):
    dim = 1 << op.n_qubits
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for c, w in op.words():
        total = total + c * _pauli_matrix(w)
    return total


def basis_vector(n_qubits, bits):
    v = np.zeros(1 << n_qubits, dtype=complex)
    v[int(bits)] = 1.0
    return v


def _words(generators):
    return list(getattr(generators, "generators", generators))


def dense_state(generators, t, reference=0, n_qubits=None, cap=DENSE_QUBIT_CAP):
    """``prod_k exp(-i t_k T_k / 2) |reference>`` applied right to left."""
    words = _words(generators)
    reference = getattr(generators, "reference", reference)
    if n_qubits is None:
        n_qubits = words[0].n_qubits
    _check_cap(n_qubits, cap)
    psi = basis_vector(n_qubits, reference)
    for w, a in zip(reversed(words), reversed(list(t))):
        p = pauli_matrix(w, cap)
        psi = np.cos(a / 2) * psi - 1j * np.sin(a / 2) * (p @ psi)
    return psi


def dense_energy(h, generators, t, reference=0, cap=DENSE_QUBIT_CAP):
    """Exact QCC energy ``<0|U^dagger H U|0>``."""
    hm = operator_matrix(h, cap, dense=False)
    psi = dense_state(generators, t, reference, h.n_qubits, cap)
    return float(np.real(np.vdot(psi, hm @ psi)))


def dense_gradient(h, generators, t, reference=0, cap=DENSE_QUBIT_CAP):
    """Analytic dense gradient: ``2 Re <psi|H|d_k psi>``."""
    words = _words(generators)
    reference = getattr(generators, "reference", reference)
    t = np.asarray(t, dtype=float)
    hm = operator_matrix(h, cap, dense=False)
    psi = dense_state(words, t, reference, h.n_qubits, cap)
    h_psi = hm @ psi
    grad = np.empty(len(t))
    mats = [pauli_matrix(w, cap) for w in words]
    for k in range(len(t)):
        d = basis_vector(h.n_qubits, reference)
        for j in reversed(range(len(t))):
            a = t[j]
            if j == k:
                d = -0.5 * np.sin(a / 2) * d - 0.5j * np.cos(a / 2) * (mats[j] @ d)
            else:
                d = np.cos(a / 2) * d - 1j * np.sin(a / 2) * (mats[j] @ d)
        grad[k] = 2.0 * np.real(np.vdot(h_psi, d))
    return grad


def dense_ground(h, cap=12):
    """Lowest eigenpair of the full Hermitian matrix of *h*."""
    w, v = np.linalg.eigh(operator_matrix(h, cap))
    return float(w[0]), v[:, 0]


def dense_spectrum(h, cap=12):
    return np.linalg.eigvalsh(operator_matrix(h, cap))


def fd_gradient(objective, t, h_step=1e-5):
    """Central finite differences of a scalar function."""
    t = np.asarray(t, dtype=float)
    grad = np.empty_like(t)
    for k in range(len(t)):
        e = np.zeros_like(t)
        e[k] = h_step
        grad[k] = (objective(t + e) - objective(t - e)) / (2 * h_step)
    return grad


def dense_arrowhead(e0, diag, offdiag):
    m = len(diag)
    a = np.zeros((m + 1, m + 1))
    a[0, 0] = e0
    a[0, 1:] = offdiag
    a[1:, 0] = offdiag
    a[np.arange(1, m + 1), np.arange(1, m + 1)] = diag
    return a


# -- random test instances --------------------------------------------------

def random_word(n_qubits, rng, real=True):
    """Random Hermitian word; with ``real`` it has an even ``Y`` count."""
    while True:
        x = int(rng.integers(0, 1 << n_qubits))
        z = int(rng.integers(0, 1 << n_qubits))
        y = (x & z).bit_count()
        if not real or y % 2 == 0:
            return PauliWord(n_qubits, x, z, y)


def random_hamiltonian(n_qubits, n_terms, rng, real=True, offdiag_scale=1.0,
                       diag_scale=1.0):
    """Random Hermitian operator with ``n_terms`` distinct words.

    ``real=True`` keeps only words with real matrix elements, like the qubit
    images of molecular Hamiltonians.  Diagonal (Z-only) and flip terms are
    drawn with separate scales so weakly correlated instances can be built.
    """
    terms = {}
    while len(terms) < n_terms:
        w = random_word(n_qubits, rng, real)
        key = (w.x_mask, w.z_mask)
        if key in terms:
            continue
        scale = diag_scale if w.x_mask == 0 else offdiag_scale
        terms[key] = scale * float(rng.normal())
    return QubitOperator(n_qubits, terms)


def random_generator(n_qubits, rng):
    """Random word with an odd number of ``Y`` factors."""
    while True:
        x = int(rng.integers(1, 1 << n_qubits))
        z = int(rng.integers(0, 1 << n_qubits))
        y = (x & z).bit_count()
        if y % 2 == 1:
            return PauliWord(n_qubits, x, z, y)


def lowest_diagonal_state(h):
    """Basis state with the smallest diagonal energy (a mean-field reference)."""
    n = h.n_qubits
    if n > DENSE_QUBIT_CAP:
        raise DimensionError(f"{n} qubits exceeds the dense cap {DENSE_QUBIT_CAP}")
    return int(np.argmin(operator_matrix(h, DENSE_QUBIT_CAP, dense=False).diagonal().real))


def random_molecular_like(n_qubits, n_terms, rng, coupling=0.3, field=(0.5, 2.0)):
    """Weakly correlated instance: per-qubit ``Z`` fields plus small random terms.

    The fields make the diagonal non-degenerate, so the lowest basis state is a
    good reference.  Returns ``(h, reference)``.
    """
    h = random_hamiltonian(n_qubits, n_terms, rng, offdiag_scale=coupling, diag_scale=coupling)
    eps = rng.uniform(*field, n_qubits) * rng.choice([-1.0, 1.0], n_qubits)
    h = h + QubitOperator(n_qubits, {(0, 1 << i): float(e) for i, e in enumerate(eps)})
    return h, lowest_diagonal_state(h)
