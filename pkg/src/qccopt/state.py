"""Sparse real vectors over computational-basis states.

The basis array is kept sorted in natural binary order and duplicate free;
applying a generator exponential produces the flipped copy, sorts it and
merges it into the existing array in one pass.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _bits
from .errors import ContractViolation, DimensionError, HamiltonianParseError
from .pauli import real_generator_phase, require_generator


@dataclass(frozen=True)
class SparseState:
    """Real amplitudes ``coeffs[j]`` on basis states ``basis[j]``.

    ``norm_loss_log`` holds one norm factor per truncation event.
    """

    n_qubits: int
    basis: np.ndarray
    coeffs: np.ndarray
    norm_loss_log: tuple = field(default=())

    def __post_init__(self):
        if len(self.basis) != len(self.coeffs):
            raise ContractViolation("basis and coefficient arrays differ in length")

    def __len__(self):
        return len(self.basis)

    @property
    def norm(self):
        return math.sqrt(float(self.coeffs @ self.coeffs))

    def to_dict(self):
        return {int(b): float(c) for b, c in zip(self.basis, self.coeffs)}

    def to_dense(self):
        if self.n_qubits > 24:
            raise DimensionError("refusing to densify more than 24 qubits")
        out = np.zeros(1 << self.n_qubits)
        out[np.asarray(self.basis, dtype=np.int64)] = self.coeffs
        return out

    def is_canonical(self):
        b = self.basis
        return bool(len(b) < 2 or np.all(b[1:] > b[:-1]))


def reference(n_qubits, occupied=0):
    """Single basis state ``|occupied>`` with unit coefficient."""
    occupied = int(occupied)
    if not 0 <= occupied < (1 << n_qubits):
        raise DimensionError("reference wider than the register")
    return SparseState(n_qubits, _bits.as_basis([occupied], n_qubits), np.ones(1))


def _merge(basis_a, coeffs_a, basis_b, coeffs_b):
    """Merge two sorted, duplicate-free arrays, summing coincident coefficients."""
    pos = np.searchsorted(basis_a, basis_b)
    pos_c = np.minimum(pos, len(basis_a) - 1)
    same = basis_a[pos_c] == basis_b
    coeffs = coeffs_a.copy()
    np.add.at(coeffs, pos_c[same], coeffs_b[same])
    new_b, new_c, new_pos = basis_b[~same], coeffs_b[~same], pos[~same]
    if len(new_b) == 0:
        return basis_a, coeffs
    # new_pos is non-decreasing, so np.insert keeps the merged order
    return np.insert(basis_a, new_pos, new_b), np.insert(coeffs, new_pos, new_c)


def apply_generator_exponential(state, t_word, amplitude, cap=None):
    """Apply ``exp(-i * amplitude * t_word / 2)`` and truncate to *cap* if exceeded."""
    require_generator(t_word)
    if t_word.n_qubits != state.n_qubits:
        raise DimensionError("generator and state widths differ")
    if amplitude == 0.0:
        return state if cap is None or len(state) <= cap else truncate(state, cap)
    n = state.n_qubits
    half = 0.5 * amplitude
    c, s = math.cos(half), math.sin(half)
    phi = real_generator_phase(t_word)
    flip_coeffs = (s * phi) * _bits.z_signs(state.basis, t_word.z_mask, n) * state.coeffs
    flipped = state.basis ^ _bits.mask_scalar(t_word.x_mask, n)
    order = np.argsort(flipped, kind="stable")
    basis, coeffs = _merge(state.basis, c * state.coeffs, flipped[order], flip_coeffs[order])
    out = SparseState(n, basis, coeffs, state.norm_loss_log)
    if cap is not None and len(out) > cap:
        out = truncate(out, cap)
    return out


def truncate(state, cap):
    """Keep the *cap* largest-magnitude entries and renormalise.

    Ties in magnitude keep the smaller basis state.  No-op (and nothing
    logged) when the state already fits.
    """
    if cap < 1:
        raise ContractViolation("cap must be at least 1")
    if len(state) <= cap:
        return state
    # basis is sorted, so a stable sort on -|c| breaks ties toward smaller states
    keep = np.argsort(-np.abs(state.coeffs), kind="stable")[:cap]
    keep.sort()
    coeffs = state.coeffs[keep]
    lam = math.sqrt(float(coeffs @ coeffs))
    if lam == 0.0:
        raise ContractViolation("truncation kept only zero coefficients")
    return SparseState(state.n_qubits, state.basis[keep], coeffs / lam,
                       state.norm_loss_log + (lam,))


def apply_ansatz(state, generators, amplitudes, cap=None):
    """Apply ``prod_k exp(-i t_k T_k / 2)`` right to left (k = M first)."""
    generators = list(generators)
    if len(generators) != len(amplitudes):
        raise ContractViolation("one amplitude per generator required")
    for w, a in zip(reversed(generators), reversed(list(amplitudes))):
        state = apply_generator_exponential(state, w, float(a), cap)
    return state


def dump(state, path):
    """Write ``<bitstring> <coefficient>`` lines, bit ``n-1`` leftmost."""
    lines = [f"{int(b):0{state.n_qubits}b} {float(c)!r}"
             for b, c in zip(state.basis, state.coeffs)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dump(path):
    rows = []
    width = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            bits, coef = line.split()
            rows.append((int(bits, 2), float(coef)))
        except ValueError:
            raise HamiltonianParseError("expected '<bitstring> <coefficient>'", lineno,
                                        str(path)) from None
        width = len(bits) if width is None else width
    if width is None:
        raise HamiltonianParseError("empty state file", None, str(path))
    rows.sort()
    return SparseState(width, _bits.as_basis([r[0] for r in rows], width),
                       np.array([r[1] for r in rows]))
