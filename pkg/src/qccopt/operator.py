"""Sparse real-coefficient qubit operators.

A :class:`QubitOperator` maps Pauli masks ``(x_mask, z_mask)`` to the real
coefficient of the *canonical* Hermitian word on those masks (the plain
product of its ``X``/``Y``/``Z`` factors).  Terms with an odd number of ``Y``
factors have purely imaginary matrix elements; they are stored and dressed
like any other term but never contribute to the real matrix elements used by
the energy functionals.

Computational-basis convention: a ``z`` acting on a qubit whose bit is 0
gives ``+1``, on a bit equal to 1 gives ``-1``.
"""

import math
import warnings
from collections import defaultdict
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import _bits
from .errors import ContractViolation, DimensionError, HamiltonianParseError
from .pauli import PauliWord, commutes, require_generator

# rows handled per block when streaming <w'|H|w> products
ROW_CHUNK = 1 << 15


class QubitOperator:
    """Immutable sum of Hermitian Pauli words with real coefficients.

    Parameters
    ----------
    n_qubits : int
    terms : mapping, optional
        ``{(x_mask, z_mask): coefficient}``; exact zeros are dropped.
    """

    __slots__ = ("n_qubits", "_terms", "_groups")

    def __init__(self, n_qubits, terms=None):
        if n_qubits < 1:
            raise ContractViolation("n_qubits must be positive")
        self.n_qubits = int(n_qubits)
        limit = 1 << self.n_qubits
        clean = {}
        for (x, z), c in (terms or {}).items():
            x, z, c = int(x), int(z), float(c)
            if not (0 <= x < limit and 0 <= z < limit):
                raise DimensionError(f"term masks exceed {n_qubits} qubits")
            if c != 0.0:
                clean[(x, z)] = c
        self._terms = dict(sorted(clean.items()))
        self._groups = None

    @classmethod
    def from_words(cls, n_qubits, pairs):
        """Build from ``(coefficient, PauliWord)`` pairs, summing like terms.

        Words may carry any Hermitian phase; it is folded into the coefficient.
        """
        acc = defaultdict(float)
        for c, w in pairs:
            if w.n_qubits != n_qubits:
                raise DimensionError("word width differs from operator width")
            acc[(w.x_mask, w.z_mask)] += c * w.hermitian_sign()
        return cls(n_qubits, acc)

    @classmethod
    def from_text(cls, lines, n_qubits=None):
        return parse(lines.splitlines() if isinstance(lines, str) else lines, n_qubits)

    @classmethod
    def identity(cls, n_qubits, coefficient=1.0):
        return cls(n_qubits, {(0, 0): coefficient})

    # -- container protocol ------------------------------------------------
    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __eq__(self, other):
        if not isinstance(other, QubitOperator):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, tuple(self._terms.items())))

    def __repr__(self):
        return f"QubitOperator(n_qubits={self.n_qubits}, n_terms={len(self)})"

    @property
    def terms(self):
        return dict(self._terms)

    def coefficient(self, word):
        if isinstance(word, str):
            word = PauliWord.from_text(word, self.n_qubits)
        c = self._terms.get((word.x_mask, word.z_mask), 0.0)
        return c * word.hermitian_sign() if c else 0.0

    def words(self):
        for (x, z), c in self._terms.items():
            yield c, PauliWord(self.n_qubits, x, z, (x & z).bit_count())

    def x_masks(self):
        return sorted({x for x, _ in self._terms})

    def scaled(self, factor):
        return QubitOperator(self.n_qubits, {k: v * factor for k, v in self._terms.items()})

    def __add__(self, other):
        if self.n_qubits != other.n_qubits:
            raise DimensionError("operator widths differ")
        acc = defaultdict(float, self._terms)
        for k, v in other._terms.items():
            acc[k] += v
        return QubitOperator(self.n_qubits, acc)

    def max_abs_difference(self, other):
        keys = set(self._terms) | set(other._terms)
        return max((abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) for k in keys),
                   default=0.0)

    def to_text(self):
        lines = [f"qubits: {self.n_qubits}"]
        for c, w in self.words():
            lines.append(f"{c!r} {w.to_text()}")
        return "\n".join(lines) + "\n"

    # -- real-part structure grouped by flip pattern -------------------
    def real_groups(self):
        """``[(x_mask, z_masks, coefficients)]`` over terms with an even ``Y`` count.

        Coefficients include the sign of ``i**y_count``; together they give
        ``Re <b|H|k> = sum(c * (-1)**|z & k|)`` over the group with ``x == b ^ k``.
        """
        if self._groups is None:
            grouped = defaultdict(lambda: ([], []))
            for (x, z), c in self._terms.items():
                y = (x & z).bit_count()
                if y % 2:
                    continue
                zs, cs = grouped[x]
                zs.append(z)
                cs.append(c if y % 4 == 0 else -c)
            self._groups = [(x, _bits.as_basis(zs, self.n_qubits), np.asarray(cs))
                            for x, (zs, cs) in sorted(grouped.items())]
        return self._groups


# -- file I/O -------------------------------------------------------------

def parse(lines, n_qubits=None, path=None):
    """Parse Hamiltonian text (see :func:`load` for the format)."""
    entries = []
    header_n = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("qubits:"):
            if entries or header_n is not None:
                raise HamiltonianParseError("'qubits:' must precede all terms", lineno, path)
            try:
                header_n = int(line.split(":", 1)[1])
            except ValueError:
                raise HamiltonianParseError("bad qubit count", lineno, path) from None
            if header_n < 1:
                raise HamiltonianParseError("qubit count must be positive", lineno, path)
            continue
        head, _, rest = line.partition(" ")
        try:
            coef = float(head)
        except ValueError:
            raise HamiltonianParseError(f"bad coefficient {head!r}", lineno, path) from None
        if not math.isfinite(coef):
            raise HamiltonianParseError("non-finite coefficient", lineno, path)
        try:
            word = PauliWord.from_text(rest)
        except ValueError as exc:
            raise HamiltonianParseError(str(exc), lineno, path) from None
        entries.append((lineno, coef, rest, word))
    n = n_qubits or header_n
    if n is None:
        n = max((e[3].n_qubits for e in entries), default=1)
    if header_n is not None and n_qubits is not None and header_n != n_qubits:
        raise HamiltonianParseError(f"file declares {header_n} qubits, expected {n_qubits}",
                                    None, path)
    acc = {}
    for lineno, coef, rest, _ in entries:
        try:
            word = PauliWord.from_text(rest, n)
        except ValueError as exc:
            raise HamiltonianParseError(str(exc), lineno, path) from None
        key = (word.x_mask, word.z_mask)
        value = coef * word.hermitian_sign()
        if key in acc:
            warnings.warn(f"{path or '<text>'}:{lineno}: duplicate term {word}; coefficients summed",
                          stacklevel=2)
            acc[key] += value
        else:
            acc[key] = value
    return QubitOperator(n, acc)


def load(path, n_qubits=None):
    """Read a Hamiltonian file.

    UTF-8 text, ``#`` starts a comment, an optional first line
    ``qubits: <n>``, then one ``<coefficient> <word>`` per line, e.g.
    ``-0.5 Z0 Z1`` or ``1.25 I``.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse(fh, n_qubits, path=str(path))


def save(op, path):
    Path(path).write_text(op.to_text(), encoding="utf-8")


# -- matrix elements --------------------------------------------------------

def matrix_element(op, bra, ket):
    """Real part of ``<bra|op|ket>`` for basis states given as ints."""
    bra, ket = int(bra), int(ket)
    limit = 1 << op.n_qubits
    if not (0 <= bra < limit and 0 <= ket < limit):
        raise DimensionError("basis state wider than the operator")
    flip = bra ^ ket
    total = 0.0
    for x, zs, cs in op.real_groups():
        if x == flip:
            for z, c in zip(zs, cs):
                total += c if (int(z) & ket).bit_count() % 2 == 0 else -c
            break
    return total


def _group_rows(op, basis, x, zs, cs, lo, hi):
    """Nonzero ``(row, col, value)`` of group *x* for columns ``lo:hi``."""
    n = op.n_qubits
    kets = basis[lo:hi]
    bras = kets ^ _bits.mask_scalar(x, n)
    pos = np.searchsorted(basis, bras)
    pos_c = np.minimum(pos, len(basis) - 1)
    hit = basis[pos_c] == bras
    if not hit.any():
        return None
    kets = kets[hit]
    cols = np.arange(lo, hi)[hit]
    signs = 1.0 - 2.0 * _bits.parity(kets[:, None] & zs[None, :])
    vals = signs @ cs
    return pos_c[hit], cols, vals


def _row_blocks(op, basis):
    """Work items covering every (group, column-chunk) pair of the quadratic form."""
    items = []
    for x, zs, cs in op.real_groups():
        for lo in range(0, len(basis), ROW_CHUNK):
            items.append((x, zs, cs, lo, min(lo + ROW_CHUNK, len(basis))))
    return items


def matrix_block(op, basis):
    """Sparse symmetric matrix ``Re <basis[i]|op|basis[j]>`` over a sorted basis."""
    basis = np.asarray(basis)
    size = len(basis)
    parts = _bits.ordered_map(lambda it: _group_rows(op, basis, *it), _row_blocks(op, basis))
    parts = [p for p in parts if p is not None]
    if not parts:
        return sp.csr_matrix((size, size))
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))


def expectation(op, state):
    """``sum c_j' c_j <w_j'|op|w_j>`` without materialising the matrix."""
    if state.n_qubits != op.n_qubits:
        raise DimensionError("state and operator widths differ")
    norm2 = float(state.coeffs @ state.coeffs)
    if abs(norm2 - 1.0) > 1e-8:
        warnings.warn(f"expectation on a state with squared norm {norm2:.3e}", stacklevel=2)
    basis, c = state.basis, state.coeffs

    def block(item):
        part = _group_rows(op, basis, *item)
        if part is None:
            return 0.0
        rows, cols, vals = part
        return float(np.dot(c[rows] * vals, c[cols]))

    return float(np.sum(_bits.ordered_map(block, _row_blocks(op, basis))))


# -- dressing and compression -------------------------------------------

def _dress_single(terms, n_qubits, t_word, amplitude):
    cos_a, sin_a = math.cos(amplitude), math.sin(amplitude)
    tx, tz, tp = t_word.x_mask, t_word.z_mask, t_word.phase
    out = defaultdict(float)
    for (x, z), c in terms.items():
        anti = ((x & tz).bit_count() + (z & tx).bit_count()) % 2
        if not anti:
            out[(x, z)] += c
            continue
        out[(x, z)] += c * cos_a
        # -i * P * T on canonical P (phase = y count)
        q = (x & z).bit_count() + tp + 2 * (z & tx).bit_count() - 1
        nx, nz = x ^ tx, z ^ tz
        rel = (q - (nx & nz).bit_count()) % 4
        if rel % 2:  # pragma: no cover - excluded by the anticommutation check
            raise AssertionError("dressing produced a non-Hermitian term")
        out[(nx, nz)] += c * sin_a * (1.0 if rel == 0 else -1.0)
    return out


def dress(h, t_word, amplitude):
    """``U^dagger h U`` with ``U = exp(-i * amplitude * t_word / 2)``.

    Commuting terms are untouched; an anticommuting ``P`` becomes
    ``cos(a) P - i sin(a) P t_word``.
    """
    require_generator(t_word)
    if t_word.n_qubits != h.n_qubits:
        raise DimensionError("generator and operator widths differ")
    if amplitude == 0.0:
        return h
    return QubitOperator(h.n_qubits, _dress_single(h._terms, h.n_qubits, t_word, amplitude))


def dress_sequence(h, generators, amplitudes):
    """Dress by ``U = prod_k exp(-i t_k T_k / 2)`` (k = 1 leftmost).

    ``U^dagger H U`` peels the leftmost factor first, so generators are
    applied in ansatz order; then ``<0|result|0>`` is the energy of
    ``U|0>``.
    """
    generators = list(generators)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if len(generators) != len(amplitudes):
        raise ContractViolation("one amplitude per generator required")
    for w in generators:
        require_generator(w)
    terms = h._terms
    for w, a in zip(generators, amplitudes):
        if a != 0.0:
            terms = _dress_single(terms, h.n_qubits, w, float(a))
    return QubitOperator(h.n_qubits, terms)


class Compression(NamedTuple):
    operator: QubitOperator
    removed_weight: float  # sum of squared dropped coefficients
    removed_l1: float  # sum of absolute dropped coefficients (spectral shift bound)


def compress(op, threshold=5e-7):
    """Drop every term with ``|coefficient| < threshold``."""
    if threshold < 0:
        raise ContractViolation("threshold must be non-negative")
    kept, sq, l1 = {}, 0.0, 0.0
    for k, c in op._terms.items():
        if abs(c) < threshold:
            sq += c * c
            l1 += abs(c)
        else:
            kept[k] = c
    return Compression(QubitOperator(op.n_qubits, kept), sq, l1)


def terms_commute(h, t_word):
    """True when *t_word* commutes with every term of *h*."""
    return all(commutes(w, t_word) for _, w in h.words())
