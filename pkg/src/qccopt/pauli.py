"""Canonical bit-mask representation of n-qubit Pauli words.

A word is stored as ``i**phase * X(x_mask) * Z(z_mask)`` where ``X(m)`` is the
tensor product of ``x`` on every qubit whose bit is set in ``m`` (and likewise
for ``Z``).  With ``y = i * x * z`` a textual word such as ``X0 Y3 Z7`` has
``phase`` equal to its number of ``Y`` factors.  Qubit 0 is the least
significant bit of every mask.

All phases are integers mod 4, so products are exact.
"""

import re
from dataclasses import dataclass

from .errors import ContractViolation, DimensionError

_FACTOR = re.compile(r"^([XYZxyz])(\d+)$")
_PHASE_TEXT = {0: "", 1: "i*", 2: "-", 3: "-i*"}


@dataclass(frozen=True, slots=True)
class PauliWord:
    """An n-qubit Pauli operator with a quarter-phase.

    Parameters
    ----------
    n_qubits : int
        Register width.
    x_mask, z_mask : int
        Bit ``q`` set when an ``x`` (resp. ``z``) factor acts on qubit ``q``;
        a ``y`` sets both.
    phase : int
        Power of ``i`` multiplying ``X(x_mask) Z(z_mask)``; reduced mod 4.
    """

    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ContractViolation("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise DimensionError(f"mask wider than {self.n_qubits} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits):
        return cls(n_qubits)

    @classmethod
    def from_text(cls, text, n_qubits=None):
        """Parse whitespace-separated factors like ``"X0 Y3 Z7"``.

        ``""`` and ``"I"`` give the identity.  A qubit may appear only once.
        """
        tokens = text.split()
        if tokens == ["I"]:
            tokens = []
        factors = []
        for tok in tokens:
            m = _FACTOR.match(tok)
            if m is None:
                raise ValueError(f"bad Pauli factor {tok!r}")
            factors.append((m.group(1).upper(), int(m.group(2))))
        qubits = [q for _, q in factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {text!r}")
        top = max((q for _, q in factors), default=-1)
        if n_qubits is None:
            n_qubits = max(top + 1, 1)
        elif top >= n_qubits:
            raise DimensionError(f"qubit {top} outside a {n_qubits}-qubit register")
        word = cls(n_qubits)
        for label, q in factors:
            bit = 1 << q
            x = bit if label in "XY" else 0
            z = bit if label in "ZY" else 0
            word = word @ cls(n_qubits, x, z, 1 if label == "Y" else 0)
        return word

    @property
    def y_count(self):
        return (self.x_mask & self.z_mask).bit_count()

    @property
    def weight(self):
        return (self.x_mask | self.z_mask).bit_count()

    def is_hermitian(self):
        return (self.phase - self.y_count) % 2 == 0

    def is_identity(self):
        return self.x_mask == 0 and self.z_mask == 0

    def hermitian_sign(self):
        """Real sign ``s`` with ``self == s * canonical()``; raises when not Hermitian."""
        rel = (self.phase - self.y_count) % 4
        if rel % 2:
            raise ContractViolation(f"{self!r} is not Hermitian")
        return 1 if rel == 0 else -1

    def canonical(self):
        """The Hermitian word on the same masks with a ``+1`` textual coefficient."""
        return PauliWord(self.n_qubits, self.x_mask, self.z_mask, self.y_count)

    def adjoint(self):
        # (XZ)^dagger = ZX = (-1)^|x&z| XZ
        return PauliWord(self.n_qubits, self.x_mask, self.z_mask,
                         -self.phase + 2 * self.y_count)

    def __matmul__(self, other):
        return multiply(self, other)

    def commutes_with(self, other):
        return commutes(self, other)

    def to_text(self):
        """Factor list, prefixed by any phase not accounted for by ``Y`` factors."""
        parts = []
        for q in range(self.n_qubits):
            bit = 1 << q
            xb, zb = self.x_mask & bit, self.z_mask & bit
            if xb and zb:
                parts.append(f"Y{q}")
            elif xb:
                parts.append(f"X{q}")
            elif zb:
                parts.append(f"Z{q}")
        body = " ".join(parts) or "I"
        return _PHASE_TEXT[(self.phase - self.y_count) % 4] + body

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True, slots=True)
class XZFactorization:
    """``phase_power`` such that ``word == i**phase_power * x_word * z_word``."""

    phase_power: int
    x_word: PauliWord
    z_word: PauliWord

    @property
    def phase(self):
        return 1j ** self.phase_power

    def is_real(self):
        return self.phase_power % 2 == 0

    def real_phase(self):
        """The phase as ``+1``/``-1``; raises when it is imaginary."""
        if self.phase_power % 2:
            raise ContractViolation("factorization phase is imaginary")
        return 1 if self.phase_power % 4 == 0 else -1


def _check_width(a, b):
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits}-qubit word combined with {b.n_qubits}-qubit word")


def multiply(a, b):
    """Product ``a @ b`` with the accumulated quarter-phase."""
    _check_width(a, b)
    # Z_a X_b = (-1)^|z_a & x_b| X_b Z_a
    swap = (a.z_mask & b.x_mask).bit_count()
    return PauliWord(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask,
                     a.phase + b.phase + 2 * swap)


def commutes(a, b):
    _check_width(a, b)
    count = (a.x_mask & b.z_mask).bit_count() + (a.z_mask & b.x_mask).bit_count()
    return count % 2 == 0


def xz_factorize(t):
    """Split *t* into a phase, a pure-``x`` word and a pure-``z`` word."""
    return XZFactorization(t.phase,
                           PauliWord(t.n_qubits, t.x_mask, 0, 0),
                           PauliWord(t.n_qubits, 0, t.z_mask, 0))


def is_imaginary_generator(t):
    """True when *t* has an odd number of ``Y`` factors, i.e. ``-i t`` is real."""
    return t.y_count % 2 == 1


def require_generator(t):
    if not (t.is_hermitian() and is_imaginary_generator(t)):
        raise ContractViolation(f"{t} is not a Hermitian word with an odd number of Y factors")


def real_generator_phase(t):
    """Sign ``phi`` with ``-i t == phi * X(x_mask) * Z(z_mask)``."""
    rel = (t.phase - 1) % 4
    if rel % 2:
        raise ContractViolation(f"-i*({t}) is not a real operator")
    return 1 if rel == 0 else -1


def apply_to_basis(t, bits):
    """Act with *t* on ``|bits>``; return ``(phase_power, new_bits)``."""
    sign = (t.z_mask & bits).bit_count() * 2
    return (t.phase + sign) % 4, bits ^ t.x_mask
