"""Input checks shared by the estimators and the command line."""

import os

import numpy as np

from .errors import ContractViolation
from .operator import QubitOperator, load


def check_operator(h, n_qubits=None):
    """Accept a QubitOperator, a path, or operator text; return a QubitOperator."""
    if isinstance(h, (str, os.PathLike)) and os.path.exists(h):
        h = load(h)
    elif isinstance(h, str):
        h = QubitOperator.from_text(h, n_qubits)
    if not isinstance(h, QubitOperator):
        raise TypeError(f"expected a QubitOperator, got {type(h).__name__}")
    if n_qubits is not None and h.n_qubits != n_qubits:
        raise ContractViolation(f"operator acts on {h.n_qubits} qubits, expected {n_qubits}")
    if len(h) == 0:
        raise ContractViolation("operator has no terms")
    return h


def check_reference(reference, n_qubits):
    """Basis state index from an int or an MSB-first bitstring such as ``"0011"``."""
    if reference is None:
        return 0
    if isinstance(reference, str):
        s = reference.strip()
        if not s or set(s) - {"0", "1"}:
            raise ContractViolation(f"reference {reference!r} is not a bitstring")
        if len(s) != n_qubits:
            raise ContractViolation(f"reference has {len(s)} bits, operator has {n_qubits} qubits")
        return int(s, 2)
    ref = int(reference)
    if not 0 <= ref < (1 << n_qubits):
        raise ContractViolation(f"reference {ref} does not fit in {n_qubits} qubits")
    return ref


def format_reference(reference, n_qubits):
    return format(int(reference), f"0{n_qubits}b")


def check_amplitudes(t, m):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.shape[0] != m:
        raise ContractViolation(f"expected {m} amplitudes, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ContractViolation("amplitudes must be finite")
    return t
