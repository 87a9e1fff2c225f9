"""Vectorised bit tricks over arrays of computational-basis states.

Basis states are stored as ``uint64`` arrays when the register fits in one
machine word and as ``object`` arrays of Python ints otherwise.  Every helper
here accepts both layouts.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_WORD_BITS = 64
_num_threads = 1


def basis_dtype(n_qubits):
    return np.uint64 if n_qubits <= _WORD_BITS else object


def as_basis(values, n_qubits):
    dtype = basis_dtype(n_qubits)
    if dtype is object:
        return np.array([int(v) for v in values], dtype=object)
    return np.asarray(values, dtype=np.uint64)


def mask_scalar(mask, n_qubits):
    """Return *mask* in a form that combines with ``as_basis`` arrays."""
    if n_qubits <= _WORD_BITS:
        return np.uint64(mask)
    return int(mask)


_py_parity = np.frompyfunc(lambda v: v.bit_count() & 1, 1, 1)


def parity(values):
    """Popcount parity (0 or 1) of every element, as ``int8``."""
    values = np.asarray(values)
    if values.dtype == object:
        if values.size == 0:
            return np.zeros(values.shape, dtype=np.int8)
        return _py_parity(values).astype(np.int8)
    return (np.bitwise_count(values) & 1).astype(np.int8)


def z_signs(values, z_mask, n_qubits):
    """``(-1) ** popcount(value & z_mask)`` as float64."""
    if not z_mask:
        return np.ones(np.shape(values), dtype=float)
    p = parity(values & mask_scalar(z_mask, n_qubits))
    return 1.0 - 2.0 * p


def set_num_threads(n):
    """Cap the worker count used by the parallel stages (default 1)."""
    global _num_threads
    if n < 1:
        raise ValueError("thread count must be positive")
    _num_threads = int(n)


def get_num_threads():
    return _num_threads


def ordered_map(fn, items):
    """Map over *items* with at most ``get_num_threads()`` workers.

    Results come back in input order so reductions over them are
    reproducible regardless of the worker count.
    """
    items = list(items)
    if _num_threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_num_threads) as pool:
        return list(pool.map(fn, items))
