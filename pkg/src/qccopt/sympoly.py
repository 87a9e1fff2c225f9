"""Symmetric-polynomial energy functional ``E[K]``.

Expanding ``prod_k (cos(t_k/2) - i sin(t_k/2) T_k)`` gives one term per index
subset ``S``; keeping ``|S| <= K`` truncates the unitary.  Each term acts on
the reference as ``sign_S * prod_{j in S} tan(t_j/2) * R(t)`` times a basis
state ``X_S|0>``, with ``R = prod_k cos(t_k/2)``.

:func:`compile` does all amplitude-independent work once (subset products,
real signs, distinct excited states, and the Hamiltonian block over them).
:func:`evaluate` and :func:`gradient` then only build the amplitude vector
and one sparse matrix-vector product.

Because ``R`` cancels in the normalised energy, amplitude vectors are built
without it (``u / R``); ``numerator`` and ``norm`` restore it.
"""

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import _bits
from .errors import (ContractViolation, DimensionError, GeneratorConventionError,
                     ReferenceInstabilityError)
from .operator import matrix_block
from .pauli import require_generator

DEFAULT_MAX_TERMS = 10**8
COS_FLOOR = 1e-12
# above this |tan(t/2)| the log-magnitude raw product form is used instead
TAN_FALLBACK = 1e3


def count_terms(m, k):
    """Number of subsets of at most *k* out of *m* generators."""
    if not 0 <= k <= m:
        raise ContractViolation("need 0 <= k <= m")
    return sum(math.comb(m, j) for j in range(k + 1))


@dataclass(frozen=True)
class CompiledAnsatz:
    """Amplitude-independent intermediates of ``E[K]``.

    Attributes
    ----------
    order, m : int
        Truncation order ``K`` and generator count ``M``.
    subsets : ndarray, shape (n_terms, K)
        Zero-based generator indices of every term, padded with -1; terms are
        ordered by size, then lexicographically.
    sizes : ndarray
        ``|S|`` per term.
    signs : ndarray
        Real phase (+1/-1) of ``prod_{j in S} (-i T_j)`` acting on the reference.
    slots : ndarray
        Index of each term's excited state in ``unique_x``.
    unique_x : ndarray
        Sorted distinct basis states ``X_S|0>``.
    hessian : scipy.sparse.csr_matrix
        ``<unique_x[a]|H|unique_x[b]>``.
    """

    order: int
    m: int
    n_qubits: int
    reference: int
    subsets: np.ndarray
    sizes: np.ndarray
    signs: np.ndarray
    slots: np.ndarray
    unique_x: np.ndarray
    hessian: sp.csr_matrix

    @property
    def n_terms(self):
        return len(self.signs)

    @property
    def dimension(self):
        return len(self.unique_x)

    def terms(self):
        """Per-term records ``(subset, sign, slot)`` with zero-based indices."""
        for row, size, sign, slot in zip(self.subsets, self.sizes, self.signs, self.slots):
            yield tuple(int(i) for i in row[:size]), int(sign), int(slot)

    def save(self, path):
        h = self.hessian.tocsr()
        np.savez(path, order=self.order, m=self.m, n_qubits=self.n_qubits,
                 reference=str(self.reference), subsets=self.subsets, sizes=self.sizes,
                 signs=self.signs, slots=self.slots,
                 unique_x=np.array([str(int(b)) for b in self.unique_x]),
                 h_data=h.data, h_indices=h.indices, h_indptr=h.indptr)

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as f:
            n = int(f["n_qubits"])
            dim = len(f["unique_x"])
            hess = sp.csr_matrix((f["h_data"], f["h_indices"], f["h_indptr"]), shape=(dim, dim))
            return cls(int(f["order"]), int(f["m"]), n, int(str(f["reference"])),
                       f["subsets"], f["sizes"], f["signs"], f["slots"],
                       _bits.as_basis([int(s) for s in f["unique_x"]], n), hess)


@dataclass(frozen=True)
class Evaluation:
    energy: float
    numerator: float  # W[K], not variationally bounded
    norm: float
    u: np.ndarray  # per-slot amplitudes divided by R(t)
    hu: np.ndarray
    scale: float  # u_true = scale * u


def _enumerate_subsets(m, k):
    """Index arrays of all subsets with size <= k, by size then lexicographic.

    Returns ``(levels, parents)``; ``parents[r][i]`` is the row of
    ``levels[r - 1]`` equal to ``levels[r][i]`` without its last index.
    """
    levels = [np.zeros((1, 0), dtype=np.int32)]
    parents = [None]
    for r in range(1, k + 1):
        prev = levels[-1]
        last = prev[:, -1] if r > 1 else np.full(1, -1, dtype=np.int32)
        counts = m - 1 - last
        rep = np.repeat(np.arange(len(prev)), counts)
        offsets = np.arange(len(rep)) - np.repeat(np.cumsum(counts) - counts, counts)
        nxt = (np.repeat(last, counts) + 1 + offsets).astype(np.int32)
        levels.append(np.hstack([prev[rep], nxt[:, None]]))
        parents.append(rep)
    return levels, parents


def cache_key(h, generators, order, reference=0):
    """Hex digest identifying a compilation input."""
    digest = hashlib.sha256()
    digest.update(h.to_text().encode())
    for w in generators:
        digest.update(f"{w.n_qubits}:{w.x_mask}:{w.z_mask}:{w.phase};".encode())
    digest.update(f"K={order};ref={int(reference)}".encode())
    return digest.hexdigest()


def compile(h, pool, k, reference=None, max_terms=DEFAULT_MAX_TERMS, cache_dir=None):
    """Compile ``E[k]`` for the generators of *pool* on Hamiltonian *h*.

    *pool* may be a :class:`~qccopt.generators.GeneratorPool` (its reference
    is used) or a plain sequence of generator words.
    """
    words = list(getattr(pool, "generators", pool))
    if reference is None:
        reference = getattr(pool, "reference", 0)
    reference = int(reference)
    m = len(words)
    if not 0 <= k <= m:
        raise ContractViolation(f"order {k} outside 0..{m}")
    n = h.n_qubits
    for w in words:
        require_generator(w)
        if w.n_qubits != n:
            raise DimensionError("generator width differs from the Hamiltonian")
    n_terms = count_terms(m, k)
    if n_terms > max_terms:
        raise ContractViolation(f"{n_terms} terms exceed the cap of {max_terms}")

    cache_path = None
    if cache_dir is not None:
        cache_path = Path(cache_dir) / f"{cache_key(h, words, k, reference)}.npz"
        if cache_path.exists():
            return CompiledAnsatz.load(cache_path)

    gx = _bits.as_basis([w.x_mask for w in words], n) if m else _bits.as_basis([], n)
    gz = _bits.as_basis([w.z_mask for w in words], n) if m else _bits.as_basis([], n)
    # product of (-i T_j) tracked as i**phase X Z
    gp = np.array([(w.phase - 1) % 4 for w in words], dtype=np.int64)

    zero = _bits.as_basis([0], n)
    xs, zs, ph = [zero], [zero.copy()], [np.zeros(1, dtype=np.int64)]
    levels, parents = _enumerate_subsets(m, k)
    for r in range(1, k + 1):
        parent_idx = parents[r]
        j = levels[r][:, -1]
        px, pz, pp = xs[-1][parent_idx], zs[-1][parent_idx], ph[-1][parent_idx]
        swap = _bits.parity(pz & gx[j]).astype(np.int64)
        xs.append(px ^ gx[j])
        zs.append(pz ^ gz[j])
        ph.append((pp + gp[j] + 2 * swap) % 4)

    all_x = np.concatenate(xs)
    all_z = np.concatenate(zs)
    all_p = np.concatenate(ph)
    if np.any(all_p % 2):
        raise GeneratorConventionError("a generator product has an imaginary phase on the reference")
    ref = _bits.mask_scalar(reference, n)
    signs = ((1 - (all_p % 4)) * (1.0 - 2.0 * _bits.parity(all_z & ref))).astype(np.int8)
    states = all_x ^ ref
    unique_x, slots = np.unique(states, return_inverse=True)
    sizes = np.concatenate([np.full(len(lv), r, dtype=np.int32) for r, lv in enumerate(levels)])
    subsets = np.full((n_terms, k), -1, dtype=np.int32)
    start = 0
    for r, lv in enumerate(levels):
        subsets[start:start + len(lv), :r] = lv
        start += len(lv)
    hess = matrix_block(h, unique_x)
    out = CompiledAnsatz(k, m, n, reference, subsets, sizes, signs,
                         slots.astype(np.int64).ravel(), unique_x, hess)
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        out.save(cache_path)
    return out


def _trig(ansatz, t):
    t = np.asarray(t, dtype=float)
    if t.shape != (ansatz.m,):
        raise ContractViolation(f"expected {ansatz.m} amplitudes, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ContractViolation("amplitudes must be finite")
    c, s = np.cos(t / 2), np.sin(t / 2)
    bad = np.abs(c) < COS_FLOOR
    if bad.any():
        raise ReferenceInstabilityError(
            f"cos(t/2) vanishes for generators {np.flatnonzero(bad).tolist()}")
    return c, s


def _member_values(ansatz, values):
    """``values[subset]`` padded with 1, shape (n_terms, K)."""
    padded = np.append(values, 1.0)
    return padded[ansatz.subsets]


def _term_coefficients(ansatz, c, s, raw):
    """Per-term coefficient (without sign) and the global scale factor."""
    if not raw:
        tau = s / c
        return np.prod(_member_values(ansatz, tau), axis=1), 1.0
    with np.errstate(divide="ignore"):
        log_s, log_c = np.log(np.abs(s)), np.log(np.abs(c))
    lm = np.append(log_s - log_c, 0.0)[ansatz.subsets].sum(axis=1)
    sgn = np.prod(_member_values(ansatz, np.sign(s) * np.sign(c)), axis=1)
    shift = float(np.max(lm[np.isfinite(lm)])) if np.isfinite(lm).any() else 0.0
    coef = sgn * np.exp(lm - shift)
    return coef, math.exp(shift)


def _use_raw(s, c, force_raw):
    return force_raw or (len(s) and float(np.max(np.abs(s / c))) > TAN_FALLBACK)


def evaluate(ansatz, t, force_raw=False):
    """Normalised energy ``E[K](t)`` plus ``W[K](t)`` and the norm."""
    c, s = _trig(ansatz, t)
    raw = _use_raw(s, c, force_raw)
    coef, scale = _term_coefficients(ansatz, c, s, raw)
    u = np.bincount(ansatz.slots, weights=ansatz.signs * coef, minlength=ansatz.dimension)
    hu = ansatz.hessian @ u
    num, nrm = float(u @ hu), float(u @ u)
    energy = num / nrm
    log_r = float(np.sum(np.log(np.abs(c)))) + math.log(scale)
    r2 = math.exp(2 * log_r)
    return Evaluation(energy, num * r2, nrm * r2, u, hu, scale)


def _exclusive_products(vals):
    """``prod_{q != p} vals[:, q]`` for every column ``p`` without division."""
    n, k = vals.shape
    if k == 0:
        return vals
    prefix = np.ones((n, k))
    suffix = np.ones((n, k))
    if k > 1:
        prefix[:, 1:] = np.cumprod(vals[:, :-1], axis=1)
        suffix[:, :-1] = np.cumprod(vals[:, :0:-1], axis=1)[:, ::-1]
    return prefix * suffix


def gradient(ansatz, t, evaluation=None, force_raw=False):
    """Analytic gradient of ``E[K]`` with respect to the amplitudes.

    Differentiating one factor ``(cos, -i sin T)`` of the product gives
    ``(-sin/2, -i cos/2 T)``; in the tangent form this reduces to
    ``dE/dt_k = (1 + tau_k^2) / |u|^2 * sum_{S ni k} prod_{S \\ k} tau * y_S``
    with ``y = sign * (Hu - E u)[slot]``.
    """
    c, s = _trig(ansatz, t)
    raw = _use_raw(s, c, force_raw)
    if evaluation is None:
        evaluation = evaluate(ansatz, t, force_raw=raw)
    e, u, hu = evaluation.energy, evaluation.u, evaluation.hu
    nrm = float(u @ u)
    y = ansatz.signs * (hu - e * u)[ansatz.slots]
    valid = ansatz.subsets >= 0
    idx = ansatz.subsets[valid]
    if ansatz.order == 0 or ansatz.m == 0:
        return np.zeros(ansatz.m)
    if not raw:
        tau = s / c
        excl = _exclusive_products(_member_values(ansatz, tau))
        weights = (excl * y[:, None])[valid]
        acc = np.bincount(idx, weights=weights, minlength=ansatz.m)
        return (1.0 + tau * tau) * acc / nrm
    # raw form: u holds prod tau / scale, so rescale the exclusive products alike
    with np.errstate(divide="ignore"):
        log_s, log_c = np.log(np.abs(s)), np.log(np.abs(c))
    mem_log = np.append(log_s - log_c, 0.0)[ansatz.subsets]
    excl_log = _exclusive_log_sums(mem_log)
    excl_sgn = _exclusive_products(_member_values(ansatz, np.sign(s) * np.sign(c)))
    # 1 + tau_k^2 = 1 / cos^2(t_k/2)
    member_k = np.where(valid, ansatz.subsets, ansatz.m)
    sec2_log = np.append(-2.0 * log_c, 0.0)[member_k]
    d_in = excl_sgn * np.exp(excl_log + sec2_log - math.log(evaluation.scale))
    acc = np.bincount(idx, weights=(d_in * y[:, None])[valid], minlength=ansatz.m)
    return acc / nrm


def _exclusive_log_sums(vals):
    n, k = vals.shape
    prefix = np.zeros((n, k))
    suffix = np.zeros((n, k))
    if k > 1:
        prefix[:, 1:] = np.cumsum(vals[:, :-1], axis=1)
        suffix[:, :-1] = np.cumsum(vals[:, :0:-1], axis=1)[:, ::-1]
    return prefix + suffix


def energy_and_gradient(ansatz, t):
    ev = evaluate(ansatz, t)
    return ev.energy, gradient(ansatz, t, ev)
