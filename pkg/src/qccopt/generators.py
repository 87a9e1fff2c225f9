"""Generator pools: construction, gradients, ranking, selection and the DHA.

Gradients and excited-state energies are evaluated from real matrix
elements only.  For a generator ``T`` with ``-i T |0> = phi |w>`` the energy
gradient at zero amplitude is ``g = phi * <0|H|w>`` and the diagonal energy
is ``<w|H|w>``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractViolation, ConvergenceError
from .operator import matrix_element
from .pauli import PauliWord, apply_to_basis, require_generator

DEGENERACY_DECIMALS = 11


@dataclass(frozen=True)
class GeneratorPool:
    """Ordered generators with their zero-amplitude response data.

    Attributes
    ----------
    generators : tuple of PauliWord
    grads : ndarray
        Energy gradients at ``t = 0``.
    diag_energies : ndarray
        ``<0|T H T|0>`` for every generator.
    reference : int
        Reference basis state.
    e0 : float
        ``<0|H|0>``.
    rankings : ndarray or None
        Filled by :func:`rank`; sorted non-increasing.
    """

    generators: tuple
    grads: np.ndarray
    diag_energies: np.ndarray
    reference: int
    e0: float
    rankings: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.generators)

    @property
    def ranked(self):
        return self.rankings is not None

    @property
    def n_qubits(self):
        return self.generators[0].n_qubits if self.generators else None

    @property
    def x_masks(self):
        return np.array([w.x_mask for w in self.generators], dtype=object)

    @property
    def gaps(self):
        return self.e0 - self.diag_energies

    def take(self, indices):
        indices = list(indices)
        return replace(
            self,
            generators=tuple(self.generators[i] for i in indices),
            grads=self.grads[indices],
            diag_energies=self.diag_energies[indices],
            rankings=None if self.rankings is None else self.rankings[indices],
        )


def canonical_generator(n_qubits, x_mask):
    """``Y`` on the lowest set bit of *x_mask*, ``X`` on the remaining bits."""
    if x_mask == 0:
        raise ContractViolation("identity flip pattern has no generator")
    low = x_mask & -x_mask
    return PauliWord(n_qubits, x_mask, low, 1)


def excited_state(t_word, reference):
    """``(phi, w)`` with ``-i T |reference> = phi |w>``, ``phi`` real."""
    power, bits = apply_to_basis(t_word, int(reference))
    power = (power - 1) % 4
    if power % 2:
        raise ContractViolation(f"-i*({t_word}) acting on the reference is not real")
    return (1 if power == 0 else -1), bits


def gradient(h, t_word, reference=0):
    """``-(i/2) <0|[H, T]|0>`` for an imaginary generator."""
    require_generator(t_word)
    phi, w = excited_state(t_word, reference)
    return phi * matrix_element(h, reference, w)


def diag_energy(h, t_word, reference=0):
    require_generator(t_word)
    _, w = excited_state(t_word, reference)
    return matrix_element(h, w, w)


def make_pool(h, generators, reference=0):
    """Pool over explicit *generators* with gradients and diagonal energies."""
    generators = tuple(generators)
    grads = np.array([gradient(h, w, reference) for w in generators], dtype=float)
    diag = np.array([diag_energy(h, w, reference) for w in generators], dtype=float)
    return GeneratorPool(generators, grads, diag, int(reference),
                         matrix_element(h, reference, reference))


def propose_generators(h, reference=0):
    """One canonical generator per distinct non-identity flip pattern of *h*."""
    if len(h) == 0:
        raise ContractViolation("empty Hamiltonian")
    gens = [canonical_generator(h.n_qubits, x) for x in h.x_masks() if x]
    return make_pool(h, gens, reference)


def ranking_values(grads, gaps):
    """``|arctan(2 g / D)|`` with the limits ``pi/2`` (D = 0) and 0 (g = 0)."""
    grads = np.asarray(grads, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    r = np.zeros_like(grads)
    nz = grads != 0
    zero_gap = nz & (gaps == 0)
    r[zero_gap] = math.pi / 2
    ok = nz & ~zero_gap
    r[ok] = np.abs(np.arctan(2 * grads[ok] / gaps[ok]))
    return r


def _sort_ranked(pool, values):
    keys = np.round(values, DEGENERACY_DECIMALS)
    masks = [w.x_mask for w in pool.generators]
    order = sorted(range(len(pool)), key=lambda i: (-keys[i], masks[i]))
    out = pool.take(order)
    return replace(out, rankings=np.asarray(values)[order])


def rank(pool, mode="arctan", tol=1e-14):
    """Sort the pool by importance.

    ``mode="arctan"`` uses ``|arctan(2 g_j / D_j)|``; ``mode="dha"`` uses
    ``|t_j|`` from :func:`dha_solve`.  Values equal after rounding to 1e-11
    are degenerate and ordered by ascending flip mask.
    """
    if mode == "arctan":
        values = ranking_values(pool.grads, pool.gaps)
    elif mode == "dha":
        values = np.abs(dha_solve(pool, tol).t)
    else:
        raise ContractViolation(f"unknown ranking mode {mode!r}")
    return _sort_ranked(pool, values)


def select(pool, m, policy="extend"):
    """Top-*m* generators without splitting a degenerate group.

    Returns ``(pool, adjustment)`` where ``adjustment`` is the change applied
    to *m*.  ``policy="shrink"`` backs off to the previous group boundary, or
    extends when that would leave nothing.
    """
    if m < 1:
        raise ContractViolation("m must be at least 1")
    if not pool.ranked:
        raise ContractViolation("pool must be ranked before selection")
    if policy not in ("extend", "shrink"):
        raise ContractViolation(f"unknown selection policy {policy!r}")
    size = len(pool)
    if m >= size:
        return pool, 0
    keys = np.round(pool.rankings, DEGENERACY_DECIMALS)
    cut = m
    if keys[cut - 1] == keys[cut]:
        lo = cut - 1
        while lo > 0 and keys[lo - 1] == keys[cut]:
            lo -= 1
        hi = cut
        while hi < size and keys[hi] == keys[cut - 1]:
            hi += 1
        cut = lo if policy == "shrink" and lo > 0 else hi
    return pool.take(range(cut)), cut - m


@dataclass(frozen=True)
class DHASolution:
    energy: float
    c: np.ndarray
    t: np.ndarray
    iterations: int


def arrowhead_lowest(e0, diag, offdiag, tol=1e-14, max_iter=200):
    """Lowest root of ``E0 - E + sum g_k^2 / (E - E_k)`` below every pole.

    Safeguarded Newton iteration inside the bracket
    ``[min(E0, E_k) - sum|g|, min(E0, min E_k)]``.  Only couplings with
    ``g != 0`` enter; with none the root is ``E0``.

    Returns ``(E, iterations)``.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    active = offdiag != 0
    d, g2 = diag[active], offdiag[active] ** 2
    if d.size == 0:
        return float(e0), 0
    pole = float(d.min())
    hi = min(float(e0), pole)
    lo = min(float(e0), float(diag.min())) - float(np.abs(offdiag).sum())
    scale = max(1.0, abs(lo), abs(hi))

    def secular(e):
        r = 1.0 / (e - d)
        return e0 - e + float(g2 @ r), -1.0 - float(g2 @ (r * r))

    e = lo
    f_lo = secular(lo)[0]
    if f_lo <= 0.0:
        return lo, 0
    for it in range(1, max_iter + 1):
        f, df = secular(e) if e < pole else (-math.inf, -math.inf)
        if f == 0.0:
            return e, it
        if f > 0:
            lo = e
        else:
            hi = e
        step = e - f / df if math.isfinite(f) and df != 0 else math.nan
        new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(new - e) <= tol * scale or hi - lo <= tol * scale:
            return new, it
        e = new
    raise ConvergenceError("arrowhead eigenvalue iteration did not converge",
                           last_iterate=e, iterations=max_iter)


def dha_solve(pool, tol=1e-14, max_iter=200):
    """Diagonal Hessian approximation: lowest arrowhead-matrix eigenpair.

    The eigenvector is normalised so its reference component is 1; then
    ``C_k = g_k / (E - E_k)`` and ``t_k = 2 arctan(C_k)``.
    """
    e, iters = arrowhead_lowest(pool.e0, pool.diag_energies, pool.grads, tol, max_iter)
    g = pool.grads
    c = np.zeros_like(g)
    nz = g != 0
    c[nz] = g[nz] / (e - pool.diag_energies[nz])
    return DHASolution(float(e), c, 2.0 * np.arctan(c), iters)
