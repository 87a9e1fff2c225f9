"""Truncated-expansion energy ``F[N]``.

The QCC state is built factor by factor on a sparse basis; whenever the
expansion exceeds ``N`` states the smallest coefficients are dropped and the
remainder renormalised.  The energy is the expectation value of the final
state.  ``F[N]`` is not smooth in the amplitudes, so it is meant for
evaluation and extrapolation rather than as an optimisation objective.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, QCCWarning
from .operator import expectation
from .state import apply_ansatz, reference as reference_state


@dataclass(frozen=True)
class FnResult:
    energy: float
    final_dim: int
    norm_loss: tuple  # one renormalisation factor per truncation event
    state: object

    @property
    def retained_norm(self):
        return float(np.prod(self.norm_loss)) if self.norm_loss else 1.0

    @property
    def cumulative_norm_loss(self):
        return 1.0 - self.retained_norm


def _words_and_reference(generators, reference):
    words = list(getattr(generators, "generators", generators))
    if reference is None:
        reference = getattr(generators, "reference", 0)
    return words, int(reference)


def evaluate_fn(h, generators, t, cap=None, reference=None):
    """``F[cap](t)``; ``cap=None`` means no truncation."""
    words, ref = _words_and_reference(generators, reference)
    t = np.asarray(t, dtype=float)
    if t.shape != (len(words),):
        raise ContractViolation(f"expected {len(words)} amplitudes, got shape {t.shape}")
    if cap is not None and cap < 1:
        raise ContractViolation("cap must be at least 1")
    state = apply_ansatz(reference_state(h.n_qubits, ref), words, t, cap)
    return FnResult(expectation(h, state), len(state), state.norm_loss_log, state)


def sweep_fn(h, generators, t, caps, reference=None):
    """One independent ``F[N]`` evaluation per cap, with wall-clock timings."""
    caps = [int(c) for c in caps]
    if any(b < a for a, b in zip(caps, caps[1:])):
        raise ContractViolation("caps must be ascending")
    rows = []
    for cap in caps:
        start = time.perf_counter()
        res = evaluate_fn(h, generators, t, cap, reference)
        rows.append({
            "cap": cap,
            "energy": res.energy,
            "final_dim": res.final_dim,
            "cumulative_norm_loss": res.cumulative_norm_loss,
            "seconds": time.perf_counter() - start,
        })
    return rows


def invariant_subspace_size(generators):
    """``2**rank`` of the generators' flip masks over GF(2).

    Every state reachable from the reference lies in this many basis states.
    """
    words = list(getattr(generators, "generators", generators))
    basis = []
    for w in words:
        v = w.x_mask
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return 1 << len(basis)


def fn_objective(h, generators, cap, reference=None, h_step=1e-6):
    """``t -> (F[cap](t), central-difference gradient)`` for the optimiser.

    Truncation makes ``F`` piecewise smooth, so this is opt-in and warns.
    """
    warnings.warn("optimising F[N] directly: the functional is not smooth in the amplitudes",
                  QCCWarning, stacklevel=2)
    words, ref = _words_and_reference(generators, reference)

    def energy(t):
        return evaluate_fn(h, words, t, cap, ref).energy

    def objective(t):
        t = np.asarray(t, dtype=float)
        g = np.empty_like(t)
        for j in range(len(t)):
            d = np.zeros_like(t)
            d[j] = h_step
            g[j] = (energy(t + d) - energy(t - d)) / (2 * h_step)
        return energy(t), g

    return objective
