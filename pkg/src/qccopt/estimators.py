"""Estimator-style wrappers around the amplitude optimiser and the iQCC loop.

The "data" an estimator is fitted on is a qubit Hamiltonian; ``transform``
dresses other operators with the fitted unitaries so their reference
expectation values refer to the correlated state.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import generators as gen
from . import iqcc
from . import operator as qop
from . import sympoly
from .optimizer import minimize
from .pauli import PauliWord
from .validation import check_amplitudes, check_operator, check_reference


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


def _as_operators(X, n_qubits):
    if isinstance(X, (list, tuple)):
        return [check_operator(x, n_qubits) for x in X], True
    return [check_operator(X, n_qubits)], False


class QCCOptimizer(BaseEstimator):
    """Single QCC step: rank generators of ``H``, keep the top ones, minimise ``E[K]``.

    Parameters
    ----------
    n_generators : int
        Generators requested; degenerate groups are never split, so the
        fitted count may differ (see ``selection_adjustment_``).
    order : int or None
        Symmetric-polynomial order ``K``; ``None`` means ``K = M`` (exact).
    reference : int or str
        Reference basis state, as an index or MSB-first bitstring.
    ranking : {"arctan", "dha"}
    selection : {"extend", "shrink"}
    warm_start : {"zero", "dha"}
    grad_tol, max_evals : optimiser controls.
    """

    def __init__(self, n_generators=8, order=2, reference=0, ranking="arctan",
                 selection="extend", warm_start="zero", grad_tol=1e-8, max_evals=None):
        self.n_generators = n_generators
        self.order = order
        self.reference = reference
        self.ranking = ranking
        self.selection = selection
        self.warm_start = warm_start
        self.grad_tol = grad_tol
        self.max_evals = max_evals

    def fit(self, X, y=None, generators=None):
        h = check_operator(X)
        ref = check_reference(self.reference, h.n_qubits)
        if generators is None:
            pool = gen.rank(gen.propose_generators(h, ref), self.ranking)
            pool, adjust = gen.select(pool, self.n_generators, self.selection)
        else:
            words = [PauliWord.from_text(w, h.n_qubits) if isinstance(w, str) else w
                     for w in generators]
            pool, adjust = gen.make_pool(h, words, ref), 0
        k = len(pool) if self.order is None else min(int(self.order), len(pool))
        self.ansatz_ = sympoly.compile(h, pool, k)
        if self.warm_start == "dha":
            t0 = gen.dha_solve(pool).t
        elif self.warm_start == "zero":
            t0 = np.zeros(len(pool))
        else:
            raise ValueError(f"unknown warm_start {self.warm_start!r}")
        res = minimize(lambda t: sympoly.energy_and_gradient(self.ansatz_, t), t0,
                       grad_tol=self.grad_tol, max_evals=self.max_evals)
        self.n_qubits_ = h.n_qubits
        self.reference_ = ref
        self.pool_ = pool
        self.selection_adjustment_ = adjust
        self.generators_ = pool.generators
        self.amplitudes_ = res.t_opt
        self.energy_ = res.e_opt
        self.n_evals_ = res.evals
        self.converged_ = res.converged
        self.result_ = res
        return self

    def predict(self, t=None):
        """``E[K]`` at amplitudes *t* (default: the fitted ones)."""
        _check_fitted(self, "ansatz_")
        t = self.amplitudes_ if t is None else check_amplitudes(t, len(self.generators_))
        return sympoly.evaluate(self.ansatz_, t).energy

    def transform(self, X):
        """Dress one operator or a list of operators with the fitted unitaries."""
        _check_fitted(self, "amplitudes_")
        ops, many = _as_operators(X, self.n_qubits_)
        out = [qop.dress_sequence(op, self.generators_, self.amplitudes_) for op in ops]
        return out if many else out[0]

    def score(self, X, y=None):
        """Negative exact energy of *X* on the fitted correlated state."""
        dressed = self.transform(X)
        return -qop.matrix_element(dressed, self.reference_, self.reference_)


class IterativeQCC(BaseEstimator):
    """The iQCC loop with a uniform schedule of ``n_iterations`` x ``(m, k)``."""

    def __init__(self, n_iterations=10, n_generators=2, order=2, drop_threshold=5e-7,
                 reference=0, energy_tol=0.0, warm_start="zero", grad_tol=1e-8):
        self.n_iterations = n_iterations
        self.n_generators = n_generators
        self.order = order
        self.drop_threshold = drop_threshold
        self.reference = reference
        self.energy_tol = energy_tol
        self.warm_start = warm_start
        self.grad_tol = grad_tol

    def _schedule(self):
        return iqcc.IqccSchedule.repeat(self.n_generators, self.order, self.n_iterations,
                                        self.drop_threshold, energy_tol=self.energy_tol)

    def fit(self, X, y=None, observables=None, schedule=None):
        h = check_operator(X)
        ref = check_reference(self.reference, h.n_qubits)
        res = iqcc.run(h, ref, schedule or self._schedule(), observables,
                       warm_start=self.warm_start, grad_tol=self.grad_tol)
        self.n_qubits_ = h.n_qubits
        self.reference_ = ref
        self.result_ = res
        self.trace_ = res.trace
        self.energies_ = res.energies
        self.energy_ = res.energy
        self.hamiltonian_ = res.hamiltonian
        self.observables_ = res.observables
        self.stop_reason_ = res.stop_reason
        return self

    def transform(self, X):
        """Dress operators through every fitted iteration (with the same compression)."""
        _check_fitted(self, "trace_")
        ops, many = _as_operators(X, self.n_qubits_)
        out = []
        for op in ops:
            for rec in self.trace_[1:]:
                op = qop.dress_sequence(op, rec.generators, rec.amplitudes)
                op = qop.compress(op, rec.drop_threshold).operator
            out.append(op)
        return out if many else out[0]

    def score(self, X, y=None):
        return -qop.matrix_element(self.transform(X), self.reference_, self.reference_)
