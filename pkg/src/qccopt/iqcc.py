"""Iterative QCC: rank, select, optimise, dress, compress, repeat."""

import configparser
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import generators as gen
from . import operator as qop
from . import sympoly
from .errors import ContractViolation, NumericalError
from .optimizer import minimize

log = logging.getLogger(__name__)

DEFAULT_DROP_THRESHOLD = 5e-7


@dataclass(frozen=True)
class IterationSpec:
    m: int
    k: int
    drop_threshold: float = DEFAULT_DROP_THRESHOLD

    def __post_init__(self):
        if self.m < 1 or not 0 <= self.k <= self.m:
            raise ContractViolation(f"bad schedule entry m={self.m}, k={self.k}")


@dataclass
class IqccSchedule:
    iterations: list
    max_iterations: int = None
    energy_tol: float = 0.0

    @classmethod
    def repeat(cls, m, k, times, drop_threshold=DEFAULT_DROP_THRESHOLD, **kw):
        return cls([IterationSpec(m, k, drop_threshold) for _ in range(times)], **kw)

    @property
    def n_iterations(self):
        n = len(self.iterations)
        return n if self.max_iterations is None else min(n, self.max_iterations)

    @classmethod
    def from_config(cls, path):
        """Read a sectioned schedule file.

        ``[global]`` may set ``max_iterations`` and ``energy_tol``; every other
        section (in file order) is one iteration with keys ``generators``,
        ``order``, optional ``threshold`` and ``repeat``.
        """
        cp = configparser.ConfigParser()
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
        glob = cp["global"] if cp.has_section("global") else {}
        items = []
        for name in cp.sections():
            if name == "global":
                continue
            sec = cp[name]
            try:
                spec = IterationSpec(int(sec["generators"]), int(sec["order"]),
                                     float(sec.get("threshold", DEFAULT_DROP_THRESHOLD)))
            except KeyError as exc:
                raise ValueError(f"section [{name}] lacks key {exc}") from None
            items.extend([spec] * int(sec.get("repeat", 1)))
        max_it = glob.get("max_iterations")
        return cls(items, int(max_it) if max_it is not None else None,
                   float(glob.get("energy_tol", 0.0)))


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    max_ranking: float
    hamiltonian_terms: int
    observable_expectations: dict
    wall_seconds: float
    n_generators: int = 0
    order: int = 0
    e_opt: float = None
    removed_l1: float = 0.0
    generators: tuple = ()
    amplitudes: tuple = ()
    drop_threshold: float = 0.0


@dataclass
class IqccResult:
    trace: list
    hamiltonian: qop.QubitOperator
    observables: dict
    stop_reason: str
    reference: int = 0

    @property
    def energies(self):
        return np.array([r.energy for r in self.trace])

    @property
    def energy(self):
        return self.trace[-1].energy


def run(h0, reference, schedule, observables=None, warm_start="zero", grad_tol=1e-8,
        max_evals=None, selection_policy="extend", debug=False, snapshot_dir=None,
        progress=None):
    """Run iQCC iterations on *h0* from the basis state *reference*.

    Each iteration ranks the generators of the current dressed Hamiltonian,
    takes the top ``m`` (not splitting degenerate groups), minimises
    ``E[k]``, dresses both the Hamiltonian and the tracked *observables*,
    records ``<0|H|0>``, and then drops terms below the threshold.
    """
    reference = int(reference)
    if not 0 <= reference < (1 << h0.n_qubits):
        raise ContractViolation("reference wider than the Hamiltonian")
    observables = dict(observables or {})
    for name, op in observables.items():
        if op.n_qubits != h0.n_qubits:
            raise ContractViolation(f"observable {name!r} has the wrong width")

    def diag(op):
        return qop.matrix_element(op, reference, reference)

    h = h0
    start = time.perf_counter()
    trace = [IterationRecord(0, diag(h), float("nan"), len(h),
                             {k: diag(v) for k, v in observables.items()},
                             time.perf_counter() - start)]
    stop = "schedule exhausted"
    for i, spec in enumerate(schedule.iterations[:schedule.n_iterations], start=1):
        t_start = time.perf_counter()
        pool = gen.rank(gen.propose_generators(h, reference))
        max_r = float(pool.rankings[0]) if len(pool) else 0.0
        if len(pool) == 0 or max_r == 0.0:
            trace[-1].max_ranking = max_r
            stop = "converged: no gradients"
            break
        trace[-1].max_ranking = max_r
        chosen, adjust = gen.select(pool, spec.m, selection_policy)
        if adjust:
            log.info("iteration %d: selection adjusted by %+d to keep degenerate groups", i, adjust)
        k = min(spec.k, len(chosen))
        ansatz = sympoly.compile(h, chosen, k)
        t0 = gen.dha_solve(chosen).t if warm_start == "dha" else np.zeros(len(chosen))
        res = minimize(lambda t: sympoly.energy_and_gradient(ansatz, t), t0,
                       grad_tol=grad_tol, max_evals=max_evals)
        words = chosen.generators
        h_new = qop.dress_sequence(h, words, res.t_opt)
        energy = diag(h_new)
        if debug and k == len(chosen) and abs(energy - res.e_opt) > 1e-9:
            raise NumericalError(f"dressing self-check failed: <0|H|0>={energy!r}, "
                                 f"E_opt={res.e_opt!r}")
        comp = qop.compress(h_new, spec.drop_threshold)
        h = comp.operator
        for name in observables:
            observables[name] = qop.compress(
                qop.dress_sequence(observables[name], words, res.t_opt),
                spec.drop_threshold).operator
        rec = IterationRecord(i, energy, float("nan"), len(h),
                              {k_: diag(v) for k_, v in observables.items()},
                              time.perf_counter() - t_start, len(words), k, res.e_opt,
                              comp.removed_l1, tuple(words), tuple(float(a) for a in res.t_opt),
                              spec.drop_threshold)
        if snapshot_dir is not None:
            Path(snapshot_dir).mkdir(parents=True, exist_ok=True)
            qop.save(h, Path(snapshot_dir) / f"hamiltonian_{i:03d}.txt")
        if progress is not None:
            progress(rec)
        improvement = trace[-1].energy - energy
        trace.append(rec)
        if schedule.energy_tol > 0 and improvement < schedule.energy_tol:
            stop = "converged: energy change below tolerance"
            break
    else:
        pool = gen.rank(gen.propose_generators(h, reference)) if len(h) else None
        trace[-1].max_ranking = float(pool.rankings[0]) if pool is not None and len(pool) else 0.0
    return IqccResult(trace, h, observables, stop, reference)
