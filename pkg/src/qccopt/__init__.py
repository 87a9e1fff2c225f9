"""Qubit coupled cluster amplitude optimisation on a classical computer."""

from .errors import (ContractViolation, ConvergenceError, DimensionError, GeneratorConventionError,
                     HamiltonianParseError, NonFiniteObjectiveError, NumericalError, QCCError, QCCWarning,
                     ReferenceInstabilityError)
from .estimators import IterativeQCC, QCCOptimizer
from .generators import GeneratorPool, dha_solve, make_pool, propose_generators, rank, select
from .iqcc import IqccSchedule, IterationSpec
from .iqcc import run as run_iqcc
from .operator import QubitOperator, compress, dress, dress_sequence, expectation, load, save
from .optimizer import minimize
from .pauli import PauliWord
from .state import SparseState, apply_ansatz
from .sympoly import CompiledAnsatz, count_terms, energy_and_gradient, evaluate
from .sympoly import compile as compile_ansatz
from .truncated import evaluate_fn, sweep_fn

__version__ = "0.1.0"
