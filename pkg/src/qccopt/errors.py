"""Exception hierarchy shared by every module of the package."""


class QCCError(Exception):
    """Base class for all errors raised by :mod:`qccopt`."""


class DimensionError(QCCError, ValueError):
    """Operands act on different numbers of qubits."""


class ContractViolation(QCCError, ValueError):
    """An argument breaks a documented precondition."""


class HamiltonianParseError(QCCError, ValueError):
    """A Hamiltonian (or state) file could not be parsed.

    The offending line number is kept in :attr:`lineno`.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class GeneratorConventionError(QCCError, ValueError):
    """A product of generators acting on the reference has an imaginary phase.

    Happens only when a generator does not carry an odd number of ``Y`` factors.
    """


class NumericalError(QCCError, ArithmeticError):
    """Base for failures of a numerical procedure."""


class ReferenceInstabilityError(NumericalError):
    """Some ``cos(t_j / 2)`` vanished, making the tangent parametrisation singular."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap; the last iterate is attached."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class NonFiniteObjectiveError(NumericalError):
    """The objective returned NaN or infinity; the offending point is attached."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class QCCWarning(UserWarning):
    pass
