"""Exception hierarchy shared by all modules."""


class NLSignalError(Exception):
    """Base class for every error raised by the package."""


class ShapeError(NLSignalError, ValueError):
    """Array length or dimensions do not match the declared bipartite shape."""


class UnsupportedDimensionError(NLSignalError, ValueError):
    """Operation is only defined for a particular local dimension (usually qubits)."""


class DomainError(NLSignalError, ValueError):
    """Scalar argument outside its admissible range."""


class ValidationError(NLSignalError, ValueError):
    """Input object violates a structural invariant (Hermiticity, idempotence, ...)."""


class PreconditionError(NLSignalError, ValueError):
    """Inputs are well formed but violate an operation's precondition."""


class NumericError(NLSignalError, ArithmeticError):
    """A user supplied nonlinearity returned a non-finite value."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DivergenceError(NLSignalError, ArithmeticError):
    """Integration produced a non-finite amplitude.

    ``partial`` holds the trajectory sampled up to the failure, when available.
    """

    def __init__(self, message, step, partial=None, branch=None):
        super().__init__(message)
        self.step = step
        self.partial = partial
        self.branch = branch


class InsufficientDataError(NLSignalError, ValueError):
    """Too few samples inside a regression window."""


class ConfigError(NLSignalError, ValueError):
    """Experiment configuration failed to parse; message carries the key path."""
