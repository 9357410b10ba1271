"""Exception hierarchy shared by all modules."""


class ReachError(Exception):
    """Base class for every error raised by polyreach."""


class InvalidInputError(ReachError, ValueError):
    """Arguments violate an operation's preconditions."""


class ResourceLimitError(ReachError):
    """A size cap (vertex count, degree, dimension) would be exceeded."""


class SingularSystemError(ReachError, ArithmeticError):
    """Elimination met a pivot below the conditioning threshold."""


class InfeasibleError(ReachError):
    """A linear program has an empty feasible region."""


class UnboundedError(ReachError):
    """A linear program's objective is unbounded on its feasible region."""


class EmptySetError(InfeasibleError):
    """A set that must be non-empty turned out to be empty."""


class UnboundedSetError(UnboundedError):
    """A set that must be bounded is unbounded along some axis."""


class StrategyViolationError(ReachError):
    """Dynamics do not satisfy the chosen image operator's requirements."""


class DivergenceError(ReachError, OverflowError):
    """A reachable-set bound exceeded the divergence threshold."""


class ModelFormatError(InvalidInputError):
    """A model or trace file could not be parsed."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
