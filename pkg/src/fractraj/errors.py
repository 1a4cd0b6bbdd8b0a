"""Exception hierarchy shared by all fractraj modules."""


class FractrajError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FractrajError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(FractrajError, ArithmeticError):
    """A series could not be summed to working accuracy within its budget."""


class RejectionError(FractrajError, ValueError):
    """A system matrix has a structure this package does not handle."""


class FactorizationError(FractrajError, ArithmeticError):
    """The restart map does not split into scaling times rotation."""


class SingularPointError(FractrajError, ArithmeticError):
    """The curve is not regular (vanishing speed) at the requested time."""


class GridMismatchError(FractrajError, ValueError):
    """Two trajectories were expected to share a time grid but do not."""


class DegenerateSegmentWarning(UserWarning):
    """A zero-length polyline segment was skipped during crossing search."""
