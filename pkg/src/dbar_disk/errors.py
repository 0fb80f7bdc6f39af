"""Exception hierarchy shared by all solver modules."""


class DbarError(Exception):
    """Base class for every error raised by this package."""


class SizingError(DbarError, ValueError):
    """Grid or operator dimensions are outside the supported range."""


class SingularSystemError(DbarError):
    """A linear system could not be factorized.

    ``condition`` holds a 1-norm condition estimate when one is available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ExceptionalPointError(SingularSystemError):
    """The CGO condition system for a given k is singular."""


class ResolutionError(DbarError):
    """No admissible resolution was found (or a mode matrix is singular)."""


class ConvergenceError(DbarError):
    """Fixed-point iteration did not reach its tolerance.

    The :class:`~dbar_disk.picard.IterationTrace` is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DivergenceError(ConvergenceError):
    """Fixed-point iteration produced growing or non-finite iterates."""


class PotentialFileError(DbarError):
    """Base class for problems reading a sampled-potential file."""


class MalformedHeaderError(PotentialFileError):
    pass


class ShapeMismatchError(PotentialFileError):
    pass


class NonFiniteError(PotentialFileError):
    pass
