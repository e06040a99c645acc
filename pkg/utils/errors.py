from typing import Optional, Sequence


class PolywellError(Exception):
    """Base class for every error raised by this package"""


class MatrixValidationError(PolywellError, ValueError):
    """Input is not a finite square matrix of dimension >= 2"""


class DimensionMismatchError(PolywellError, ValueError):
    """Operands have incompatible dimensions"""


class SvdConvergenceError(PolywellError, ArithmeticError):
    """Jacobi sweeps hit the iteration cap"""


class NoViolationExistsError(PolywellError):
    """The Z=0 construction cannot break the rank-one inequality"""

    def __init__(self, message: str, sigma: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.sigma = None if sigma is None else [float(s) for s in sigma]


class NotPolyconvexError(PolywellError):
    """Operation needs a polyconvex energy; carries the failing certificate"""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class MeshValidationError(PolywellError, ValueError):
    """Triangulation is degenerate, clockwise, or its boundary set is wrong"""


class BoundaryMismatchError(PolywellError, ValueError):
    """Two fields disagree on the boundary nodes"""


class ConfigError(PolywellError):
    """Configuration file or option values are invalid"""


class InputError(PolywellError):
    """A CLI input file is missing or malformed"""
