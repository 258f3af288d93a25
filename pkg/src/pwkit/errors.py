"""Exception hierarchy shared by all pwkit modules."""

import numpy as np


class PWError(Exception):
    """Base class for every error raised by pwkit."""


class DomainError(PWError, ValueError):
    """Input outside the mathematical domain of an operation (NaN, inf, bad index)."""


class CatalogIndexError(PWError, IndexError):
    """Axis index j outside 1..n."""


class UnsupportedRepresentationError(PWError, TypeError):
    pass


class ResourceError(PWError, MemoryError):
    """A grid would exceed the configured node budget."""


class DimensionError(PWError, ValueError):
    pass


class SingularMatrixError(PWError, ValueError):
    def __init__(self, det, message=None):
        self.det = float(det)
        super().__init__(message or f"matrix is singular to working precision (det = {self.det:.3e})")


class NotInjectiveError(PWError, ValueError):
    """Raised for affine maps with a nontrivial kernel; carries the kernel basis."""

    def __init__(self, kernel, message=None):
        self.kernel = np.asarray(kernel)
        k = self.kernel.shape[0]
        super().__init__(message or f"affine map is not injective: kernel has dimension {k}")


class WrongRegimeError(PWError, ValueError):
    pass


class PreconditionError(PWError, ValueError):
    pass


class DegenerateLineError(PWError, ValueError):
    pass


class ResolutionError(PWError, ValueError):
    pass


class UndefinedBandwidthError(PWError, ValueError):
    pass
