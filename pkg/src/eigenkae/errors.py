"""Exception types raised across the package.

Each maps to one failure family so callers can react to the kind of
problem (bad shapes, bad values, numerical breakdown, bad files) without
parsing messages.
"""


class EigenkaeError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(EigenkaeError, ValueError):
    """Array shapes are inconsistent with the operation."""


class ParameterError(EigenkaeError, ValueError):
    """A scalar/config argument is out of its valid range."""


class ConvergenceError(EigenkaeError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class IllConditionedError(EigenkaeError, RuntimeError):
    """A matrix is numerically singular beyond the configured limit."""


class PairingError(EigenkaeError, ValueError):
    """Complex-conjugate eigenvalue pairing was violated."""


class RankDeficiencyError(EigenkaeError, ValueError):
    """Requested rank exceeds the numerical rank of the data."""


class StateError(EigenkaeError, RuntimeError):
    """An operation was called with stale or missing cached state."""


class DivergenceError(EigenkaeError, RuntimeError):
    """Training loss exploded past the divergence guard."""


class FormatError(EigenkaeError, ValueError):
    """A serialized file is malformed.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DegenerateSpectrumWarning(UserWarning):
    """Eigenvalues are (nearly) repeated; adjoint formulas may degrade."""
