"""Exception hierarchy shared across the package."""


class NusaError(Exception):
    """Base class for all package errors."""


class ShapeError(NusaError):
    """Operands have incompatible or invalid dimensions."""


class ConvergenceError(NusaError):
    """An iterative routine failed to converge within its cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateSpectrumError(NusaError):
    """A spectrum is all-zero, so energy fractions are undefined."""


class ProvenanceError(NusaError):
    """An adapter's bases do not originate from the given base matrix."""


class ConfigError(NusaError):
    """An experiment configuration is invalid."""

    def __init__(self, message, field_path=None):
        super().__init__(message)
        self.field_path = field_path


class ProtocolError(NusaError):
    """The evaluation protocol was violated (missing snapshots, partial grid)."""


class DataError(NusaError):
    """Input data is malformed (labels out of range, non-finite values)."""
