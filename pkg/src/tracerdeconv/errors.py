"""Exception hierarchy. The CLI maps each family to an exit code."""


class TracerDeconvError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(TracerDeconvError, ValueError):
    """An argument violates a documented precondition."""


class GridMismatchError(InvalidInputError):
    """Two series that must share a time grid do not."""


class NumericalError(TracerDeconvError, ArithmeticError):
    """A numerical procedure cannot produce a trustworthy result."""


class DegenerateSignalError(NumericalError):
    """A signal has no dynamic range where one is required."""


class IllPosedDeconvolutionError(NumericalError):
    """Unregularized Fourier division hit a (near-)zero mode."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class NonRealSignalError(NumericalError):
    """An inverse transform that should be real carries a large imaginary part."""


class TailNotDecayedError(NumericalError):
    """A curve has not decayed at the end of the grid; integrals to infinity are unreliable."""


class ConfigError(TracerDeconvError):
    """Configuration file or option is invalid."""


class CsvFormatError(TracerDeconvError):
    """Malformed curve CSV."""
