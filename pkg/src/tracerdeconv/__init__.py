"""Fourier-domain tracer-dilution deconvolution and perfusion metrics."""

from .errors import TracerDeconvError
from .kernels import BACKEND
from .signals import GammaParams, NoiseSpec, TimeGrid, TimeSeries
from .spectral import ExtensionMode, FilterSpec, Spectrum

__all__ = [
    "BACKEND",
    "ExtensionMode",
    "FilterSpec",
    "GammaParams",
    "NoiseSpec",
    "Spectrum",
    "TimeGrid",
    "TimeSeries",
    "TracerDeconvError",
]
__version__ = "0.1.0"
