"""DFT conventions, FFT convolution/deconvolution, spectral derivatives and filters.

Transforms follow the unnormalized forward / ``1/n`` inverse convention::

    X_k = sum_j x_j exp(-2 pi i j k / n)
    x_j = (1/n) sum_k X_k exp(+2 pi i j k / n)

Mode ``k`` has signed index ``k~ = k`` for ``k <= n/2`` and ``k - n`` above,
and angular frequency ``2 pi k~ / P`` with period ``P = n * dt``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    IllPosedDeconvolutionError,
    InvalidInputError,
    NonRealSignalError,
)
from .signals import TimeGrid, TimeSeries, require_same_grid

log = logging.getLogger(__name__)

#: relative imaginary residue tolerated when returning to a real signal
REAL_TOL = 1e-10


class ExtensionMode(enum.Enum):
    NONE = "none"
    EVEN_MIRROR = "even"

    @classmethod
    def parse(cls, value) -> "ExtensionMode":
        if isinstance(value, cls):
            return value
        if value is None:
            return cls.NONE
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(
                f"unknown extension mode {value!r}; expected one of "
                f"{[m.value for m in cls]}"
            ) from None


@dataclass(frozen=True)
class FilterSpec:
    """Brick-wall low-pass keeping ``|k~| <= cutoff_fraction * n/2``."""

    cutoff_fraction: float = 0.05

    def __post_init__(self):
        c = self.cutoff_fraction
        if not (np.isfinite(c) and 0.0 < c <= 1.0):
            raise InvalidInputError(f"cutoff_fraction must lie in (0, 1], got {c}")

    def mask(self, n: int) -> np.ndarray:
        """Boolean mask over DFT bins of a length-``n`` transform. DC is always kept."""
        keep = np.abs(signed_modes(n)) <= self.cutoff_fraction * (n / 2.0)
        keep[0] = True
        return keep

    def retained(self, n: int) -> int:
        return int(self.mask(n).sum())


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT coefficients of a series sampled over one period ``P = n*dt``."""

    coeffs: np.ndarray
    period: float
    t0: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if not (np.isfinite(self.period) and self.period > 0):
            raise InvalidInputError(f"period must be > 0, got {self.period}")

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dt(self) -> float:
        return self.period / self.n

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t0, self.dt, self.n)

    @property
    def angular_frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * signed_modes(self.n) / self.period


def signed_modes(n: int) -> np.ndarray:
    """Signed mode index per DFT bin; the even-``n`` Nyquist bin is ``+n/2``."""
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n)


def _next_pow2(m: int) -> int:
    return 1 << max(int(m - 1).bit_length(), 0)


def _to_real(z: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    scale = float(np.max(np.abs(z))) if z.size else 0.0
    residue = float(np.max(np.abs(z.imag)) / scale) if scale > 0 else 0.0
    if residue > REAL_TOL:
        raise NonRealSignalError(
            f"{what}: imaginary residue {residue:.3g} exceeds {REAL_TOL:g} (relative)"
        )
    log.debug("%s: discarded imaginary residue %.3g", what, residue)
    return z.real.copy(), residue


def dft_forward(ts: TimeSeries) -> Spectrum:
    return Spectrum(np.fft.fft(ts.values), ts.grid.period, ts.grid.t0)


def dft_inverse(sp: Spectrum) -> TimeSeries:
    """Inverse DFT back to a real series.

    Raises :class:`NonRealSignalError` when the spectrum is not Hermitian to
    within ``REAL_TOL``.
    """
    values, _ = _to_real(np.fft.ifft(sp.coeffs), "dft_inverse")
    return TimeSeries(sp.grid, values)


def inverse_residue(sp: Spectrum) -> float:
    """Relative imaginary part that :func:`dft_inverse` would discard."""
    z = np.fft.ifft(sp.coeffs)
    scale = float(np.max(np.abs(z)))
    return float(np.max(np.abs(z.imag)) / scale) if scale > 0 else 0.0


def convolve_fft(a: TimeSeries, b: TimeSeries) -> TimeSeries:
    """Causal linear convolution ``dt * sum_m a_m b_{j-m}`` on the grid of ``a``.

    Both inputs are zero-padded to a power of two >= ``2n - 1`` so the
    circular product has no wrap-around, then truncated back to ``n``.
    """
    require_same_grid(a, b)
    n = a.grid.n
    m = _next_pow2(2 * n - 1)
    full = np.fft.irfft(np.fft.rfft(a.values, m) * np.fft.rfft(b.values, m), m)
    return a.replace(full[:n] * a.dt)


def convolve_direct(a: TimeSeries, b: TimeSeries) -> TimeSeries:
    """O(n**2) time-domain reference for :func:`convolve_fft`."""
    require_same_grid(a, b)
    return a.replace(kernels.convolve_direct(a.values, b.values, a.dt))


#: modes with ``|A_k| <= GUARD * max|A|`` are treated as zero in a raw division
DIVISION_GUARD = 64 * np.finfo(float).eps


def deconvolve_fft(c: TimeSeries, a: TimeSeries, reg: float = 0.0) -> TimeSeries:
    """Recover ``k`` from ``c = a (*) k`` by Fourier division.

    With ``reg == 0`` this is the plain quotient ``C_k / A_k``. With
    ``reg > 0`` the Tikhonov quotient
    ``C_k conj(A_k) / (|A_k|**2 + reg**2 * max|A|**2)`` is used instead.
    The result is divided by ``dt`` to undo the ``dt`` factor in
    :func:`convolve_fft`.

    Raises
    ------
    IllPosedDeconvolutionError
        ``reg == 0`` and some ``|A_k|`` is below the division guard.
    """
    require_same_grid(c, a)
    if not (np.isfinite(reg) and reg >= 0):
        raise InvalidInputError(f"reg must be >= 0, got {reg}")
    A = np.fft.fft(a.values)
    C = np.fft.fft(c.values)
    amax = float(np.max(np.abs(A)))
    if amax == 0.0:
        raise IllPosedDeconvolutionError("input function is identically zero")
    if reg == 0.0:
        small = np.abs(A) <= DIVISION_GUARD * amax
        if small.any():
            k = int(np.flatnonzero(small)[0])
            raise IllPosedDeconvolutionError(
                f"|A| at mode {k} (signed {int(signed_modes(a.grid.n)[k])}) is "
                f"{abs(A[k]):.3g}, below the division guard; use reg > 0",
                mode=k,
            )
        K = C / A
    else:
        K = C * np.conj(A) / (np.abs(A) ** 2 + (reg * amax) ** 2)
    values, _ = _to_real(np.fft.ifft(K), "deconvolve_fft")
    return c.replace(values / c.dt)


def even_extension(ts: TimeSeries) -> TimeSeries:
    """Mirror about the last sample without repeating either endpoint.

    ``[v0, ..., v_{n-1}, v_{n-2}, ..., v1]``, length ``2n - 2``.
    """
    v = ts.values
    ext = np.concatenate([v, v[-2:0:-1]])
    return TimeSeries(ts.grid.with_count(ext.shape[0]), ext)


def restrict_extension(ts_ext: TimeSeries, n: int) -> TimeSeries:
    """Keep the first ``n`` samples of an even extension (the t >= t0 branch)."""
    if ts_ext.grid.n != 2 * n - 2:
        raise InvalidInputError(
            f"extension has {ts_ext.grid.n} samples, expected 2n-2 = {2 * n - 2}"
        )
    return TimeSeries(ts_ext.grid.with_count(n), ts_ext.values[:n])


def _derivative_periodic(values: np.ndarray, dt: float, filt: FilterSpec | None):
    m = values.shape[0]
    Y = np.fft.fft(values)
    omega = 2.0 * np.pi * signed_modes(m) / (m * dt)
    D = 1j * omega * Y
    if m % 2 == 0:
        D[m // 2] = 0.0
    if filt is not None:
        D[~filt.mask(m)] = 0.0
    out, _ = _to_real(np.fft.ifft(D), "spectral_derivative")
    return out


def spectral_derivative(
    ts: TimeSeries,
    mode: ExtensionMode = ExtensionMode.EVEN_MIRROR,
    filter: FilterSpec | None = None,
) -> TimeSeries:
    """Derivative via FFT, multiplication by ``i*omega``, inverse FFT.

    With ``EVEN_MIRROR`` the series is first mirrored (see
    :func:`even_extension`) so that a non-periodic curve becomes continuous
    and periodic, and the derivative is restricted back to the original
    samples. The Nyquist bin of an even-length transform is dropped. A
    ``filter`` zeroes modes above its cutoff, measured on the transformed
    length.
    """
    mode = ExtensionMode.parse(mode)
    n = ts.grid.n
    if n < 4:
        raise InvalidInputError("spectral derivative needs at least 4 samples")
    if mode is ExtensionMode.EVEN_MIRROR:
        ext = even_extension(ts)
        d = _derivative_periodic(ext.values, ts.dt, filter)
        return ts.replace(d[:n])
    return ts.replace(_derivative_periodic(ts.values, ts.dt, filter))


def low_pass_filter(ts: TimeSeries, filter: FilterSpec) -> TimeSeries:
    """Zero every DFT mode with ``|k~| > cutoff_fraction * n/2``.

    The mask is symmetric in ``k~`` so conjugate symmetry, and hence a real
    output, is preserved. Applying it twice equals applying it once.
    """
    if not isinstance(filter, FilterSpec):
        filter = FilterSpec(float(filter))
    n = ts.grid.n
    if filter.cutoff_fraction >= 1.0:
        return ts
    Y = np.fft.fft(ts.values)
    Y[~filter.mask(n)] = 0.0
    out, _ = _to_real(np.fft.ifft(Y), "low_pass_filter")
    return ts.replace(out)


def low_pass_filter_jump(ts: TimeSeries, filter: FilterSpec, jump: float) -> TimeSeries:
    """Low-pass a series whose periodic continuation jumps by ``jump`` at ``t0``.

    A sawtooth carrying the same jump is subtracted before filtering and
    added back afterwards, so the brick-wall cutoff acts on a continuous
    periodic signal and does not ring at the endpoints.
    """
    n = ts.grid.n
    saw = jump * (0.5 - np.arange(n) / n)
    smooth = low_pass_filter(ts.replace(ts.values - saw), filter)
    return ts.replace(smooth.values + saw)


def filtered_impulse(grid: TimeGrid, filter: FilterSpec | None) -> np.ndarray:
    """Band-limited unit impulse at ``t0`` with area 1 (``1/dt`` at sample 0 when unfiltered).

    This is the periodic Dirichlet kernel that a hard cutoff turns a jump's
    derivative into.
    """
    n = grid.n
    spec = np.ones(n, dtype=np.complex128)
    if filter is not None:
        spec[~filter.mask(n)] = 0.0
    return np.fft.ifft(spec).real / grid.dt


def high_frequency_fraction(ts: TimeSeries, above: float = 0.25) -> float:
    """Share of spectral energy in modes above ``above * Nyquist``.

    Computed on the even extension so that a smooth non-periodic curve is not
    penalised for the jump between its endpoints.
    """
    if ts.grid.n < 3:
        return 0.0
    ext = even_extension(ts).values
    m = ext.shape[0]
    E = np.abs(np.fft.fft(ext)) ** 2
    total = float(E.sum())
    if total == 0.0:
        return 0.0
    return float(E[np.abs(signed_modes(m)) > above * (m / 2.0)].sum() / total)
