"""Tracer-kinetic forward models, residue recovery and perfusion metrics.

The tissue curve obeys ``C_t = C_a (*) k`` with the weighted residue
``k(t) = A * r(t)``, ``A = CBF * rho``. Only the product ``A`` is observable
from ``C_a`` and ``C_t``; every "cbf" reported here is that product, and a
physiological CBF needs an externally supplied tissue density.

From ``k``:

* ``CBF = max k`` (attained at ``t = 0`` where ``r = 1``),
* ``MTT = (1/CBF) int k dt``,
* ``TTH = (2/CBF) int t k dt - MTT**2`` (variance of transit times),
* ``h = -(1/CBF) dk/dt``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import spectral
from .errors import (
    DegenerateSignalError,
    InvalidInputError,
    NumericalError,
    TailNotDecayedError,
)
from .signals import (
    GammaParams,
    TimeGrid,
    TimeSeries,
    gamma_pdf,
    gamma_residue,
    raw_moment,
    require_same_grid,
    scale_by,
)
from .spectral import ExtensionMode, FilterSpec

log = logging.getLogger(__name__)

TAIL_TOL = 1e-4
QUALITY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class ForwardModelConfig:
    cbf_rho: float
    aif_params: GammaParams
    impulse_params: GammaParams
    grid: TimeGrid

    def __post_init__(self):
        if not (np.isfinite(self.cbf_rho) and self.cbf_rho > 0):
            raise InvalidInputError(f"cbf_rho must be > 0, got {self.cbf_rho}")


@dataclass(frozen=True)
class PerfusionMetrics:
    """CBF (=max k, arbitrary units), MTT (s), TTH (s**2) and optional raw moments of h."""

    cbf: float
    mtt: float
    tth: float
    raw_moments: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"cbf": self.cbf, "mtt": self.mtt, "tth": self.tth}
        for order, value in sorted(self.raw_moments.items()):
            d[f"moment_{order}"] = value
        return d


@dataclass(frozen=True)
class RecoveredCurves:
    k: TimeSeries
    r: TimeSeries
    h: TimeSeries
    cbf: float
    k_raw: TimeSeries | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def quality_ok(self) -> bool:
        return bool(self.diagnostics.get("quality_ok", True))


@dataclass(frozen=True, eq=False)
class SyntheticCurves:
    """Noise-free curves produced by :func:`synthesize`."""

    c_a: TimeSeries
    h: TimeSeries
    r: TimeSeries
    k: TimeSeries
    c_ven: TimeSeries
    c_t: TimeSeries


def synthesize(cfg: ForwardModelConfig) -> SyntheticCurves:
    """Gamma-variate AIF and impulse response pushed through both forward models.

    The residue is the exact gamma survival function, not a quadrature of
    the sampled density.
    """
    c_a = gamma_pdf(cfg.aif_params, cfg.grid)
    h = gamma_pdf(cfg.impulse_params, cfg.grid)
    r = gamma_residue(cfg.impulse_params, cfg.grid)
    return SyntheticCurves(
        c_a=c_a,
        h=h,
        r=r,
        k=scale_by(r, cfg.cbf_rho),
        c_ven=forward_cven(c_a, h),
        c_t=forward_ct(c_a, r, cfg.cbf_rho),
    )


def forward_cven(c_art: TimeSeries, h: TimeSeries) -> TimeSeries:
    """Venous outflow ``c_ven = c_art (*) h``."""
    return spectral.convolve_fft(c_art, h)


def forward_ct(c_art: TimeSeries, r: TimeSeries, cbf_rho: float) -> TimeSeries:
    """Tissue curve ``C_t = cbf_rho * (C_a (*) r)``."""
    if not (np.isfinite(cbf_rho) and cbf_rho >= 0):
        raise InvalidInputError(f"cbf_rho must be >= 0, got {cbf_rho}")
    return scale_by(spectral.convolve_fft(c_art, r), cbf_rho)


def recover_k(c_a: TimeSeries, c_t: TimeSeries, reg: float = 0.0) -> TimeSeries:
    """Weighted residue ``k = IFFT(FFT(C_t) / FFT(C_a))`` (optionally Tikhonov-regularized)."""
    return spectral.deconvolve_fft(c_t, c_a, reg)


def cbf_from_k(k: TimeSeries) -> float:
    peak = k.max()
    if not peak > 0:
        raise DegenerateSignalError(
            f"recovered residue has non-positive maximum {peak:.3g}; no flow estimate"
        )
    return peak


def check_tail(k: TimeSeries, tol: float = TAIL_TOL) -> None:
    """Require ``|k(t_end)| <= tol * max|k|`` before integrating to infinity."""
    peak = float(np.max(np.abs(k.values)))
    end = abs(float(k.values[-1]))
    if peak == 0.0 or end > tol * peak:
        raise TailNotDecayedError(
            f"k has not decayed at t={k.t[-1]:g}s: |k_end|/max|k| = "
            f"{end / peak if peak else float('nan'):.3g} > {tol:g}; extend the grid"
        )


def _check_cbf(cbf: float) -> None:
    if not (np.isfinite(cbf) and cbf > 0):
        raise InvalidInputError(f"cbf must be > 0, got {cbf}")


def mtt_from_k(k: TimeSeries, cbf: float, tail_tol: float = TAIL_TOL) -> float:
    """``MTT = (1/cbf) * int k dt`` (trapezoid)."""
    _check_cbf(cbf)
    check_tail(k, tail_tol)
    return float(trapezoid(k.values, dx=k.dt)) / cbf


def tth_from_k(k: TimeSeries, cbf: float, mtt: float, tail_tol: float = TAIL_TOL) -> float:
    """``TTH = (2/cbf) * int t k dt - mtt**2``.

    Negative round-off down to ``-1e-6 * mtt**2`` is clamped to zero; anything
    more negative means ``k``, ``cbf`` and ``mtt`` are inconsistent.
    """
    _check_cbf(cbf)
    check_tail(k, tail_tol)
    t = k.t - k.grid.t0
    tth = 2.0 * float(trapezoid(t * k.values, dx=k.dt)) / cbf - mtt**2
    if tth < 0:
        if tth < -1e-6 * mtt**2:
            raise NumericalError(
                f"TTH = {tth:.3g} < 0: k, cbf and mtt are inconsistent"
            )
        tth = 0.0
    return tth


def recover_h(
    k: TimeSeries,
    cbf: float,
    filter: FilterSpec | None = None,
    mode: ExtensionMode = ExtensionMode.EVEN_MIRROR,
) -> TimeSeries:
    """Impulse response ``h = -(1/cbf) dk/dt`` by spectral differentiation.

    The default even extension is what makes this work on a residue that
    starts at its maximum and decays to zero; ``mode=NONE`` differentiates the
    implied periodic signal, jump included.
    """
    _check_cbf(cbf)
    dk = spectral.spectral_derivative(k, mode, filter)
    return k.replace(-dk.values / cbf)


def recover_h_jump(
    k: TimeSeries,
    filter: FilterSpec | None = None,
    window: float = 0.5,
) -> tuple[TimeSeries, float]:
    """Impulse response from the periodic derivative of ``k`` with its jump removed.

    Seen as one period of a periodic signal, ``k`` rises by ``J = k(0) -
    k(end)`` (ideally the CBF) at ``t0``, so its periodic derivative is
    ``-J h + J delta``. Differentiating in the periodic basis, removing the
    (equally filtered) impulse and dividing by ``J`` gives ``h`` without the
    ringing that a hard cutoff causes at the jump, and without mirroring
    noise across the endpoints.

    ``J`` is estimated by least squares from the last ``window`` fraction of
    the period, where a causal, decayed ``h`` must vanish but the filtered
    impulse still rings. Returns ``(h, J)``.
    """
    if not 0.0 < window < 1.0:
        raise InvalidInputError(f"window must lie in (0, 1), got {window}")
    n = k.grid.n
    minus_dk = -spectral.spectral_derivative(k, ExtensionMode.NONE, filter).values
    # unit sawtooth differentiated exactly like k: -1/P plus the band-limited
    # impulse, so adding 1/P back leaves the impulse the jump turns into
    saw = k.replace(0.5 - np.arange(n) / n)
    impulse = spectral.spectral_derivative(saw, ExtensionMode.NONE, filter).values + 1.0 / k.grid.period
    tail = slice(int(round(n * (1.0 - window))), n)
    denom = float(impulse[tail] @ impulse[tail])
    if denom == 0.0:
        raise NumericalError("filtered impulse vanishes on the estimation window")
    jump = -float(impulse[tail] @ minus_dk[tail]) / denom
    if not jump > 0:
        raise DegenerateSignalError(f"estimated residue jump {jump:.3g} is not positive")
    return k.replace((jump * impulse + minus_dk) / jump), jump


def _refine_peak(t, v, j):
    """Sub-sample peak of ``ln v`` by a parabola through samples ``j-1..j+1``."""
    if v[j - 1] <= 0 or v[j + 1] <= 0:
        return float(t[j]), float(np.log(v[j]))
    ym, y0, yp = np.log(v[j - 1 : j + 2])
    curv = ym - 2.0 * y0 + yp
    if not curv < 0:
        return float(t[j]), float(y0)
    off = 0.5 * (ym - yp) / curv
    return float(t[j] + off * (t[j + 1] - t[j])), float(y0 - 0.25 * (ym - yp) * off)


def fit_gamma_variate(h: TimeSeries, threshold: float = 0.1) -> GammaParams:
    """Log-linear gamma-variate fit about the peak.

    With ``s = t / t_max`` a gamma variate satisfies

        ln(h / h_max) = alpha * (ln s + 1 - s),   alpha = K - 1,

    so ``alpha`` is the least-squares slope through the origin of
    ``ln(h/h_max)`` against ``ln s + 1 - s``. The peak ``(t_max, h_max)`` is
    located between samples by a parabola through the log of the three
    samples around the largest one. The shape is ``K = alpha + 1``
    and the scale ``Q = t_max / alpha``. Only the contiguous run of samples
    above ``threshold * h_max`` around the peak enters the fit, and samples
    at or below ``1e-12 * h_max`` never do.
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    v = h.values
    j = int(np.argmax(v))
    hmax = float(v[j])
    if not hmax > 0:
        raise DegenerateSignalError("impulse response has no positive maximum")
    if j == 0 or j == v.shape[0] - 1:
        raise NumericalError(
            f"maximum of h lies on the grid boundary (index {j}); cannot fit a gamma variate"
        )
    t = h.t - h.grid.t0
    floor = max(threshold, 1e-12) * hmax
    lo = j
    while lo > 0 and v[lo - 1] > floor:
        lo -= 1
    hi = j
    while hi < v.shape[0] - 1 and v[hi + 1] > floor:
        hi += 1
    idx = np.arange(lo, hi + 1)
    idx = idx[t[idx] > 0]
    if idx.size < 3:
        raise NumericalError("too few samples above threshold for a gamma-variate fit")
    t_max, log_hmax = _refine_peak(t, v, j)
    s = t[idx] / t_max
    x = np.log(s) + 1.0 - s
    y = np.log(v[idx]) - log_hmax
    alpha = float(x @ y) / float(x @ x)
    if not alpha > 0:
        raise NumericalError(f"fitted slope {alpha:.3g} is not positive")
    return GammaParams(alpha + 1.0, t_max / alpha)


def recover_curves(
    c_a: TimeSeries,
    c_t: TimeSeries,
    reg: float = 0.0,
    filter: FilterSpec | None = None,
    route: str = "auto",
    quality_threshold: float = QUALITY_THRESHOLD,
    mode: ExtensionMode = ExtensionMode.EVEN_MIRROR,
) -> RecoveredCurves:
    """Deconvolve, optionally low-pass, and recover ``r`` and ``h``.

    ``route`` picks the impulse-response recovery: ``"even"`` differentiates
    the even extension of ``k`` (exact on clean data), ``"jump"`` uses
    :func:`recover_h_jump` and reports its jump as the CBF (robust when
    ``k`` carries amplified noise), ``"auto"`` picks ``"jump"`` whenever a
    filter is given.

    With the jump route and a filter, ``k`` is low-passed by
    :func:`spectral.low_pass_filter_jump` so it does not ring at the
    endpoints; the unfiltered quotient is kept as ``k_raw``.

    ``diagnostics["quality_ok"]`` is False when more than
    ``quality_threshold`` of the returned residue's spectral energy sits
    above a quarter of the Nyquist frequency, the signature of noise blown
    up by the division; ``raw_quality_ok`` applies the same test before
    filtering.
    """
    require_same_grid(c_a, c_t)
    if route not in ("auto", "even", "jump"):
        raise InvalidInputError(f"unknown recovery route {route!r}")
    if route == "auto":
        route = "jump" if filter is not None else "even"
    k_raw = recover_k(c_a, c_t, reg)
    hf_raw = spectral.high_frequency_fraction(k_raw)
    diagnostics = {
        "reg": float(reg),
        "cutoff_fraction": None if filter is None else filter.cutoff_fraction,
        "route": route,
        "high_frequency_fraction_raw": hf_raw,
        "raw_quality_ok": bool(hf_raw <= quality_threshold),
        "quality_threshold": quality_threshold,
    }
    if route == "jump":
        h, cbf = recover_h_jump(k_raw, filter)
        k = (
            spectral.low_pass_filter_jump(k_raw, filter, cbf)
            if filter is not None
            else k_raw
        )
        diagnostics["jump"] = cbf
    else:
        k = spectral.low_pass_filter(k_raw, filter) if filter is not None else k_raw
        cbf = cbf_from_k(k)
        h = recover_h(k, cbf, filter, mode)
    hf = spectral.high_frequency_fraction(k)
    diagnostics["high_frequency_fraction"] = hf
    diagnostics["quality_ok"] = bool(hf <= quality_threshold)
    diagnostics["k_max"] = k.max()
    refit = spectral.convolve_fft(c_a, k).values - c_t.values
    norm = float(np.linalg.norm(c_t.values))
    diagnostics["reconvolution_residual"] = (
        float(np.linalg.norm(refit)) / norm if norm > 0 else float(np.linalg.norm(refit))
    )
    if not diagnostics["quality_ok"]:
        log.warning(
            "residue looks noise-dominated: %.3g of its spectral energy is "
            "high-frequency (threshold %.3g)",
            hf,
            quality_threshold,
        )
    return RecoveredCurves(
        k=k,
        r=k.replace(k.values / cbf),
        h=h,
        cbf=cbf,
        k_raw=k_raw,
        diagnostics=diagnostics,
    )


def perfusion_metrics(
    k: TimeSeries,
    cbf: float | None = None,
    h: TimeSeries | None = None,
    tail_tol: float = TAIL_TOL,
    moments=(3, 4),
) -> PerfusionMetrics:
    """CBF, MTT and TTH from ``k``; raw moments of ``h`` when it is given."""
    if cbf is None:
        cbf = cbf_from_k(k)
    mtt = mtt_from_k(k, cbf, tail_tol)
    tth = tth_from_k(k, cbf, mtt, tail_tol)
    raw = {} if h is None else {int(o): raw_moment(h, o) for o in moments}
    return PerfusionMetrics(cbf=cbf, mtt=mtt, tth=tth, raw_moments=raw)
