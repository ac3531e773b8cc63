"""Subcommand implementations: synthesis, deconvolution, figure data, noise study."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import perfusion, spectral
from .config import PipelineConfig
from .csvio import CurveRecord, save_csv, save_table
from .errors import ConfigError, CsvFormatError, InvalidInputError, NumericalError
from .perfusion import ForwardModelConfig
from .signals import NoiseSpec, TimeSeries, add_noise, finite_diff_derivative, gamma_pdf
from .spectral import ExtensionMode, FilterSpec

log = logging.getLogger(__name__)


def forward_config(cfg: PipelineConfig) -> ForwardModelConfig:
    return ForwardModelConfig(cfg.cbf_rho, cfg.aif_params, cfg.impulse_params, cfg.grid)


def noisy_inputs(c_a: TimeSeries, c_t: TimeSeries, sigma: float, seed: int):
    """Independent noise on the arterial (``seed``) and tissue (``seed + 1``) curves."""
    return (
        add_noise(c_a, NoiseSpec(sigma, seed)),
        add_noise(c_t, NoiseSpec(sigma, seed + 1)),
    )


def cmd_synth(cfg: PipelineConfig) -> CurveRecord:
    s = perfusion.synthesize(forward_config(cfg))
    c_a, c_t = noisy_inputs(s.c_a, s.c_t, cfg.sigma, cfg.seed)
    return CurveRecord.from_series(
        c_a=c_a, h_true=s.h, r=s.r, k_true=s.k, c_ven=s.c_ven, c_t=c_t
    )


def relative_l2(estimate, reference) -> float:
    e, r = np.asarray(estimate, float), np.asarray(reference, float)
    return float(np.linalg.norm(e - r) / np.linalg.norm(r))


def _recover(c_a: TimeSeries, c_t: TimeSeries, cfg: PipelineConfig):
    return perfusion.recover_curves(
        c_a,
        c_t,
        reg=cfg.reg,
        filter=cfg.filter_spec,
        route=cfg.route,
        quality_threshold=cfg.quality_threshold,
        mode=cfg.extension_mode,
    )


def _metrics_report(curves, cfg: PipelineConfig, tail_tol=None) -> tuple[dict, list]:
    """Metrics and gamma fit for recovered curves; failures are collected, not raised."""
    out, problems = {"cbf": curves.cbf}, []
    tail_tol = cfg.tail_tol if tail_tol is None else tail_tol
    try:
        m = perfusion.perfusion_metrics(curves.k, curves.cbf, curves.h, tail_tol=tail_tol)
        out.update(m.as_dict())
    except NumericalError as exc:
        problems.append(f"metrics: {exc}")
        out.update(mtt=None, tth=None)
    try:
        fit = perfusion.fit_gamma_variate(curves.h, cfg.fit_threshold)
        out.update(
            fit_shape_k=fit.shape_k,
            fit_scale_q=fit.scale_q,
            mtt_fit=fit.mean,
            tth_fit=fit.variance,
        )
    except NumericalError as exc:
        problems.append(f"gamma fit: {exc}")
        out.update(fit_shape_k=None, fit_scale_q=None, mtt_fit=None, tth_fit=None)
    return out, problems


def cmd_deconvolve(record: CurveRecord, cfg: PipelineConfig) -> tuple[CurveRecord, dict]:
    """Append ``k_recovered``, ``r_recovered``, ``h_recovered`` and build a report.

    The report's ``status`` is ``"ok"`` only when the quality diagnostic
    passes and every metric could be computed.
    """
    for name in ("c_a", "c_t"):
        if name not in record:
            raise CsvFormatError(f"input is missing column {name!r}; have {record.names}")
    c_a, c_t = record.series("c_a"), record.series("c_t")
    curves = _recover(c_a, c_t, cfg)
    metrics, problems = _metrics_report(curves, cfg)
    numerical_failure = bool(problems)
    if not curves.quality_ok:
        problems.append(
            "reconstruction quality: high-frequency energy fraction "
            f"{curves.diagnostics['high_frequency_fraction']:.3g} exceeds "
            f"{cfg.quality_threshold:g}"
        )
    report = {
        "status": "ok" if not problems else "failed",
        "problems": problems,
        "numerical_failure": numerical_failure,
        "quality_ok": curves.quality_ok,
        "metrics": metrics,
        "diagnostics": {**curves.diagnostics, "extension": cfg.extension},
        "config": cfg.as_dict(),
    }
    if "k_true" in record:
        report["diagnostics"]["k_error_vs_k_true"] = relative_l2(curves.k.values, record["k_true"])
    if "h_true" in record:
        report["diagnostics"]["h_error_vs_h_true"] = relative_l2(curves.h.values, record["h_true"])
    out = record.with_columns(
        k_recovered=curves.k.values,
        r_recovered=curves.r.values,
        h_recovered=curves.h.values,
    )
    return out, report


def cmd_metrics(record: CurveRecord, cfg: PipelineConfig, column: str = "k_recovered") -> dict:
    """Perfusion metrics of one residue column (plus raw moments of ``h_recovered`` if present)."""
    k = record.series(column)
    h = record.series("h_recovered") if "h_recovered" in record else None
    return perfusion.perfusion_metrics(k, h=h, tail_tol=cfg.tail_tol).as_dict()


# ---------------------------------------------------------------- figures

FIGURE_FILES = {
    "fig21": ("fig21.csv", (21, 22), "C_a, h and the two forward convolutions (fig. 22 zooms c_voi)"),
    "fig23_24": ("fig23_24.csv", (23, 24), "impulse response h and residue r"),
    "fig25": ("fig25.csv", (25,), "h recovered by finite differences of the deconvolved k"),
    "fig26": ("fig26.csv", (26,), "panels a-d: h, r, C_a, C_t"),
    "fig27": ("fig27.csv", (27,), "k recovered from noiseless C_a and C_t"),
    "fig28": ("fig28.csv", (28,), "even extension of k, length 2n-2"),
    "fig29": ("fig29.csv", (29,), "noisy C_a and C_t"),
    "fig30": ("fig30.csv", (30,), "spectral derivative over the whole even extension"),
    "fig31": ("fig31.csv", (31,), "h from the spectral derivative with and without even extension"),
    "fig32": ("fig32.csv", (32,), "k from noisy inputs, unfiltered"),
    "fig33": ("fig33.csv", (33,), "k from noisy inputs, brick-wall and jump-aware low-pass"),
    "fig34": ("fig34.csv", (34,), "h from noisy inputs with high modes removed, and its gamma fit"),
}


def figure_records(cfg: PipelineConfig) -> dict:
    """Plot-ready tables for every figure, keyed like :data:`FIGURE_FILES`."""
    s = perfusion.synthesize(forward_config(cfg))
    t = cfg.grid.times
    clean = perfusion.recover_curves(s.c_a, s.c_t, reg=cfg.reg)
    k_rec = clean.k
    cbf = clean.cbf
    h_fd = k_rec.replace(-finite_diff_derivative(k_rec).values / cbf)
    ext = spectral.even_extension(k_rec)
    d_ext = spectral._derivative_periodic(ext.values, ext.dt, None)
    h_none = perfusion.recover_h(k_rec, cbf, mode=ExtensionMode.NONE)
    h_even = perfusion.recover_h(k_rec, cbf, mode=ExtensionMode.EVEN_MIRROR)

    sigma = cfg.sigma if cfg.sigma > 0 else cfg.figure_sigma
    ca_n, ct_n = noisy_inputs(s.c_a, s.c_t, sigma, cfg.seed)
    filt = FilterSpec(cfg.cutoff)
    k_noisy = perfusion.recover_k(ca_n, ct_n, cfg.reg)
    h_filt, jump = perfusion.recover_h_jump(k_noisy, filt)
    k_lp = spectral.low_pass_filter(k_noisy, filt)
    k_lpj = spectral.low_pass_filter_jump(k_noisy, filt, jump)
    try:
        fit = perfusion.fit_gamma_variate(h_filt, cfg.fit_threshold)
        h_fit = gamma_pdf(fit, cfg.grid).values
    except NumericalError:
        h_fit = np.zeros_like(t)

    return {
        "fig21": CurveRecord.from_series(c_art=s.c_a, h=s.h, c_ven=s.c_ven, c_voi=s.c_t),
        "fig23_24": CurveRecord.from_series(h=s.h, r=s.r),
        "fig25": CurveRecord.from_series(h_true=s.h, h_recovered=h_fd),
        "fig26": CurveRecord.from_series(h=s.h, r=s.r, c_a=s.c_a, c_t=s.c_t),
        "fig27": CurveRecord.from_series(k_true=s.k, k_recovered=k_rec),
        "fig28": CurveRecord({"t": ext.t, "k": ext.values}),
        "fig29": CurveRecord.from_series(c_a=s.c_a, c_t=s.c_t, c_a_noisy=ca_n, c_t_noisy=ct_n),
        "fig30": CurveRecord({"t": ext.t, "h_extended": -d_ext / cbf}),
        "fig31": CurveRecord.from_series(h_true=s.h, h_even=h_even, h_no_extension=h_none),
        "fig32": CurveRecord.from_series(k_true=s.k, k_noisy=k_noisy),
        "fig33": CurveRecord.from_series(k_true=s.k, k_lowpass=k_lp, k_lowpass_jump=k_lpj),
        "fig34": CurveRecord({"t": t, "h_true": s.h.values, "h_filtered": h_filt.values, "h_gamma_fit": h_fit}),
    }


def cmd_figures(cfg: PipelineConfig, outdir) -> dict:
    """Write one CSV per figure plus ``manifest.json``; returns the manifest."""
    os.makedirs(outdir, exist_ok=True)
    wanted = list(cfg.outputs) or list(FIGURE_FILES)
    unknown = [w for w in wanted if w not in FIGURE_FILES]
    if unknown:
        raise ConfigError(f"unknown figure output(s) {unknown}; choose from {list(FIGURE_FILES)}")
    records = figure_records(cfg)
    manifest = {"figures": []}
    for key in wanted:
        fname, numbers, what = FIGURE_FILES[key]
        rec = records[key]
        save_csv(rec, os.path.join(outdir, fname))
        for number in numbers:
            manifest["figures"].append(
                {"figure": number, "file": fname, "columns": rec.names, "content": what}
            )
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


# ---------------------------------------------------------------- noise study


def _study_case(args) -> list:
    cfg, sigma, seed = args
    s = perfusion.synthesize(forward_config(cfg))
    c_a, c_t = noisy_inputs(s.c_a, s.c_t, sigma, seed)
    rows = []
    for filtered in (False, True):
        run_cfg = cfg.replace(filter=filtered)
        row = {"sigma": sigma, "seed": seed, "filtered": int(filtered)}
        try:
            curves = _recover(c_a, c_t, run_cfg)
            # the study measures errors, so the tail guard is reported instead of enforced
            metrics, problems = _metrics_report(curves, run_cfg, tail_tol=np.inf)
            k = curves.k.values
            row.update(
                k_error=relative_l2(curves.k.values, s.k.values),
                h_error=relative_l2(curves.h.values, s.h.values),
                cbf_error=abs(curves.cbf / cfg.cbf_rho - 1.0),
                tail_ratio=abs(k[-1]) / np.max(np.abs(k)),
                mtt_error=_rel_err(metrics.get("mtt"), cfg.impulse_params.mean),
                tth_error=_rel_err(metrics.get("tth"), cfg.impulse_params.variance),
                fit_shape_k=metrics.get("fit_shape_k"),
                fit_scale_q=metrics.get("fit_scale_q"),
                quality_ok=int(curves.quality_ok),
                status="ok" if not problems else "failed",
            )
        except NumericalError as exc:
            row.update(
                k_error=None, h_error=None, cbf_error=None, tail_ratio=None, mtt_error=None, tth_error=None,
                fit_shape_k=None, fit_scale_q=None, quality_ok=0, status=f"error: {exc}",
            )
        rows.append(row)
    return rows


def _rel_err(value, truth):
    return None if value is None else abs(value / truth - 1.0)


def _median(values):
    vals = [v for v in values if v is not None]
    return float(np.median(vals)) if vals else None


def cmd_noise_study(cfg: PipelineConfig, sigmas=None, n_seeds: int | None = None,
                    workers: int | None = None) -> tuple[list, list]:
    """Run the pipeline with and without filtering at each noise level.

    Returns ``(rows, summary)``: one row per (sigma, seed, filtered) and the
    per-(sigma, filtered) medians.
    """
    sigmas = list(cfg.sigmas if sigmas is None else sigmas)
    if any(s < 0 for s in sigmas):
        raise InvalidInputError("sigmas must be >= 0")
    n_seeds = cfg.n_seeds if n_seeds is None else n_seeds
    workers = cfg.workers if workers is None else workers
    cases = [(cfg, s, cfg.seed + 2 * i) for s in sigmas for i in range(n_seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_study_case, cases))
    else:
        chunks = [_study_case(c) for c in cases]
    rows = [r for chunk in chunks for r in chunk]
    summary = []
    for s in sigmas:
        for filtered in (0, 1):
            sel = [r for r in rows if r["sigma"] == s and r["filtered"] == filtered]
            summary.append(
                {
                    "sigma": s,
                    "filtered": filtered,
                    "runs": len(sel),
                    **{
                        f"median_{key}": _median([r[key] for r in sel])
                        for key in ("k_error", "h_error", "cbf_error", "tail_ratio", "mtt_error",
                                    "tth_error", "fit_shape_k", "fit_scale_q")
                    },
                    "quality_ok_fraction": float(np.mean([r["quality_ok"] for r in sel])),
                }
            )
    return rows, summary


def write_noise_study(rows, summary, outdir) -> tuple[str, str]:
    os.makedirs(outdir, exist_ok=True)
    p_rows = os.path.join(outdir, "noise_study.csv")
    p_sum = os.path.join(outdir, "noise_study_summary.csv")
    save_table(rows, p_rows)
    save_table(summary, p_sum)
    return p_rows, p_sum
