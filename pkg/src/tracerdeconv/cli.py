"""``tracerdeconv`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(ill-posed deconvolution, undecayed tail), 4 I/O or CSV format error.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click

from . import pipeline
from .config import PipelineConfig, load_config
from .csvio import load_csv, save_csv
from .errors import ConfigError, CsvFormatError, InvalidInputError, NumericalError

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4


class _Fail(click.ClickException):
    def __init__(self, message, code):
        super().__init__(message)
        self.exit_code = code


def _load(config_path, seed, **overrides) -> PipelineConfig:
    try:
        cfg = load_config(config_path) if config_path else PipelineConfig()
        changes = {k: v for k, v in overrides.items() if v is not None}
        if seed is not None:
            changes["seed"] = seed
        return cfg.replace(**changes) if changes else cfg
    except (ConfigError, InvalidInputError) as exc:
        raise _Fail(str(exc), EXIT_CONFIG) from exc


def _guard(fn):
    """Map library exceptions onto exit codes."""
    try:
        return fn()
    except _Fail:
        raise
    except ConfigError as exc:
        raise _Fail(str(exc), EXIT_CONFIG) from exc
    except NumericalError as exc:
        raise _Fail(f"numerical failure: {exc}", EXIT_NUMERICAL) from exc
    except (CsvFormatError, OSError) as exc:
        raise _Fail(str(exc), EXIT_IO) from exc
    except InvalidInputError as exc:
        raise _Fail(str(exc), EXIT_CONFIG) from exc


def _outdir(out):
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise _Fail(f"cannot create output directory {out}: {exc}", EXIT_IO) from exc
    return out


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


config_opt = click.option("--config", "config_path", type=click.Path(), help="Flat TOML config file.")
out_opt = click.option("--out", default=".", show_default=True, help="Output directory.")
seed_opt = click.option("--seed", type=int, default=None, help="Override the noise seed.")


@click.group()
@click.option("-v", "--verbose", count=True, help="Log more (repeatable).")
def cli(verbose):
    """Synthesize tracer curves, deconvolve them and compute perfusion metrics."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@config_opt
@out_opt
@seed_opt
@click.option("--sigma", type=float, default=None, help="Override the noise level.")
def synth(config_path, out, seed, sigma):
    """Write synth.csv: t, c_a, h_true, r, k_true, c_ven, c_t."""
    cfg = _load(config_path, seed, sigma=sigma)
    path = os.path.join(_outdir(out), "synth.csv")
    _guard(lambda: save_csv(pipeline.cmd_synth(cfg), path))
    click.echo(path)


@cli.command()
@config_opt
@out_opt
@seed_opt
@click.option("--input", "input_path", required=True, type=click.Path(), help="CSV with c_a and c_t.")
def deconvolve(config_path, out, seed, input_path):
    """Append recovered k, r, h columns and write a JSON report.

    Exits with 3 when a metric could not be computed; the outputs are still
    written so the failure can be inspected.
    """
    cfg = _load(config_path, seed)
    outdir = _outdir(out)

    def run():
        record = load_csv(input_path)
        result, report = pipeline.cmd_deconvolve(record, cfg)
        save_csv(result, os.path.join(outdir, "deconvolved.csv"))
        _write_json(report, os.path.join(outdir, "report.json"))
        return report

    report = _guard(run)
    for problem in report["problems"]:
        click.echo(f"warning: {problem}", err=True)
    click.echo(os.path.join(outdir, "report.json"))
    if report["numerical_failure"]:
        sys.exit(EXIT_NUMERICAL)


@cli.command()
@config_opt
@out_opt
@seed_opt
def figures(config_path, out, seed):
    """Write one CSV per figure and manifest.json."""
    cfg = _load(config_path, seed)
    outdir = _outdir(out)
    manifest = _guard(lambda: pipeline.cmd_figures(cfg, outdir))
    files = sorted({f["file"] for f in manifest["figures"]})
    click.echo(f"wrote {len(files)} figure files to {outdir}")


@cli.command("noise-study")
@config_opt
@out_opt
@seed_opt
@click.option("--sigmas", default=None, help="Comma separated noise levels.")
@click.option("--seeds", "n_seeds", type=int, default=None, help="Repetitions per level.")
@click.option("--workers", type=int, default=None, help="Worker processes.")
def noise_study(config_path, out, seed, sigmas, n_seeds, workers):
    """Errors with and without filtering over noise levels and seeds."""
    try:
        levels = None if sigmas is None else [float(s) for s in sigmas.split(",") if s.strip()]
    except ValueError as exc:
        raise _Fail(f"--sigmas: {exc}", EXIT_CONFIG) from exc
    cfg = _load(config_path, seed, n_seeds=n_seeds, workers=workers)
    outdir = _outdir(out)

    def run():
        rows, summary = pipeline.cmd_noise_study(cfg, levels)
        return pipeline.write_noise_study(rows, summary, outdir)

    for path in _guard(run):
        click.echo(path)


@cli.command()
@config_opt
@seed_opt
@click.option("--input", "input_path", required=True, type=click.Path(), help="CSV with a residue column.")
@click.option("--column", default="k_recovered", show_default=True, help="Residue column to integrate.")
def metrics(config_path, seed, input_path, column):
    """Print CBF, MTT, TTH (and raw moments of h_recovered) as JSON."""
    cfg = _load(config_path, seed)
    result = _guard(lambda: pipeline.cmd_metrics(load_csv(input_path), cfg, column))
    click.echo(json.dumps(result, indent=2))


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="tracerdeconv", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        code = exc.exit_code
        # click's own usage errors map onto the config code
        return EXIT_CONFIG if isinstance(exc, click.UsageError) else code
    except click.Abort:
        return 1
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
