"""Flat TOML configuration for the command-line pipeline.

Every key is optional; unknown keys are rejected. Defaults::

    t0 = 0.0              # grid origin (s)
    dt = 0.05             # sample spacing (s)
    n = 801               # sample count -> t in [0, 40] s
    aif_shape = 4.0       # gamma shape of the arterial input C_a
    aif_scale = 0.25      # gamma scale of C_a (s)
    impulse_shape = 10.0  # gamma shape K of h(t)
    impulse_scale = 0.5   # gamma scale Q of h(t) (s)
    cbf_rho = 1.0         # flow scale A = CBF * rho
    sigma = 0.0           # noise std relative to each curve's peak
    seed = 0              # noise seed (C_a uses seed, C_t uses seed + 1)
    reg = 0.0             # Tikhonov constant, 0 = plain division
    filter = false        # apply the brick-wall low-pass
    cutoff = 0.05         # retained fraction of modes when filtering
    extension = "even"    # "even" or "none" for the even-route derivative
    route = "auto"        # "auto", "even" or "jump" impulse-response recovery
    tail_tol = 1e-4       # |k_end| / max|k| allowed before integrating
    fit_threshold = 0.1   # gamma fit uses samples above this fraction of peak
    quality_threshold = 1e-3
    figure_sigma = 0.01   # noise used by the noisy figures when sigma = 0
    sigmas = [0.0, 0.001, 0.003, 0.01]   # noise-study levels
    n_seeds = 10          # noise-study repetitions per level
    workers = 1           # noise-study worker processes
    outputs = []          # figure files to write; empty = all
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field

from .errors import ConfigError, TracerDeconvError
from .signals import GammaParams, NoiseSpec, TimeGrid
from .spectral import ExtensionMode, FilterSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class PipelineConfig:
    t0: float = 0.0
    dt: float = 0.05
    n: int = 801
    aif_shape: float = 4.0
    aif_scale: float = 0.25
    impulse_shape: float = 10.0
    impulse_scale: float = 0.5
    cbf_rho: float = 1.0
    sigma: float = 0.0
    seed: int = 0
    reg: float = 0.0
    filter: bool = False
    cutoff: float = 0.05
    extension: str = "even"
    route: str = "auto"
    tail_tol: float = 1e-4
    fit_threshold: float = 0.1
    quality_threshold: float = 1e-3
    figure_sigma: float = 0.01
    sigmas: tuple = (0.0, 0.001, 0.003, 0.01)
    n_seeds: int = 10
    workers: int = 1
    outputs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        try:
            self.grid
            self.aif_params
            self.impulse_params
            self.noise
            FilterSpec(self.cutoff)
            ExtensionMode.parse(self.extension)
        except TracerDeconvError as exc:
            raise ConfigError(str(exc)) from exc
        if self.cbf_rho <= 0:
            raise ConfigError(f"cbf_rho must be > 0, got {self.cbf_rho}")
        if self.reg < 0:
            raise ConfigError(f"reg must be >= 0, got {self.reg}")
        if self.route not in ("auto", "even", "jump"):
            raise ConfigError(f"route must be 'auto', 'even' or 'jump', got {self.route!r}")
        if not self.tail_tol > 0:
            raise ConfigError(f"tail_tol must be > 0, got {self.tail_tol}")
        if not 0 < self.fit_threshold < 1:
            raise ConfigError(f"fit_threshold must lie in (0, 1), got {self.fit_threshold}")
        if self.figure_sigma < 0 or any(s < 0 for s in self.sigmas):
            raise ConfigError("noise levels must be >= 0")
        if self.n_seeds < 1 or self.workers < 1:
            raise ConfigError("n_seeds and workers must be >= 1")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t0, self.dt, self.n)

    @property
    def aif_params(self) -> GammaParams:
        return GammaParams(self.aif_shape, self.aif_scale)

    @property
    def impulse_params(self) -> GammaParams:
        return GammaParams(self.impulse_shape, self.impulse_scale)

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.sigma, self.seed)

    @property
    def filter_spec(self) -> FilterSpec | None:
        return FilterSpec(self.cutoff) if self.filter else None

    @property
    def extension_mode(self) -> ExtensionMode:
        return ExtensionMode.parse(self.extension)

    def replace(self, **changes) -> "PipelineConfig":
        return from_mapping({**self.as_dict(), **changes})

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sigmas"] = list(self.sigmas)
        d["outputs"] = list(self.outputs)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, value):
    default = _FIELDS[name].default
    if default is dataclasses.MISSING:
        default = _FIELDS[name].default_factory()
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list, got {value!r}")
        if name == "sigmas":
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError("sigmas must be a list of numbers")
            return tuple(float(v) for v in value)
        if not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{name} must be a list of strings")
        return tuple(value)
    raise ConfigError(f"unsupported key {name}")  # pragma: no cover


def from_mapping(data: dict) -> PipelineConfig:
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return PipelineConfig(**{k: _coerce(k, v) for k, v in data.items()})


def load_config(path) -> PipelineConfig:
    """Parse a flat TOML file. Tables (sections) are not allowed."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; found table(s): {', '.join(nested)}")
    return from_mapping(data)
