"""Experiment configuration: one flat, typed, versioned key/value document per run."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .effective import KernelParams
from .grid import Grid1D
from .potentials import ModelSpec, PulseSpec

SCHEMA_VERSION = 1
ENV_PREFIX = "TDQMC_"
SAMPLERS = ("metropolis", "langevin")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RelaxSchedule:
    """Imaginary-time relaxation settings.

    Walkers take Langevin steps of size ``dtau * mobility(tau)`` where
    ``mobility`` falls linearly from 1 to ``mobility_floor`` over the first
    ``relax_fraction`` of the run. Afterwards ``"langevin"`` keeps the floor
    step, so walkers stay slow compared with the guide-wave relaxation, while
    ``"metropolis"`` resamples each ``|phi_i^k|^2`` by random-walk Metropolis
    with a step tuned to ``target_acceptance``. The latter decorrelates walkers
    faster but lets the guide waves lag behind a jittering effective potential,
    which washes out correlation. Observables are averaged over the final
    ``average_fraction``.
    """

    dtau: float = 0.05
    steps: int = 2000
    warm_steps: int | None = None
    mobility_floor: float = 0.05
    relax_fraction: float = 0.5
    average_fraction: float = 0.2
    tol_e: float = 1e-3
    measure_every: int = 2
    entropy_samples: int = 10
    n_blocks: int = 10
    sampler: str = "langevin"
    target_acceptance: tuple[float, float] = (0.3, 0.6)

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")


@dataclass(frozen=True)
class RealtimeSchedule:
    dt: float = 0.05
    t_end: float = 10.0
    stride: int = 10
    release_confinement: bool = False
    absorber_width: float = 0.0
    spectrum: bool = True
    grid_length: float | None = None
    grid_points: int | None = None

    def grid_for(self, ground: Grid1D) -> Grid1D:
        """Real-time grid: the ground-state grid unless a larger box is requested."""
        if self.grid_length is None and self.grid_points is None:
            return ground
        length = self.grid_length or ground.length
        return Grid1D.centered(length, self.grid_points or int(round(length / ground.dx)))


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n_walkers: int = 1000
    grid_length: float = 50.0
    grid_points: int = 256
    kernel: KernelParams = KernelParams()
    alpha_grid: tuple[float, ...] | None = None
    refine_alpha: bool = True
    relax: RelaxSchedule = RelaxSchedule()
    realtime: RealtimeSchedule | None = None
    pulse: PulseSpec | None = None
    seed: int = 0
    name: str = "run"
    output_dir: str = "runs"
    oracle: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_walkers < 1:
            raise ConfigError("walkers: must be >= 1")
        if self.alpha_grid is not None and len(self.alpha_grid) < 1:
            raise ConfigError("alpha_grid: must not be empty")

    @property
    def grid(self) -> Grid1D:
        return Grid1D.centered(self.grid_length, self.grid_points)

    def with_changes(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_mapping(self) -> dict[str, Any]:
        return to_mapping(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_mapping(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# flat key -> (section, attribute, type)
_KEYS: dict[str, tuple[str, str, type]] = {
    "name": ("", "name", str),
    "seed": ("", "seed", int),
    "walkers": ("", "n_walkers", int),
    "grid_length": ("", "grid_length", float),
    "grid_points": ("", "grid_points", int),
    "output_dir": ("", "output_dir", str),
    "oracle": ("", "oracle", bool),
    "refine_alpha": ("", "refine_alpha", bool),
    "alpha_grid": ("", "alpha_grid", list),
    "model": ("model", "kind", str),
    "particles": ("model", "n_particles", int),
    "kappa": ("model", "kappa", float),
    "nuclear_on": ("model", "nuclear_on", bool),
    "charge": ("model", "charge", float),
    "alpha": ("kernel", "alpha", float),
    "mode": ("kernel", "mode", str),
    "m_pot": ("kernel", "m_pot", int),
    "spread": ("kernel", "spread", str),
    "dtau": ("relax", "dtau", float),
    "relax_steps": ("relax", "steps", int),
    "warm_steps": ("relax", "warm_steps", int),
    "mobility_floor": ("relax", "mobility_floor", float),
    "relax_fraction": ("relax", "relax_fraction", float),
    "average_fraction": ("relax", "average_fraction", float),
    "tol_e": ("relax", "tol_e", float),
    "measure_every": ("relax", "measure_every", int),
    "entropy_samples": ("relax", "entropy_samples", int),
    "sampler": ("relax", "sampler", str),
    "dt": ("realtime", "dt", float),
    "t_end": ("realtime", "t_end", float),
    "stride": ("realtime", "stride", int),
    "release_confinement": ("realtime", "release_confinement", bool),
    "absorber_width": ("realtime", "absorber_width", float),
    "spectrum": ("realtime", "spectrum", bool),
    "rt_grid_length": ("realtime", "grid_length", float),
    "rt_grid_points": ("realtime", "grid_points", int),
    "omega0": ("pulse", "omega0", float),
    "e0": ("pulse", "e0", float),
    "chirp": ("pulse", "chirp", float),
    "n_cycles": ("pulse", "n_cycles", float),
    "envelope": ("pulse", "envelope", str),
}
_NULLABLE = {"charge", "m_pot", "warm_steps", "alpha_grid", "rt_grid_length", "rt_grid_points"}


def _coerce(key: str, value: Any) -> Any:
    typ = _KEYS[key][2]
    if value is None:
        if key in _NULLABLE:
            return None
        raise ConfigError(f"{key}: value required")
    try:
        if typ is bool:
            if isinstance(value, str):
                low = value.strip().lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if typ is list:
            if isinstance(value, str):
                value = yaml.safe_load(value)
            return tuple(float(v) for v in value)
        if typ is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        if typ is int and isinstance(value, str):
            return int(float(value))
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot interpret {value!r} as {typ.__name__}") from exc


def from_mapping(data: dict[str, Any]) -> ExperimentConfig:
    """Build and validate a config from a flat mapping."""
    data = dict(data)
    version = data.pop("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema: unsupported version {version}")
    unknown = sorted(set(data) - set(_KEYS) - {"realtime", "pulse"})
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    sections: dict[str, dict[str, Any]] = {"": {}, "model": {}, "kernel": {}, "relax": {}, "realtime": {}, "pulse": {}}
    for key, value in data.items():
        if key in ("realtime", "pulse"):
            continue
        section, attr, _ = _KEYS[key]
        sections[section][attr] = _coerce(key, value)
    if "kind" not in sections["model"]:
        raise ConfigError("model: value required")
    if "n_particles" not in sections["model"]:
        raise ConfigError("particles: value required")
    try:
        model = ModelSpec(**sections["model"])
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    try:
        kernel = KernelParams(**sections["kernel"])
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from exc
    try:
        relax = RelaxSchedule(**sections["relax"])
    except ValueError as exc:
        raise ConfigError(f"sampler: {exc}") from exc
    if relax.dtau <= 0 or relax.steps < 10:
        raise ConfigError("dtau: must be positive (and relax_steps >= 10)")
    realtime = None
    if data.get("realtime", bool(sections["realtime"])):
        realtime = RealtimeSchedule(**sections["realtime"])
        if realtime.dt <= 0 or realtime.t_end <= 0:
            raise ConfigError("dt: dt and t_end must be positive")
    pulse = None
    if data.get("pulse", bool(sections["pulse"])):
        try:
            pulse = PulseSpec(**sections["pulse"])
        except ValueError as exc:
            raise ConfigError(f"pulse: {exc}") from exc
    top = sections[""]
    try:
        Grid1D.centered(top.get("grid_length", 50.0), top.get("grid_points", 256))
    except ValueError as exc:
        raise ConfigError(f"grid_points: {exc}") from exc
    return ExperimentConfig(model=model, kernel=kernel, relax=relax, realtime=realtime, pulse=pulse, **top)


def to_mapping(cfg: ExperimentConfig) -> dict[str, Any]:
    out: dict[str, Any] = {"schema": SCHEMA_VERSION}
    objs = {"": cfg, "model": cfg.model, "kernel": cfg.kernel, "relax": cfg.relax,
            "realtime": cfg.realtime, "pulse": cfg.pulse}
    for key, (section, attr, _) in _KEYS.items():
        obj = objs[section]
        if obj is None:
            continue
        value = getattr(obj, attr)
        out[key] = list(value) if isinstance(value, tuple) else value
    out["realtime"] = cfg.realtime is not None
    out["pulse"] = cfg.pulse is not None
    return out


def env_overrides(environ=None) -> dict[str, Any]:
    """Flat keys taken from ``TDQMC_<KEY>`` environment variables."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower()
            if key in _KEYS or key in ("realtime", "pulse"):
                out[key] = yaml.safe_load(value)
    return out


def load_config(path: str | Path, overrides: dict[str, Any] | None = None, environ=None) -> ExperimentConfig:
    """Read a YAML config, then apply environment and explicit overrides (in that order)."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    data.update(env_overrides(environ))
    data.update(overrides or {})
    return from_mapping(data)


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(to_mapping(cfg), fh, sort_keys=False)


def config_keys() -> list[str]:
    return list(_KEYS)


__all__ = [
    "ConfigError", "ExperimentConfig", "RelaxSchedule", "RealtimeSchedule",
    "from_mapping", "to_mapping", "load_config", "dump_config", "env_overrides",
]
