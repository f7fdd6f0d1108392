"""Run configuration: YAML files, shipped presets and command-line overrides.

Precedence, lowest to highest: built-in defaults, ``--preset``, ``--config``
file, individual command-line flags.
"""
import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .biphoton import GridSpec, PumpConfig
from .phasematch import CrystalConfig
from .scan import ScanConfig
from .tilt import WAVES, GratingSpec, TiltConfig, tilt_from_grating

PRESETS = ("fig3a", "fig3c", "fig3e", "fig3g", "fig4")


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


@dataclass(frozen=True)
class SweepConfig:
    xi_min_deg: float = -60.0
    xi_max_deg: float = 45.0
    steps: int = 22
    n_jobs: int = 1

    def __post_init__(self):
        if not self.xi_min_deg < self.xi_max_deg:
            raise ValueError(
                f"sweep.xi_min_deg ({self.xi_min_deg}) must be below sweep.xi_max_deg ({self.xi_max_deg})"
            )
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError(f"sweep.steps must be an integer >= 2, got {self.steps}")
        if max(abs(self.xi_min_deg), abs(self.xi_max_deg)) >= 90:
            raise ValueError("sweep range must satisfy |xi| < 90 deg")


@dataclass(frozen=True)
class TiltSection:
    xi_deg: float = 0.0
    applied_to: tuple = WAVES
    grating: dict = None  # {groove_density, incidence_deg, order}

    def __post_init__(self):
        object.__setattr__(self, "applied_to", tuple(self.applied_to))
        TiltConfig(self.xi_deg, self.applied_to)
        if self.grating is not None:
            GratingSpec(**self.grating)


@dataclass(frozen=True)
class RunConfig:
    crystal: CrystalConfig = field(default_factory=CrystalConfig)
    pump: PumpConfig = field(default_factory=PumpConfig)
    tilt: TiltSection = field(default_factory=TiltSection)
    grid: GridSpec = field(default_factory=GridSpec)
    scan: ScanConfig = field(default_factory=ScanConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    solve_target: str = "uncorrelated"
    out: str = "out"
    rng_seed: int = 0

    def tilt_config(self):
        """Tilt in effect; a grating, when given, sets xi at the pump wavelength."""
        xi = self.tilt.xi_deg
        if self.tilt.grating is not None:
            xi = tilt_from_grating(GratingSpec(**self.tilt.grating), self.pump.lambda0_nm)
        return TiltConfig(xi, self.tilt.applied_to)

    def to_dict(self):
        return json.loads(json.dumps(asdict(self), default=list))

    def config_hash(self):
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


_SECTIONS = {
    "crystal": CrystalConfig, "pump": PumpConfig, "tilt": TiltSection,
    "grid": GridSpec, "scan": ScanConfig, "sweep": SweepConfig,
}
_SCALARS = ("solve_target", "out", "rng_seed")


def _build_section(name, cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected a mapping, got {type(data).__name__}")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")
    data = dict(data)
    for key in ("walkoff_sign", "applied_to", "lambda_s_range", "lambda_i_range"):
        if isinstance(data.get(key), list):
            data[key] = tuple(data[key])
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        raise ConfigError(msg if name in msg else f"{name}: {msg}") from None


def merge(base, override):
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def from_dict(data):
    """Validated RunConfig from a nested mapping; unknown keys are rejected."""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = sorted(set(data) - set(_SECTIONS) - set(_SCALARS))
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")
    kw = {name: _build_section(name, cls, data[name]) for name, cls in _SECTIONS.items() if name in data}
    for name in _SCALARS:
        if name in data:
            kw[name] = data[name]
    seed = kw.get("rng_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"rng_seed must be a non-negative integer, got {seed!r}")
    cfg = RunConfig(**kw)
    if abs(cfg.pump.lambda0_nm - cfg.crystal.lambda_p0_nm) > 1e-9:
        raise ConfigError(
            f"pump.lambda0_nm ({cfg.pump.lambda0_nm}) must equal crystal.lambda_p0_nm ({cfg.crystal.lambda_p0_nm})"
        )
    return cfg


def load_yaml(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    return data or {}


def preset_dict(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("tiltspdc").joinpath("presets", f"{name}.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def load_config(path=None, preset=None, overrides=None):
    data = {}
    if preset:
        data = merge(data, preset_dict(preset))
    if path:
        data = merge(data, load_yaml(path))
    data = merge(data, overrides)
    return from_dict(data)
