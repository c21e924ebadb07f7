"""Run configuration: a strict JSON schema with command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .crosssec import CrossSection
from .errors import ConfigError

SCHEMA_VERSION = 1


@dataclass
class CrossSectionConfig:
    shape: str = "rectangle"
    width: float = 1.0
    height: float = 1.0
    radius: float = 0.5
    r_inner: float = 0.25
    r_outer: float = 0.5
    offset: list = field(default_factory=lambda: [0.0, 0.0])
    h: float = 1.0 / 16

    def build(self) -> CrossSection:
        return CrossSection(self.shape, self.width, self.height, self.radius, self.r_inner,
                            self.r_outer, tuple(self.offset))


@dataclass
class TubeConfig:
    L: float = 30.0
    h1: float = 1.0 / 8
    interface: bool = False


@dataclass
class ProfileConfig:
    beta: float = 1.0
    alpha: float = 0.0
    kind: str = "indicator"
    support: float = 1.0
    samples: list = None


@dataclass
class SolverConfig:
    tol: float = 1e-9
    seed: int = 20140611
    threads: int = 1
    dense_oracle: bool = False
    method: str = "shift-invert"


@dataclass
class SweepConfig:
    alpha_min: float = -4.0
    alpha_max: float = 2.0
    alpha_step: float = 0.25
    extra_alphas: list = field(default_factory=lambda: [5.0])
    alphas: list = None

    def values(self) -> list:
        if self.alphas is not None:
            return [float(a) for a in self.alphas]
        n = int(round((self.alpha_max - self.alpha_min) / self.alpha_step))
        grid = [self.alpha_min + i * self.alpha_step for i in range(n + 1)]
        return grid + [float(a) for a in self.extra_alphas if a not in grid]


@dataclass
class HardyConfig:
    L_list: list = field(default_factory=lambda: [10.0, 20.0, 40.0])
    shift: float = 1e-6


@dataclass
class CertifyConfig:
    h: float = 1.0 / 32
    interval: list = None
    x1_0: float = None
    c0: float = 0.25
    epsilon0: float = None
    nu_samples: int = 41


@dataclass
class EffectiveConfig:
    L1: float = 40.0
    spacing: float = 1.0 / 32
    alphas: list = None
    C_omega: float = None


@dataclass
class BracketingConfig:
    box: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0])
    alphas: list = field(default_factory=lambda: [0.0, 1.0, 10.0, 100.0, 1e4, 1e6])
    sign: int = -1
    eta: float = 0.1
    spacing: float = 1e-3


@dataclass
class NeumannConfig:
    n: float = 8.0
    delta: float = None
    offset: list = field(default_factory=lambda: [1.0, 0.0])


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    cross_section: CrossSectionConfig = field(default_factory=CrossSectionConfig)
    tube: TubeConfig = field(default_factory=TubeConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    hardy: HardyConfig = field(default_factory=HardyConfig)
    certify: CertifyConfig = field(default_factory=CertifyConfig)
    effective: EffectiveConfig = field(default_factory=EffectiveConfig)
    bracketing: BracketingConfig = field(default_factory=BracketingConfig)
    neumann: NeumannConfig = field(default_factory=NeumannConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _from_dict(cls, data, path="config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown key(s) in {path}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        f = fields[name]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _from_dict(type(default), value, f"{path}.{name}")
        else:
            kwargs[name] = _coerce(value, default, f"{path}.{name}")
    return cls(**kwargs)


def _coerce(value, default, path):
    if value is None or default is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be a list")
        return value
    return value


def load_config(path=None, data: dict = None) -> RunConfig:
    """Read a JSON config (or a dict); unknown keys raise :class:`ConfigError`."""
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = _from_dict(RunConfig, data or {})
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg.schema_version}")
    validate(cfg)
    return cfg


def set_path(cfg: RunConfig, dotted: str, value) -> None:
    """Override one field, e.g. ``set_path(cfg, "profile.beta", 0.5)``."""
    *parents, leaf = dotted.split(".")
    obj = cfg
    for p in parents:
        obj = getattr(obj, p)
    if not hasattr(obj, leaf):
        raise ConfigError(f"no config field {dotted}")
    setattr(obj, leaf, value)


def validate(cfg: RunConfig) -> None:
    try:
        cfg.cross_section.build()
    except ValueError as exc:
        raise ConfigError(f"cross_section: {exc}") from exc
    if len(cfg.cross_section.offset) != 2:
        raise ConfigError("cross_section.offset needs two entries")
    if not cfg.cross_section.h > 0:
        raise ConfigError("cross_section.h must be positive")
    if cfg.profile.kind not in ("indicator", "tent", "tabulated", "zero"):
        raise ConfigError(f"profile.kind {cfg.profile.kind!r} is not supported")
    if cfg.profile.kind == "tabulated" and not cfg.profile.samples:
        raise ConfigError("profile.samples is required for tabulated profiles")
    if not (cfg.tube.L > 0 and cfg.tube.h1 > 0):
        raise ConfigError("tube.L and tube.h1 must be positive")
    ratio = 2 * cfg.tube.L / cfg.tube.h1
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigError("2 L / h1 must be an integer")
    if cfg.solver.threads < 1:
        raise ConfigError("solver.threads must be at least 1")
    if not cfg.solver.tol > 0:
        raise ConfigError("solver.tol must be positive")
    if cfg.solver.method not in ("auto", "lobpcg", "shift-invert", "dense"):
        raise ConfigError(f"solver.method {cfg.solver.method!r} is not supported")
    if cfg.sweep.alphas is None and not cfg.sweep.alpha_step > 0:
        raise ConfigError("sweep.alpha_step must be positive")
    if cfg.bracketing.sign not in (-1, 1):
        raise ConfigError("bracketing.sign must be -1 or 1")
    if len(cfg.bracketing.box) != 4:
        raise ConfigError("bracketing.box needs four points a < a' < b' < b")


def version_string() -> str:
    """``<version>+g<commit>`` when run from a git checkout, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__
