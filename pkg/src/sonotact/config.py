"""Run configuration: nested dataclasses addressed by flat dotted keys.

A config file is a YAML mapping of dotted keys to scalars or lists, e.g.::

    seed: 0
    bank.per_label: 250
    scene.near_contact_frac: 0.2
    train.epochs: 20

Precedence, lowest first: defaults, config file, ``SONOTACT_SEED``, command-line flags.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .audiobank import SynthProfile
from .errors import ConfigError
from .model import Arch, TrainConfig
from .scene import SceneConfig

SEED_ENV = "SONOTACT_SEED"
CONFIG_NAME = "run_config.json"


@dataclass(frozen=True)
class BankConfig:
    synthetic: bool = True
    per_label: int = 250
    source: str = ""  # directory of recorded clips with bank.jsonl, used when synthetic is false
    profile: SynthProfile = field(default_factory=SynthProfile)


@dataclass(frozen=True)
class DataConfig:
    n_episodes: int = 100
    test_frac: float = 0.2


@dataclass(frozen=True)
class EvalConfig:
    threshold: float = 0.5
    chunk: int = 64


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = "runs/default"
    jobs: int = 1
    bank: BankConfig = field(default_factory=BankConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    data: DataConfig = field(default_factory=DataConfig)
    arch: Arch = field(default_factory=Arch)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self, *sections: str) -> str:
        """Hash of the named sections (all but ``out``/``jobs`` when none given)."""
        d = self.to_dict()
        keys = sections or [k for k in d if k not in ("out", "jobs")]
        blob = json.dumps({k: d[k] for k in keys}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> "RunConfig":
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.bank.per_label < 1:
            raise ConfigError("bank.per_label must be >= 1")
        if not self.bank.synthetic and not self.bank.source:
            raise ConfigError("bank.source is required when bank.synthetic is false")
        if self.data.n_episodes < 2:
            raise ConfigError("data.n_episodes must be >= 2")
        if not 0 < self.data.test_frac < 1:
            raise ConfigError("data.test_frac must lie in (0, 1)")
        if not 0 < self.eval.threshold < 1:
            raise ConfigError("eval.threshold must lie in (0, 1)")
        if self.arch.crop_side != self.arch.spec_side:
            raise ConfigError("arch.crop_side must equal arch.spec_side")
        cam = self.scene.make_camera()
        if cam.shape != (self.arch.image_h, self.arch.image_w):
            raise ConfigError(f"arch image size {(self.arch.image_h, self.arch.image_w)} "
                              f"does not match camera {cam.shape}")
        return self


def _coerce(value, current, key, nullable=False):
    if nullable and (value is None or str(value).lower() in ("none", "null", "")):
        return None
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(current, tuple):
        if isinstance(value, str):
            value = yaml.safe_load(value)
        if not isinstance(value, (list, tuple)) or len(value) != len(current):
            raise ConfigError(f"{key}: expected a list of {len(current)} values")
        return tuple(_coerce(v, c, key) for v, c in zip(value, current))
    if isinstance(current, dict):
        if isinstance(value, str):
            value = yaml.safe_load(value)
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a mapping")
        return dict(value)
    try:
        return int(value) if current is None else type(current)(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot convert {value!r} to {type(current).__name__}") from None


def apply_overrides(cfg, overrides: dict, prefix: str = ""):
    """Return ``cfg`` with dotted-key ``overrides`` applied; unknown keys are errors."""
    nested: dict = {}
    direct: dict = {}
    fields = {f.name: f for f in dataclasses.fields(cfg)}
    names = set(fields)
    for key, value in overrides.items():
        head, _, rest = key.partition(".")
        if head not in names:
            raise ConfigError(f"unknown config key {prefix + key!r}")
        if rest:
            nested.setdefault(head, {})[rest] = value
        else:
            direct[head] = value
    changes = {}
    for name, value in direct.items():
        current = getattr(cfg, name)
        if dataclasses.is_dataclass(current):
            raise ConfigError(f"{prefix + name!r} is a section; set its fields with dotted keys")
        changes[name] = _coerce(value, current, prefix + name, fields[name].default is None)
    for name, sub in nested.items():
        current = getattr(cfg, name)
        if not dataclasses.is_dataclass(current):
            raise ConfigError(f"{prefix + name!r} has no sub-keys")
        changes[name] = apply_overrides(current, sub, prefix + name + ".")
    try:
        return dataclasses.replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_file(path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of dotted keys")
    return {str(k): v for k, v in data.items()}


def resolve(config_path=None, overrides: dict | None = None, env=None) -> RunConfig:
    env = os.environ if env is None else env
    cfg = RunConfig()
    if config_path:
        cfg = apply_overrides(cfg, load_file(config_path))
    if env.get(SEED_ENV):
        cfg = apply_overrides(cfg, {"seed": env[SEED_ENV]})
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg.validate()


def flat_keys(cfg, prefix: str = "") -> dict:
    """Inverse of ``apply_overrides``: every leaf as a dotted key."""
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            out.update(flat_keys(value, prefix + f.name + "."))
        else:
            out[prefix + f.name] = list(value) if isinstance(value, tuple) else value
    return out


def write_provenance(directory, cfg: RunConfig, inputs: dict) -> None:
    """Resolved config plus input hashes, enough to reproduce the directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CONFIG_NAME).write_text(
        json.dumps(flat_keys(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (directory / "inputs.json").write_text(
        json.dumps(inputs, indent=2, sort_keys=True) + "\n", encoding="utf-8")
