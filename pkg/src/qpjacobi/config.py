"""Experiment configuration: JSON schema, defaults and hashing."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .coeffs import GOLDEN, ModelSpec, almost_mathieu, extended_harper, free_laplacian

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    # preset: "amo" | "harper" | "free" | "fourier"
    preset: str = "amo"
    lam: float = 3.0
    lam1: float = 0.5
    lam2: float = 1.0
    lam3: float = 0.5
    a: dict = field(default_factory=dict)  # Fourier tables for "fourier": {"k": [re, im]}
    b: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FrequencyConfig:
    omega: float | str = "golden"
    c: float = 0.2
    alpha: float = 2.0
    certify_N: int = 100_000

    @property
    def value(self) -> float:
        return GOLDEN if self.omega == "golden" else float(self.omega)


@dataclass(frozen=True)
class ScalesConfig:
    N: tuple = (256, 512)
    l: int = 24
    A: float = 2.0
    lyapunov_N: int = 1000
    holder_N: int = 1024


@dataclass(frozen=True)
class GridsConfig:
    M: int = 64
    energy_interval: tuple = (-1.0, 1.0)
    energy_count: int = 3
    # Wegner windows: eta = factor / N
    eta_factors: tuple = (1.0,)
    holder_eta: tuple = (1e-3, 1e-2)
    holder_eta_count: int = 6
    holder_energy_count: int = 3
    eps_holder: float = 0.1
    jensen_eps: float = 0.1
    rho_power: float = 0.5
    trials: int = 10


@dataclass(frozen=True)
class TolerancesConfig:
    identity: float = 1e-9
    gamma: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    model: ModelConfig = field(default_factory=ModelConfig)
    frequency: FrequencyConfig = field(default_factory=FrequencyConfig)
    scales: ScalesConfig = field(default_factory=ScalesConfig)
    grids: GridsConfig = field(default_factory=GridsConfig)
    tolerances: TolerancesConfig = field(default_factory=TolerancesConfig)
    seed: int = 0
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: unsupported version {version!r}")
        cfg = _build(cls, data, "")
        cfg.build_model()  # validates presets and Fourier tables early
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def build_model(self) -> ModelSpec:
        m = self.model
        try:
            if m.preset == "amo":
                return almost_mathieu(m.lam)
            if m.preset == "harper":
                return extended_harper(m.lam, m.lam1, m.lam2, m.lam3, self.frequency.value)
            if m.preset == "free":
                return free_laplacian()
            if m.preset == "fourier":
                return ModelSpec.from_dict({"a": m.a, "b": m.b, "name": "fourier"})
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"model: {exc}") from None
        raise ConfigError(f"model.preset: unknown preset {m.preset!r}")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        kind = type(default[0]) if default else float
        return tuple(_coerce(v, kind(0), f"{path}[{i}]") for i, v in enumerate(value))
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return value
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{prefix}{unknown[0]}: unknown field")
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            continue
        path = f"{prefix}{name}"
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), data[name], path + ".")
        elif name == "omega":
            v = data[name]
            if v != "golden" and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise ConfigError(f"{path}: expected a number or \"golden\"")
            kwargs[name] = v if v == "golden" else float(v)
        else:
            kwargs[name] = _coerce(data[name], default, path)
    return cls(**kwargs)
