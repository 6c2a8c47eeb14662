#!/usr/bin/env python3
"""Load and validate the experiment configuration (config.json)."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from asymptotics import PROFILES
from errors import ConfigError
from warp import MOLLIFIERS


@dataclass(frozen=True)
class ModelConfig:
    spacing: float = 1.0
    modes: int = 3
    per_mode_cap: int = 2
    energy_cap: float | None = 4.0
    max_dim: int = 4096
    weyl: bool = False

    @property
    def energy_bound(self) -> float:
        return math.inf if self.energy_cap is None else self.energy_cap


@dataclass(frozen=True)
class KernelConfig:
    profile: str = "gaussian"
    kernel_exponent: float = 0.5
    schedule_T: tuple = (8.0, 16.0, 32.0, 64.0)
    quadrature_budget: int = 8192


@dataclass(frozen=True)
class DeformationConfig:
    kappas: tuple = (0.25, 0.5, 1.0)
    mollifier: str = "product-gaussian"
    reg_epsilon: tuple = (0.4, 0.2, 0.1, 0.05)
    quadrature_budget: int = 4096
    caps: tuple = (1, 2, 3)
    oracle_model: ModelConfig = ModelConfig(spacing=0.5, modes=2, per_mode_cap=2, energy_cap=1.0)


@dataclass(frozen=True)
class ToleranceConfig:
    structural: float = 1e-12
    ergodic_residual: float = 1e-3
    ergodic_ratio: float = 0.2
    factorization: float = 1e-3
    clustering: float = 1e-6
    s_identity: float = 1e-6
    gram: float = 1e-8
    rank: float = 1e-8
    approximant: float = 1e-8
    warp_oracle: float = 1e-4
    mollifier: float = 1e-5
    phase: float = 1e-4
    interaction_phase: float = 0.5
    path: float = 1e-8
    modular: float = 1e-10
    intertwiner_unitarity: float = 1e-12
    intertwiner_covariance: float = 1e-10
    cross_check: float = 1e-10


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = ModelConfig()
    kernel: KernelConfig = KernelConfig()
    deformation: DeformationConfig = DeformationConfig()
    tolerance: ToleranceConfig = ToleranceConfig()
    seed: int = 2024
    n_jobs: int = 1
    cache_dir: str = "cache"


def _build(defaults, data, path):
    """Overlay a JSON object on a config dataclass instance, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(path or "config", f"expected an object, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(defaults)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")

    values = {}
    for name, value in data.items():
        default = getattr(defaults, name)
        where = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(default):
            values[name] = _build(default, value, where)
        elif isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError(where, "expected a list")
            values[name] = tuple(value)
        else:
            values[name] = value
    return dataclasses.replace(defaults, **values)


def _check(condition, field_path, message):
    if not condition:
        raise ConfigError(field_path, message)


def _validate_model(model: ModelConfig, path: str):
    _check(isinstance(model.spacing, (int, float)) and model.spacing > 0, f"{path}.spacing", "must be positive")
    _check(isinstance(model.modes, int) and model.modes >= 1, f"{path}.modes", "must be a positive integer")
    _check(isinstance(model.per_mode_cap, int) and model.per_mode_cap >= 1, f"{path}.per_mode_cap",
           "must be a positive integer")
    _check(model.energy_cap is None or model.energy_cap > 0, f"{path}.energy_cap", "must be positive or null")
    _check(isinstance(model.max_dim, int) and model.max_dim >= 4, f"{path}.max_dim", "must be an integer >= 4")


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """
    Check every invariant of the configuration.

    Raises:
        ConfigError: first violated field, as a dotted path
    """
    _validate_model(config.model, "model")

    kernel = config.kernel
    _check(kernel.profile in PROFILES, "kernel.profile", f"must be one of {sorted(PROFILES)}")
    _check(isinstance(kernel.kernel_exponent, (int, float)) and 0 < kernel.kernel_exponent < 1,
           "kernel.kernel_exponent", "must lie in (0, 1)")
    _check(len(kernel.schedule_T) > 0, "kernel.schedule_T", "must be nonempty")
    _check(all(t != 0 for t in kernel.schedule_T), "kernel.schedule_T", "entries must be nonzero")
    magnitudes = [abs(t) for t in kernel.schedule_T]
    _check(all(b > a for a, b in zip(magnitudes, magnitudes[1:])), "kernel.schedule_T",
           "must be strictly increasing in |T|")
    _check(kernel.quadrature_budget > 0, "kernel.quadrature_budget", "must be positive")

    deformation = config.deformation
    _check(len(deformation.kappas) > 0, "deformation.kappas", "must be nonempty")
    _check(all(k >= 0 for k in deformation.kappas), "deformation.kappas", "entries must be >= 0")
    _check(deformation.mollifier in MOLLIFIERS, "deformation.mollifier", f"must be one of {sorted(MOLLIFIERS)}")
    _check(len(deformation.reg_epsilon) > 0, "deformation.reg_epsilon", "must be nonempty")
    _check(all(e > 0 for e in deformation.reg_epsilon), "deformation.reg_epsilon", "entries must be positive")
    _check(all(b < a for a, b in zip(deformation.reg_epsilon, deformation.reg_epsilon[1:])),
           "deformation.reg_epsilon", "must be strictly decreasing")
    _check(deformation.quadrature_budget > 0, "deformation.quadrature_budget", "must be positive")
    _check(len(deformation.caps) > 0 and all(isinstance(c, int) and c >= 1 for c in deformation.caps),
           "deformation.caps", "must be nonempty positive integers")
    _validate_model(deformation.oracle_model, "deformation.oracle_model")

    for f in dataclasses.fields(ToleranceConfig):
        value = getattr(config.tolerance, f.name)
        _check(isinstance(value, (int, float)) and value > 0, f"tolerance.{f.name}", "must be positive")

    _check(isinstance(config.seed, int), "seed", "must be an integer")
    _check(isinstance(config.n_jobs, int) and config.n_jobs != 0, "n_jobs", "must be a nonzero integer")
    _check(isinstance(config.cache_dir, str) and config.cache_dir, "cache_dir", "must be a nonempty path")
    return config


def apply_overrides(config: ExperimentConfig, kappa=None, schedule_T=None, seed=None) -> ExperimentConfig:
    """Command-line overrides; the result still needs validation."""
    if kappa is not None:
        config = dataclasses.replace(
            config, deformation=dataclasses.replace(config.deformation, kappas=(float(kappa),))
        )
    if schedule_T is not None:
        config = dataclasses.replace(
            config, kernel=dataclasses.replace(config.kernel, schedule_T=tuple(float(t) for t in schedule_T))
        )
    if seed is not None:
        config = dataclasses.replace(config, seed=int(seed))
    return config


def load_config(filepath="config.json", **overrides) -> ExperimentConfig:
    """Load config from JSON file, apply overrides and validate."""
    try:
        with open(filepath, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{filepath} is not valid JSON ({exc})") from exc
    config = _build(ExperimentConfig(), data, "")
    return validate_config(apply_overrides(config, **overrides))


def config_to_dict(config: ExperimentConfig) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(config)))


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON of the config."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def main():
    print("⚙️ Experiment configuration")
    print("-" * 40)

    config = load_config()
    print(f"Model:        N={config.model.modes}, spacing {config.model.spacing}, "
          f"cap {config.model.per_mode_cap}, energy cap {config.model.energy_cap}")
    print(f"Kernel:       {config.kernel.profile}, exponent {config.kernel.kernel_exponent}, "
          f"T in {list(config.kernel.schedule_T)}")
    print(f"Deformation:  kappa in {list(config.deformation.kappas)}, {config.deformation.mollifier}")
    print(f"Hash:         {config_hash(config)[:16]}")


if __name__ == "__main__":
    main()
