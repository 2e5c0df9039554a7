"""Run configuration: defaults < architecture preset < config file < CLI flags.

Config files are flat UTF-8 JSON objects whose keys are ``RunConfig`` field
names. Unknown keys and ill-typed values raise ``ConfigError``.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from pcinr.errors import ConfigError
from pcinr.training.state import TrainConfig

__all__ = [
    "ARCH_PRESETS",
    "RESOLVED_NAME",
    "RunConfig",
    "SweepSpace",
    "load_config_file",
    "resolve_config",
    "write_resolved",
]

RESOLVED_NAME = "config.resolved.json"

ARCH_PRESETS: dict[str, dict[str, Any]] = {
    "pcinr": {},
    "pcinr_wide": {"hidden_width": 380, "depth": 4},
    "pcinr_wr": {"lambda_wr": 1e-4},
    "tcnn": {},
}


@dataclass(frozen=True)
class SweepSpace:
    omega0_first: tuple[float, float] = (500.0, 10000.0)
    omega0_hidden: tuple[float, float] = (5.0, 100.0)
    candidate_count: int = 16
    rung_epochs: tuple[int, ...] = (25, 50, 100, 200)
    keep_fraction: float = 0.5

    def __post_init__(self) -> None:
        for name in ("omega0_first", "omega0_hidden"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi and math.isfinite(hi)):
                raise ConfigError(f"{name} range must satisfy 0 < lo < hi, got [{lo}, {hi}]")
        if self.candidate_count < 1:
            raise ConfigError(f"candidate_count must be >= 1, got {self.candidate_count}")
        if not self.rung_epochs or any(e < 1 for e in self.rung_epochs):
            raise ConfigError("rung_epochs must be a non-empty list of positive epoch counts")
        if any(b <= a for a, b in zip(self.rung_epochs, self.rung_epochs[1:])):
            raise ConfigError(f"rung_epochs must be strictly increasing, got {list(self.rung_epochs)}")
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ConfigError(f"keep_fraction must lie in (0, 1], got {self.keep_fraction}")


@dataclass(frozen=True)
class RunConfig:
    arch: str = "pcinr"
    dataset: str = ""
    out: str = "runs/default"
    epochs: int = 5000
    batch_items: int = 16
    coord_chunk: int = 2048
    lambda_wr: float = 0.0
    derivative_term: bool = True
    optimizer: str = "adabelief"
    lr_net: float = 1e-4
    lr_latent: float = 1e-3
    latent_init_std: float = 0.01
    seed: int = 0
    latent_dim: int = 256
    hidden_width: int = 256
    depth: int = 8
    omega0_first: float = 3000.0
    omega0_hidden: float = 30.0
    mapping_width: int = 256
    mapping_depth: int = 3
    tcnn_base_channels: int = 128
    tcnn_kernel_len: int = 25
    tcnn_stride: int = 4
    tcnn_upsample_layers: int = 5
    tcnn_seed_timesteps: int = 16
    # dataset loading
    sample_count: int = 16000
    sample_rate: int = 16000
    allow_rate_mismatch: bool = False
    # outputs
    checkpoint_every: int = 100
    eval_references: bool = True
    strict_dataset: bool = False
    # sweep space
    sweep_omega0_first: tuple[float, float] = (500.0, 10000.0)
    sweep_omega0_hidden: tuple[float, float] = (5.0, 100.0)
    sweep_candidates: int = 16
    sweep_rungs: tuple[int, ...] = (25, 50, 100, 200)
    sweep_keep_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.arch not in ARCH_PRESETS:
            raise ConfigError(f"arch must be one of {', '.join(ARCH_PRESETS)}, got {self.arch!r}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if self.sample_count < 2 or self.sample_rate < 1:  # noqa: PLR2004
            raise ConfigError("sample_count must be >= 2 and sample_rate >= 1")
        # validate the derived objects up front, before any compute
        self.train_config()
        self.sweep_space()

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        values = {k: v for k, v in asdict(self).items() if k in names}
        values["arch"] = "pcinr" if self.arch == "pcinr_wr" else self.arch
        return TrainConfig(**values)

    def sweep_space(self) -> SweepSpace:
        return SweepSpace(
            omega0_first=self.sweep_omega0_first,
            omega0_hidden=self.sweep_omega0_hidden,
            candidate_count=self.sweep_candidates,
            rung_epochs=self.sweep_rungs,
            keep_fraction=self.sweep_keep_fraction,
        )

    def to_dict(self) -> dict[str, Any]:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


_DEFAULTS = RunConfig.__dataclass_fields__


def _coerce(name: str, value: Any) -> Any:  # noqa: PLR0911
    default = _DEFAULTS[name].default
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true/false, got {value!r}")
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
        kind = type(default[0])
        try:
            return tuple(kind(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from exc
    return value


def _check_keys(raw: Mapping[str, Any], source: str) -> None:
    unknown = sorted(set(raw) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"{source}: unknown config keys {unknown}")


def load_config_file(path: str | os.PathLike[str]) -> dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    _check_keys(raw, str(path))
    return raw


def resolve_config(
    file_values: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Merge defaults, the arch preset, file values and CLI overrides (``None`` values skipped)."""
    file_values = dict(file_values or {})
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    _check_keys(file_values, "config")
    _check_keys(flags, "flags")
    arch = flags.get("arch", file_values.get("arch", RunConfig.arch))
    if arch not in ARCH_PRESETS:
        raise ConfigError(f"arch must be one of {', '.join(ARCH_PRESETS)}, got {arch!r}")
    merged: dict[str, Any] = {**ARCH_PRESETS[arch], **file_values, **flags}
    try:
        return RunConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def write_resolved(config: RunConfig, out_dir: str | os.PathLike[str]) -> Path:
    path = Path(out_dir) / RESOLVED_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
