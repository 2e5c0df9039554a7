"""Training configuration and the checkpointable training state."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Literal, Union

import numpy.typing as npt

from pcinr.errors import ConfigError, ShapeError, UnsupportedArchError
from pcinr.models.pcinr import MappingParams, PcinrConfig, PcinrParams, count_params, init_pcinr
from pcinr.models.tcnn import TcnnConfig, TcnnParams, init_tcnn, tcnn_count_params
from pcinr.numerics import Rng
from pcinr.optim import OptimState, init_optim_state

__all__ = [
    "ARCHS",
    "LATENT_NAME",
    "LatentTable",
    "TrainConfig",
    "TrainState",
    "build_state",
    "config_hash",
]

Array = npt.NDArray[Any]
Arch = Literal["pcinr", "pcinr_wide", "tcnn"]
ARCHS: tuple[str, ...] = ("pcinr", "pcinr_wide", "tcnn")
OPTIMIZERS = ("adabelief", "adam")
LATENT_NAME = "latents"

# Rng child streams
MODEL_STREAM = 1
LATENT_STREAM = 2
EPOCH_STREAM = 3
ENCODE_STREAM = 4

_WIDE = {"hidden_width": 380, "depth": 4}


@dataclass(frozen=True)
class TrainConfig:
    arch: str = "pcinr"
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
    # decoder shape; pcinr_wide presets hidden_width/depth
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

    def __post_init__(self) -> None:
        if self.arch not in ARCHS:
            raise ConfigError(f"arch must be one of {', '.join(ARCHS)}, got {self.arch!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {', '.join(OPTIMIZERS)}, got {self.optimizer!r}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_items < 1 or self.coord_chunk < 1:
            raise ConfigError("batch_items and coord_chunk must be >= 1")
        if self.lambda_wr < 0:
            raise ConfigError(f"lambda_wr must be >= 0, got {self.lambda_wr}")
        if self.lr_net <= 0 or self.lr_latent <= 0 or self.latent_init_std < 0:
            raise ConfigError("learning rates must be > 0 and latent_init_std >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        try:
            self.model_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def preset(cls, arch: str, **overrides: Any) -> TrainConfig:
        """Config with the architecture's shape defaults applied before ``overrides``."""
        base = dict(_WIDE) if arch == "pcinr_wide" else {}
        return cls(arch=arch, **{**base, **overrides})

    @property
    def family(self) -> str:
        return "tcnn" if self.arch == "tcnn" else "pcinr"

    def model_config(self) -> PcinrConfig | TcnnConfig:
        if self.family == "tcnn":
            return TcnnConfig(
                latent_dim=self.latent_dim,
                base_channels=self.tcnn_base_channels,
                kernel_len=self.tcnn_kernel_len,
                stride=self.tcnn_stride,
                num_upsample_layers=self.tcnn_upsample_layers,
                seed_timesteps=self.tcnn_seed_timesteps,
                output_len=self.tcnn_seed_timesteps * self.tcnn_stride**self.tcnn_upsample_layers,
            )
        return PcinrConfig(
            hidden_width=self.hidden_width,
            depth=self.depth,
            latent_dim=self.latent_dim,
            omega0_first=self.omega0_first,
            omega0_hidden=self.omega0_hidden,
            mapping_width=self.mapping_width,
            mapping_depth=self.mapping_depth,
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> TrainConfig:
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown training config keys: {unknown}")
        return cls(**raw)

    def with_(self, **changes: Any) -> TrainConfig:
        return replace(self, **changes)


def config_hash(config: TrainConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


@dataclass
class LatentTable:
    """One trainable latent code per dataset item (the autodecoder state)."""

    codes: Array  # (N, latent_dim)

    def __post_init__(self) -> None:
        if self.codes.ndim != 2:  # noqa: PLR2004
            raise ShapeError(f"latent table must be 2-D, got shape {self.codes.shape}")

    def __len__(self) -> int:
        return int(self.codes.shape[0])

    @property
    def dim(self) -> int:
        return int(self.codes.shape[1])

    def named(self) -> dict[str, Array]:
        return {LATENT_NAME: self.codes}

    @classmethod
    def init(cls, rows: int, dim: int, std: float, rng: Rng) -> LatentTable:
        return cls(rng.normal(0.0, std, (rows, dim)))


Decoder = Union[PcinrParams, TcnnParams]


@dataclass
class TrainState:
    config: TrainConfig
    decoder: Decoder
    mapping: MappingParams | None
    latents: LatentTable
    net_opt: OptimState
    latent_opt: OptimState
    epoch: int = 0
    sample_count: int = 16000
    sample_rate: int = 16000
    dataset_hash: str = ""
    item_ids: list[str] = field(default_factory=list)

    @property
    def family(self) -> str:
        return self.config.family

    @property
    def rng(self) -> Rng:
        return Rng(self.config.seed)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def net_params(self) -> dict[str, Array]:
        """Decoder (+ mapping) tensors, views of the live arrays."""
        out = dict(self.decoder.named())
        if self.mapping is not None:
            out.update(self.mapping.named())
        return dict(sorted(out.items()))

    def decoder_weight_names(self) -> list[str]:
        return self.decoder.weight_names()

    def param_count(self) -> int:
        if isinstance(self.decoder, PcinrParams):
            assert self.mapping is not None
            return count_params(self.decoder, self.mapping)
        return tcnn_count_params(self.decoder)

    def latent_for(self, item: int | str) -> Array:
        if isinstance(item, str):
            try:
                item = self.item_ids.index(item)
            except ValueError:
                raise ShapeError(f"unknown item_id {item!r}") from None
        if not 0 <= item < len(self.latents):
            raise ShapeError(f"item index {item} out of range [0, {len(self.latents)})")
        return self.latents.codes[item]

    def require_pcinr(self, operation: str) -> tuple[PcinrParams, MappingParams]:
        if not isinstance(self.decoder, PcinrParams) or self.mapping is None:
            raise UnsupportedArchError(f"{operation} needs a pcinr-family checkpoint, got arch {self.config.arch!r}")
        return self.decoder, self.mapping


def build_state(
    config: TrainConfig,
    item_count: int,
    *,
    sample_count: int = 16000,
    sample_rate: int = 16000,
    dataset_hash: str = "",
    item_ids: list[str] | None = None,
) -> TrainState:
    """Fresh, seed-determined state: initialized networks, latent table and zeroed optimizer moments."""
    if item_count < 1:
        raise ShapeError(f"item_count must be >= 1, got {item_count}")
    if sample_count < 2:  # noqa: PLR2004
        raise ShapeError(f"sample_count must be >= 2, got {sample_count}")
    ids = list(item_ids) if item_ids is not None else [str(i) for i in range(item_count)]
    if len(ids) != item_count:
        raise ShapeError(f"{len(ids)} item ids for {item_count} items")
    root = Rng(config.seed)
    model_cfg = config.model_config()
    mapping: MappingParams | None
    decoder: Decoder
    if isinstance(model_cfg, TcnnConfig):
        if sample_count > model_cfg.output_len:
            raise ShapeError(f"tcnn produces {model_cfg.output_len} samples, dataset needs {sample_count}")
        decoder, mapping = init_tcnn(model_cfg, root.child(MODEL_STREAM)), None
    else:
        decoder, mapping = init_pcinr(model_cfg, root.child(MODEL_STREAM))
    latents = LatentTable.init(item_count, config.latent_dim, config.latent_init_std, root.child(LATENT_STREAM))
    state = TrainState(
        config=config,
        decoder=decoder,
        mapping=mapping,
        latents=latents,
        net_opt=OptimState(lr=config.lr_net),
        latent_opt=OptimState(lr=config.lr_latent),
        sample_count=sample_count,
        sample_rate=sample_rate,
        dataset_hash=dataset_hash,
        item_ids=ids,
    )
    state.net_opt = init_optim_state(state.net_params(), config.lr_net)
    state.latent_opt = init_optim_state(latents.named(), config.lr_latent, row_sparse=(LATENT_NAME,))
    return state

