"""Decoders: the FiLM-conditioned sine network and the transposed-convolution baseline."""

from .pcinr import (
    FiLMVector,
    MappingParams,
    PcinrConfig,
    PcinrParams,
    count_params,
    init_pcinr,
    map_latent,
    pcinr_forward,
)
from .tcnn import TcnnConfig, TcnnParams, init_tcnn, tcnn_count_params, tcnn_forward

__all__ = [
    "FiLMVector",
    "MappingParams",
    "PcinrConfig",
    "PcinrParams",
    "TcnnConfig",
    "TcnnParams",
    "count_params",
    "init_pcinr",
    "init_tcnn",
    "map_latent",
    "pcinr_forward",
    "tcnn_count_params",
    "tcnn_forward",
]
