"""Autodecoder training: losses, state, loop, checkpoints and synthesis."""

from .checkpoint import load_checkpoint, save_checkpoint
from .losses import LossBreakdown, coordinate_grid, reconstruction_loss, weight_reg_term
from .loop import batch_gradients, fit, item_gradients, train_epoch
from .state import LatentTable, TrainConfig, TrainState, build_state, config_hash
from .synthesis import (
    encode_unseen,
    ensemble_synthesize,
    interpolate_latents,
    latent_loss,
    load_latent,
    reconstruct,
    save_latent,
    synthesize,
)

__all__ = [
    "LatentTable",
    "LossBreakdown",
    "TrainConfig",
    "TrainState",
    "batch_gradients",
    "build_state",
    "config_hash",
    "coordinate_grid",
    "encode_unseen",
    "ensemble_synthesize",
    "fit",
    "interpolate_latents",
    "item_gradients",
    "latent_loss",
    "load_checkpoint",
    "load_latent",
    "reconstruct",
    "reconstruction_loss",
    "save_checkpoint",
    "save_latent",
    "synthesize",
    "train_epoch",
    "weight_reg_term",
]
