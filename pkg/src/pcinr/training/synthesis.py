"""Synthesis at arbitrary resolution, ensembles, unseen-item encoding and latent files.

PCINR coordinates are evaluated in chunks of ``SYNTH_CHUNK`` (the last chunk
padded), so the value at a coordinate does not depend on which grid it came
from: the even samples of an ``2M - 1`` grid equal the ``M`` grid exactly.
"""

from __future__ import annotations

import os
import struct
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.audio.wav import Waveform
from pcinr.errors import CheckpointError, ShapeError, UnsupportedArchError
from pcinr.models.pcinr import map_latent, pcinr_forward
from pcinr.models.tcnn import TcnnParams, tcnn_forward
from pcinr.numerics import Rng, check_finite
from pcinr.optim import adam_step, init_optim_state

from .losses import LossBreakdown, coordinate_grid
from .loop import item_gradients
from .state import ENCODE_STREAM, TrainState

__all__ = [
    "LATENT_MAGIC",
    "SYNTH_CHUNK",
    "check_compatible",
    "encode_unseen",
    "ensemble_synthesize",
    "interpolate_latents",
    "latent_loss",
    "load_latent",
    "reconstruct",
    "save_latent",
    "synthesize",
]

SYNTH_CHUNK = 2048
LATENT_MAGIC = b"PCLT"
LATENT_VERSION = 1
_LATENT_HEADER = struct.Struct("<4sIII")

Array = npt.NDArray[Any]


def _resolve_latent(state: TrainState, item_or_latent: int | str | npt.ArrayLike) -> Array:
    if isinstance(item_or_latent, (int, np.integer, str)):
        return state.latent_for(item_or_latent if isinstance(item_or_latent, str) else int(item_or_latent))
    z = np.asarray(item_or_latent, dtype=state.latents.codes.dtype).reshape(-1)
    if z.shape[0] != state.latents.dim:
        raise ShapeError(f"latent has {z.shape[0]} values, model expects {state.latents.dim}")
    return z


def _output_rate(state: TrainState, sample_count: int, fraction: float) -> int:
    return max(1, round(state.sample_rate * (sample_count - 1) / (fraction * (state.sample_count - 1))))


def synthesize(
    state: TrainState,
    item_or_latent: int | str | npt.ArrayLike,
    sample_count: int,
    duration_fraction: float = 1.0,
) -> Waveform:
    """Decode an item (index or id) or a raw latent on a ``sample_count`` grid."""
    z = _resolve_latent(state, item_or_latent)
    if isinstance(state.decoder, TcnnParams):
        full = state.decoder.seed_timesteps * state.decoder.stride ** len(state.decoder.kernels)
        if duration_fraction != 1.0 or sample_count not in (full, state.sample_count):
            raise UnsupportedArchError(
                f"tcnn decodes a fixed {full} samples (or {state.sample_count} cropped), "
                f"got sample_count={sample_count}, duration_fraction={duration_fraction}"
            )
        out, _ = tcnn_forward(state.decoder, z)
        return Waveform(out[0, :sample_count].copy(), state.sample_rate)

    decoder, mapping = state.require_pcinr("synthesis")
    dtype = decoder.weights[0].dtype
    grid = coordinate_grid(sample_count, duration_fraction, dtype=dtype)
    film = map_latent(mapping, z[None, :])
    out = np.empty(sample_count, dtype=dtype)
    for s in range(0, sample_count, SYNTH_CHUNK):
        part = grid[s : s + SYNTH_CHUNK]
        buf = np.zeros(SYNTH_CHUNK, dtype=dtype)
        buf[: part.shape[0]] = part
        vals, _ = pcinr_forward(decoder, film, buf)
        out[s : s + part.shape[0]] = vals[0, : part.shape[0]]
    return Waveform(out, _output_rate(state, sample_count, duration_fraction))


def reconstruct(state: TrainState, item: int | str) -> Waveform:
    """Synthesis of a training item on its native grid."""
    return synthesize(state, item, state.sample_count)


def check_compatible(states: Sequence[TrainState]) -> None:
    """All states decode the same dataset on the same grid with the same architecture family."""
    if not states:
        raise ValueError("no checkpoints given")
    ref = states[0]
    for k, st in enumerate(states[1:], start=1):
        if st.family != ref.family:
            raise ShapeError(f"checkpoint {k} is {st.config.arch}, checkpoint 0 is {ref.config.arch}")
        if st.sample_count != ref.sample_count:
            raise ShapeError(f"checkpoint {k} grid has {st.sample_count} samples, checkpoint 0 {ref.sample_count}")
        if st.dataset_hash != ref.dataset_hash:
            raise ShapeError(f"checkpoint {k} was trained on a different dataset")


def ensemble_synthesize(states: Sequence[TrainState], item: int | str, sample_count: int) -> Waveform:
    """Elementwise mean of per-checkpoint syntheses."""
    if len(states) < 2:  # noqa: PLR2004
        raise ValueError(f"ensemble needs at least two checkpoints, got {len(states)}")
    check_compatible(states)
    waves = [synthesize(st, item, sample_count) for st in states]
    mean = np.mean(np.stack([w.samples for w in waves]), axis=0)
    return Waveform(mean, waves[0].sample_rate_hz)


def interpolate_latents(
    state: TrainState, item_a: int | str, item_b: int | str, alpha: float, sample_count: int
) -> Waveform:
    """Decode (1 - alpha) z_a + alpha z_b."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    za = state.latent_for(item_a).astype(np.float64)
    zb = state.latent_for(item_b).astype(np.float64)
    return synthesize(state, (1.0 - alpha) * za + alpha * zb, sample_count)


def latent_loss(state: TrainState, z: npt.ArrayLike, waveform: Waveform | npt.ArrayLike) -> LossBreakdown:
    """Reconstruction loss of ``waveform`` decoded from ``z`` (no weight regularization)."""
    return item_gradients(state, z, waveform).loss


def encode_unseen(
    state: TrainState,
    waveform: Waveform | npt.ArrayLike,
    steps: int,
    lr: float = 1e-2,
    *,
    seed: int | None = None,
) -> Array:
    """Fit a fresh latent to ``waveform`` with Adam while decoder and mapping stay frozen."""
    state.require_pcinr("encode")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    samples = np.asarray(getattr(waveform, "samples", waveform), dtype=np.float64).reshape(-1)
    if samples.shape[0] != state.sample_count:
        raise ShapeError(f"waveform has {samples.shape[0]} samples, model grid {state.sample_count}")
    rng = Rng(state.config.seed if seed is None else seed).child(ENCODE_STREAM)
    z = rng.normal(0.0, state.config.latent_init_std, state.latents.dim, dtype=state.latents.codes.dtype)
    params = {"z": z}
    opt = init_optim_state(params, lr)
    for step in range(steps):
        res = item_gradients(state, z, samples)
        check_finite("encode loss", np.asarray(res.loss.total), step=step)
        adam_step(opt, params, {"z": res.latent.astype(z.dtype, copy=False)})
    return z


def save_latent(z: npt.ArrayLike, path: str | os.PathLike[str]) -> None:
    """16-byte header (magic, version, dim, reserved) then float32 little-endian values."""
    arr = np.asarray(z).reshape(-1)
    Path(path).write_bytes(
        _LATENT_HEADER.pack(LATENT_MAGIC, LATENT_VERSION, arr.shape[0], 0) + arr.astype("<f4").tobytes()
    )


def load_latent(path: str | os.PathLike[str]) -> npt.NDArray[np.float32]:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"latent file not found: {path}") from None
    if len(blob) < _LATENT_HEADER.size:
        raise CheckpointError(f"{path}: truncated latent header")
    magic, version, dim, _ = _LATENT_HEADER.unpack_from(blob)
    if magic != LATENT_MAGIC:
        raise CheckpointError(f"{path}: not a latent file (magic {magic!r})")
    if version != LATENT_VERSION:
        raise CheckpointError(f"{path}: unsupported latent version {version}")
    if len(blob) != _LATENT_HEADER.size + 4 * dim:
        raise CheckpointError(f"{path}: expected {dim} float32 values")
    return np.frombuffer(blob, dtype="<f4", offset=_LATENT_HEADER.size).astype(np.float32)
