"""Shared tiny-model fixtures; full-size runs live in test_acceptance.py (marked slow)."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import pytest

from pcinr.audio import SynthSetSpec, Timbre, generate_synth_set
from pcinr.training import TrainConfig, build_state
from pcinr.training.state import TrainState

TINY_SAMPLES = 64
TINY_ITEMS = 4

# small sine net: a few hundred parameters, fast enough for finite differences
TINY_PCINR: dict[str, Any] = {
    "latent_dim": 6,
    "hidden_width": 8,
    "depth": 3,
    "mapping_width": 8,
    "mapping_depth": 2,
    "omega0_first": 20.0,
    "omega0_hidden": 3.0,
    "batch_items": 2,
    "coord_chunk": 2048,
    "lr_net": 1e-3,
    "lr_latent": 1e-2,
    "latent_init_std": 0.1,
}

# 8 timesteps * 2 ** 3 = 64 output samples, channels 4 -> 2 -> 1
TINY_TCNN: dict[str, Any] = {
    "latent_dim": 6,
    "tcnn_base_channels": 4,
    "tcnn_kernel_len": 5,
    "tcnn_stride": 2,
    "tcnn_upsample_layers": 3,
    "tcnn_seed_timesteps": 8,
    "batch_items": 2,
    "lr_net": 1e-3,
    "lr_latent": 1e-2,
    "latent_init_std": 0.1,
}


def tiny_targets(items: int = TINY_ITEMS, samples: int = TINY_SAMPLES, seed: int = 7) -> np.ndarray:
    """Smooth, distinct test signals in [-0.8, 0.8]."""
    t = np.linspace(-1.0, 1.0, samples)
    rng = np.random.default_rng(seed)
    rows = [0.8 * np.sin((k + 1) * 2.0 * t + rng.uniform(0, np.pi)) * np.exp(-0.5 * (t + 1)) for k in range(items)]
    return np.stack(rows)


def tiny_config(arch: str = "pcinr", **overrides: Any) -> TrainConfig:
    base = TINY_TCNN if arch == "tcnn" else TINY_PCINR
    return TrainConfig(arch=arch, epochs=3, **{**base, **overrides})


def tiny_state(arch: str = "pcinr", items: int = TINY_ITEMS, samples: int = TINY_SAMPLES, **overrides: Any) -> TrainState:
    return build_state(tiny_config(arch, **overrides), items, sample_count=samples, sample_rate=16000)


@pytest.fixture
def targets() -> np.ndarray:
    return tiny_targets()


@pytest.fixture
def pcinr_state() -> TrainState:
    return tiny_state("pcinr")


@pytest.fixture
def tcnn_state() -> TrainState:
    return tiny_state("tcnn")


@pytest.fixture
def tone_set(tmp_path: Path) -> Path:
    """Four short tones (4096 samples, long enough for every STFT window) with a manifest."""
    spec = SynthSetSpec(
        item_count=4,
        midi_lo=60,
        midi_hi=63,
        timbres=(Timbre((1.0, 0.5), 1.0),),
        duration_s=0.256,
        sample_rate=16000,
        seed=3,
        name="tones",
    )
    out = tmp_path / "tones"
    generate_synth_set(spec, out)
    return out / "manifest.csv"
