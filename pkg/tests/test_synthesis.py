from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from conftest import TINY_SAMPLES, tiny_state

from pcinr.errors import CheckpointError, ShapeError, UnsupportedArchError
from pcinr.training import (
    encode_unseen,
    ensemble_synthesize,
    fit,
    interpolate_latents,
    item_gradients,
    latent_loss,
    load_latent,
    reconstruct,
    save_latent,
    synthesize,
)
from pcinr.training.synthesis import SYNTH_CHUNK

NATIVE = 4001
ENCODE_STEPS = 60


def test_double_resolution_contains_native_grid_bit_exactly() -> None:
    state = tiny_state(samples=NATIVE)
    native = synthesize(state, 0, NATIVE)
    fine = synthesize(state, 0, 2 * NATIVE - 1)
    assert len(fine) == 2 * NATIVE - 1
    np.testing.assert_array_equal(fine.samples[::2], native.samples)


def test_output_rate_tracks_resolution_and_fraction() -> None:
    state = tiny_state(samples=NATIVE)
    assert synthesize(state, 0, NATIVE).sample_rate_hz == 16000
    assert synthesize(state, 0, 2 * NATIVE - 1).sample_rate_hz == 32000
    half = synthesize(state, 0, 2001, duration_fraction=0.5)
    np.testing.assert_array_equal(half.samples, synthesize(state, 0, NATIVE).samples[:2001])
    assert half.sample_rate_hz == 16000


def test_chunk_padding_spans_multiple_chunks() -> None:
    state = tiny_state(samples=TINY_SAMPLES)
    long = synthesize(state, 1, SYNTH_CHUNK + 5)
    assert len(long) == SYNTH_CHUNK + 5
    assert np.all(np.isfinite(long.samples))


def test_reconstruct_matches_training_prediction(targets: np.ndarray) -> None:
    state = tiny_state()
    fit(state, targets, 1)
    pred = item_gradients(state, state.latents.codes[2], targets[2]).pred
    np.testing.assert_allclose(reconstruct(state, 2).samples, pred, rtol=1e-6, atol=1e-7)
    np.testing.assert_array_equal(reconstruct(state, "2").samples, reconstruct(state, 2).samples)


def test_item_lookup_errors() -> None:
    state = tiny_state()
    with pytest.raises(ShapeError):
        synthesize(state, 99, TINY_SAMPLES)
    with pytest.raises(ShapeError):
        synthesize(state, "missing", TINY_SAMPLES)
    with pytest.raises(ShapeError):
        synthesize(state, np.zeros(state.latents.dim + 1), TINY_SAMPLES)


def test_tcnn_synthesis_is_fixed_length() -> None:
    state = tiny_state("tcnn", samples=60)
    assert len(synthesize(state, 0, 60)) == 60
    assert len(synthesize(state, 0, 64)) == 64
    with pytest.raises(UnsupportedArchError):
        synthesize(state, 0, 127)
    with pytest.raises(UnsupportedArchError):
        synthesize(state, 0, 60, duration_fraction=0.5)


def test_ensemble_is_mean_of_members() -> None:
    a, b = tiny_state(seed=1), tiny_state(seed=2)
    mean = ensemble_synthesize([a, b], 0, TINY_SAMPLES)
    expected = (synthesize(a, 0, TINY_SAMPLES).samples + synthesize(b, 0, TINY_SAMPLES).samples) / 2
    np.testing.assert_allclose(mean.samples, expected, rtol=1e-6)
    with pytest.raises(ValueError):
        ensemble_synthesize([a], 0, TINY_SAMPLES)
    with pytest.raises(ShapeError):
        ensemble_synthesize([a, tiny_state("tcnn")], 0, TINY_SAMPLES)
    with pytest.raises(ShapeError):
        ensemble_synthesize([a, tiny_state(samples=TINY_SAMPLES + 1)], 0, TINY_SAMPLES)


def test_interpolation_endpoints() -> None:
    state = tiny_state()
    start = interpolate_latents(state, 0, 3, 0.0, TINY_SAMPLES)
    end = interpolate_latents(state, 0, 3, 1.0, TINY_SAMPLES)
    np.testing.assert_allclose(start.samples, synthesize(state, 0, TINY_SAMPLES).samples, rtol=1e-6, atol=1e-7)
    np.testing.assert_allclose(end.samples, synthesize(state, 3, TINY_SAMPLES).samples, rtol=1e-6, atol=1e-7)
    with pytest.raises(ValueError):
        interpolate_latents(state, 0, 3, 1.5, TINY_SAMPLES)


def test_encode_unseen_reduces_loss_and_freezes_network(targets: np.ndarray) -> None:
    state = tiny_state()
    frozen = {k: v.copy() for k, v in state.net_params().items()}
    unseen = targets[3]
    z = encode_unseen(state, unseen, ENCODE_STEPS, seed=11)
    start = encode_unseen(state, unseen, 0, seed=11)
    assert latent_loss(state, z, unseen).total < latent_loss(state, start, unseen).total
    for name, value in state.net_params().items():
        np.testing.assert_array_equal(value, frozen[name])
    np.testing.assert_array_equal(z, encode_unseen(state, unseen, ENCODE_STEPS, seed=11))


def test_encode_needs_pcinr_and_native_length(targets: np.ndarray) -> None:
    with pytest.raises(UnsupportedArchError):
        encode_unseen(tiny_state("tcnn"), targets[0], 5)
    with pytest.raises(ShapeError):
        encode_unseen(tiny_state(), targets[0][:10], 5)


def test_latent_file_round_trip_and_errors(tmp_path: Path) -> None:
    z = np.linspace(-1, 1, 6).astype(np.float32)
    save_latent(z, tmp_path / "z.pclt")
    blob = (tmp_path / "z.pclt").read_bytes()
    assert blob[:4] == b"PCLT" and len(blob) == 16 + 4 * 6
    np.testing.assert_array_equal(load_latent(tmp_path / "z.pclt"), z)

    (tmp_path / "bad.pclt").write_bytes(b"XXXX" + blob[4:])
    (tmp_path / "short.pclt").write_bytes(blob[:-4])
    for name in ("bad.pclt", "short.pclt", "missing.pclt"):
        with pytest.raises(CheckpointError):
            load_latent(tmp_path / name)


def test_synthesize_from_latent_file(tmp_path: Path) -> None:
    state = tiny_state()
    save_latent(state.latents.codes[1], tmp_path / "z.pclt")
    from_file = synthesize(state, load_latent(tmp_path / "z.pclt"), TINY_SAMPLES)
    np.testing.assert_array_equal(from_file.samples, synthesize(state, 1, TINY_SAMPLES).samples)
