from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import pytest
from conftest import tiny_state

from pcinr.errors import CheckpointError
from pcinr.training import fit, load_checkpoint, save_checkpoint
from pcinr.training.checkpoint import FORMAT_VERSION, MAGIC, decode_checkpoint, encode_checkpoint
from pcinr.training.state import LATENT_NAME

HEADER_BYTES = 12


@pytest.mark.parametrize("arch", ["pcinr", "tcnn"])
def test_round_trip_is_byte_identical(arch: str, targets: np.ndarray, tmp_path: Path) -> None:
    state = tiny_state(arch)
    fit(state, targets, 2)
    path = save_checkpoint(state, tmp_path / "a.pcnr")
    restored = load_checkpoint(path)
    assert restored.epoch == 2
    assert restored.config == state.config
    assert restored.item_ids == state.item_ids
    assert encode_checkpoint(restored) == path.read_bytes()
    np.testing.assert_array_equal(restored.latents.codes, state.latents.codes)
    np.testing.assert_array_equal(restored.latent_opt.t[LATENT_NAME], state.latent_opt.t[LATENT_NAME])


def test_header_layout(pcinr_state, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    blob = encode_checkpoint(pcinr_state)
    magic, version, meta_len = struct.unpack_from("<4sII", blob)
    assert magic == MAGIC == b"PCNR"
    assert version == FORMAT_VERSION == 1
    assert blob[HEADER_BYTES : HEADER_BYTES + meta_len].startswith(b'{"arch":"pcinr"')


def test_resume_matches_uninterrupted_run(targets: np.ndarray, tmp_path: Path) -> None:
    straight = tiny_state(seed=6)
    fit(straight, targets, 3)

    first = tiny_state(seed=6)
    fit(first, targets, 1)
    save_checkpoint(first, tmp_path / "mid.pcnr")
    resumed = load_checkpoint(tmp_path / "mid.pcnr")
    fit(resumed, targets, 2)

    assert encode_checkpoint(resumed) == encode_checkpoint(straight)


def test_atomic_save_leaves_no_temp_files(pcinr_state, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    save_checkpoint(pcinr_state, tmp_path / "c.pcnr")
    save_checkpoint(pcinr_state, tmp_path / "c.pcnr")
    assert [p.name for p in tmp_path.iterdir()] == ["c.pcnr"]


def _corrupt(blob: bytes, at: int) -> bytes:
    return blob[:at] + bytes([blob[at] ^ 0xFF]) + blob[at + 1 :]


def test_corruption_is_detected(pcinr_state) -> None:  # type: ignore[no-untyped-def]
    blob = encode_checkpoint(pcinr_state)
    cases = {
        "magic": _corrupt(blob, 0),
        "version": blob[:4] + struct.pack("<I", 2) + blob[8:],
        "truncated": blob[:-20],
        "header": blob[:6],
        "checksum": _corrupt(blob, len(blob) - 40),
        "metadata": _corrupt(blob, HEADER_BYTES + 1),
    }
    for label, bad in cases.items():
        with pytest.raises(CheckpointError):
            decode_checkpoint(bad, source=label)


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "nope.pcnr")
