"""Binary checkpoint format.

    b"PCNR" | u32 version | u32 metadata length | metadata (UTF-8 JSON, sorted keys)
    | float32 little-endian tensors in manifest order | 8-byte BLAKE2b of the tensor payload

The metadata holds the training config and its hash, the tensor manifest
(name, shape, offset, nbytes), dataset hash, item ids, epoch, seed and the
optimizer hyperparameters and step counters. Saving the same state twice
gives identical bytes.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import CheckpointError, ConfigError
from pcinr.optim import OptimState

from .state import LATENT_NAME, TrainConfig, TrainState, build_state, config_hash

__all__ = ["FORMAT_VERSION", "MAGIC", "load_checkpoint", "save_checkpoint"]

MAGIC = b"PCNR"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sII")
CHECKSUM_BYTES = 8

Array = npt.NDArray[Any]


def _tensors(state: TrainState) -> list[tuple[str, Array]]:
    net = state.net_params()
    out: list[tuple[str, Array]] = list(net.items())
    out.append((LATENT_NAME, state.latents.codes))
    for prefix, opt, names in (
        ("opt.net", state.net_opt, list(net)),
        ("opt.latent", state.latent_opt, [LATENT_NAME]),
    ):
        out.extend((f"{prefix}.m.{n}", opt.m[n]) for n in names)
        out.extend((f"{prefix}.v.{n}", opt.v[n]) for n in names)
    return out


def _opt_meta(opt: OptimState) -> dict[str, Any]:
    steps = {name: (t.tolist() if t.ndim else int(t)) for name, t in sorted(opt.t.items())}
    return {**opt.hyper(), "t": steps}


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=CHECKSUM_BYTES).digest()


def encode_checkpoint(state: TrainState) -> bytes:
    manifest = []
    chunks = []
    offset = 0
    for name, arr in _tensors(state):
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    payload = b"".join(chunks)
    meta = {
        "arch": state.config.arch,
        "config": state.config.to_dict(),
        "config_hash": state.config_hash,
        "dataset_hash": state.dataset_hash,
        "epoch": state.epoch,
        "item_ids": state.item_ids,
        "optimizer": {"net": _opt_meta(state.net_opt), "latent": _opt_meta(state.latent_opt)},
        "rng": {"algorithm": state.rng.algorithm, "seed": state.config.seed, "stream": []},
        "sample_count": state.sample_count,
        "sample_rate": state.sample_rate,
        "tensors": manifest,
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(MAGIC, FORMAT_VERSION, len(meta_bytes)) + meta_bytes + payload + _checksum(payload)


def save_checkpoint(state: TrainState, path: str | os.PathLike[str]) -> Path:
    """Write atomically (temp file in the target directory, then rename)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    blob = encode_checkpoint(state)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp)
        raise
    return target


def _restore_opt(opt: OptimState, meta: dict[str, Any]) -> None:
    for key in ("lr", "beta1", "beta2", "eps"):
        setattr(opt, key, float(meta[key]))
    for name, steps in meta["t"].items():
        if name not in opt.t:
            raise CheckpointError(f"step counter for unknown tensor {name!r}")
        counter = np.asarray(steps, dtype=np.int64)
        if counter.shape != opt.t[name].shape:
            raise CheckpointError(f"step counter {name!r} has shape {counter.shape}")
        opt.t[name][...] = counter


def decode_checkpoint(blob: bytes, *, source: str = "<bytes>") -> TrainState:  # noqa: PLR0912
    if len(blob) < _HEADER.size:
        raise CheckpointError(f"{source}: truncated header")
    magic, version, meta_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: not a pcinr checkpoint (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: unsupported format version {version} (expected {FORMAT_VERSION})")
    body_start = _HEADER.size + meta_len
    if len(blob) < body_start:
        raise CheckpointError(f"{source}: truncated metadata")
    try:
        meta = json.loads(blob[_HEADER.size : body_start].decode("utf-8"))
        manifest = meta["tensors"]
        payload_len = sum(int(t["nbytes"]) for t in manifest)
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{source}: corrupt metadata ({exc})") from exc
    if len(blob) != body_start + payload_len + CHECKSUM_BYTES:
        raise CheckpointError(
            f"{source}: expected {body_start + payload_len + CHECKSUM_BYTES} bytes, got {len(blob)} (truncated?)"
        )
    payload = blob[body_start : body_start + payload_len]
    if _checksum(payload) != blob[body_start + payload_len :]:
        raise CheckpointError(f"{source}: payload checksum mismatch")
    try:
        config = TrainConfig.from_dict(meta["config"])
    except (ConfigError, TypeError) as exc:
        raise CheckpointError(f"{source}: invalid config ({exc})") from exc
    if config_hash(config) != meta.get("config_hash"):
        raise CheckpointError(f"{source}: config hash mismatch")

    item_ids = [str(i) for i in meta["item_ids"]]
    state = build_state(
        config,
        len(item_ids),
        sample_count=int(meta["sample_count"]),
        sample_rate=int(meta["sample_rate"]),
        dataset_hash=str(meta["dataset_hash"]),
        item_ids=item_ids,
    )
    state.epoch = int(meta["epoch"])
    targets = dict(_tensors(state))
    if set(targets) != {t["name"] for t in manifest}:
        raise CheckpointError(f"{source}: tensor set does not match the {config.arch} architecture")
    for entry in manifest:
        dest = targets[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != dest.shape or int(entry["nbytes"]) != 4 * dest.size:
            raise CheckpointError(f"{source}: tensor {entry['name']!r} has shape {shape}, expected {dest.shape}")
        start = int(entry["offset"])
        if start < 0 or start + 4 * dest.size > payload_len:
            raise CheckpointError(f"{source}: tensor {entry['name']!r} lies outside the payload")
        data = np.frombuffer(payload, dtype="<f4", count=dest.size, offset=start)
        np.copyto(dest, data.reshape(shape), casting="unsafe")
    _restore_opt(state.net_opt, meta["optimizer"]["net"])
    _restore_opt(state.latent_opt, meta["optimizer"]["latent"])
    return state


def load_checkpoint(path: str | os.PathLike[str]) -> TrainState:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}") from None
    return decode_checkpoint(blob, source=str(path))
