"""RIFF PCM16 mono WAV reader/writer.

- read: signed 16-bit -> float by division by 32768
- write: clamp to [-1, 1 - 1/32768], scale by 32768, round to nearest
"""

from __future__ import annotations

import os
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import AudioFormatError, NonFiniteError

__all__ = ["SAMPLE_RATE", "Waveform", "read_wav", "write_wav"]

SAMPLE_RATE = 16000
SAMPLE_WIDTH = 2  # bytes, PCM16
NUM_CHANNELS = 1
FULL_SCALE = 32768.0


@dataclass
class Waveform:
    samples: npt.NDArray[Any]
    sample_rate_hz: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 1:
            raise AudioFormatError(f"waveform must be 1-D, got shape {self.samples.shape}")
        if self.sample_rate_hz <= 0:
            raise AudioFormatError(f"sample rate must be > 0, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def read_wav(path: str | os.PathLike[str]) -> Waveform:
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        # the wave module rejects non-PCM format tags and broken headers
        raise AudioFormatError(f"{path}: not a PCM WAV file ({exc})") from exc
    except EOFError as exc:
        raise AudioFormatError(f"{path}: truncated WAV header") from exc
    if channels != NUM_CHANNELS:
        raise AudioFormatError(f"{path}: expected mono, got {channels} channels")
    if width != SAMPLE_WIDTH:
        raise AudioFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if len(raw) % SAMPLE_WIDTH:
        raise AudioFormatError(f"{path}: odd number of data bytes")
    ints = np.frombuffer(raw, dtype="<i2")
    return Waveform(ints.astype(np.float64) / FULL_SCALE, rate)


def quantize(samples: npt.ArrayLike) -> npt.NDArray[np.int16]:
    """Float samples to PCM16 integers (clamped, rounded to nearest)."""
    x = np.asarray(samples, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("cannot quantize non-finite samples")
    x = np.clip(x, -1.0, 1.0 - 1.0 / FULL_SCALE)
    return np.rint(x * FULL_SCALE).astype(np.int16)


def write_wav(waveform: Waveform, path: str | os.PathLike[str]) -> None:
    data = quantize(waveform.samples).astype("<i2").tobytes()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(NUM_CHANNELS)
        wf.setsampwidth(SAMPLE_WIDTH)
        wf.setframerate(int(waveform.sample_rate_hz))
        wf.writeframes(data)
