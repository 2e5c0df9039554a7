"""Synthetic harmonic tone sets (desk-scale stand-in for recorded note datasets).

Each item is a sum of harmonics of f = 440 * 2 ** ((midi - 69) / 12) under an
exponential decay, peak-normalized to 0.9. Item p gets note index
``(p + p // L) % N`` and timbre ``p % T`` with ``L = lcm(N, T)``: every
(note, timbre) pair appears once per ``L`` items and per-note / per-timbre
counts never differ by more than one.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import ConfigError, DatasetError
from pcinr.numerics import Rng

from .dataset import DatasetManifest, ManifestRow, write_manifest
from .wav import SAMPLE_RATE, Waveform, write_wav

__all__ = [
    "PEAK",
    "SynthSetSpec",
    "Timbre",
    "describe",
    "generate_synth_set",
    "load_synth_spec",
    "midi_to_hz",
    "note_assignment",
    "render_note",
]

PEAK = 0.9
MIDI_MAX = 127


@dataclass(frozen=True)
class Timbre:
    harmonics: tuple[float, ...] = (1.0,)  # amplitude of harmonic h = index + 1
    decay: float = 0.0  # envelope exp(-decay * t), t in seconds

    def __post_init__(self) -> None:
        if not self.harmonics or not any(a != 0 for a in self.harmonics):
            raise ValueError("timbre needs at least one non-zero harmonic")
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")


@dataclass(frozen=True)
class SynthSetSpec:
    item_count: int
    midi_lo: int
    midi_hi: int
    timbres: tuple[Timbre, ...] = field(default_factory=lambda: (Timbre(),))
    duration_s: float = 1.0
    sample_rate: int = SAMPLE_RATE
    seed: int = 0
    name: str = "synth"

    def __post_init__(self) -> None:
        if self.item_count < 1:
            raise ValueError(f"item_count must be >= 1, got {self.item_count}")
        if not 0 <= self.midi_lo <= self.midi_hi <= MIDI_MAX:
            raise ValueError(f"midi range must satisfy 0 <= lo <= hi <= 127, got [{self.midi_lo}, {self.midi_hi}]")
        if not self.timbres:
            raise ValueError("at least one timbre is required")
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise ValueError("duration_s and sample_rate must be > 0")

    @property
    def notes(self) -> list[int]:
        return list(range(self.midi_lo, self.midi_hi + 1))

    @property
    def sample_count(self) -> int:
        return round(self.duration_s * self.sample_rate)


def load_synth_spec(path: str | os.PathLike[str]) -> SynthSetSpec:
    """Read a JSON ``.spec`` file; ``midi_note_range`` is ``[lo, hi]``."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"dataset spec not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {"item_count", "midi_note_range", "timbres", "duration_s", "sample_rate", "seed", "name"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    try:
        lo, hi = raw["midi_note_range"]
        timbres = tuple(
            Timbre(harmonics=tuple(float(a) for a in t["harmonics"]), decay=float(t.get("decay", 0.0)))
            for t in raw.get("timbres", [{"harmonics": [1.0]}])
        )
        return SynthSetSpec(
            item_count=int(raw["item_count"]),
            midi_lo=int(lo),
            midi_hi=int(hi),
            timbres=timbres,
            duration_s=float(raw.get("duration_s", 1.0)),
            sample_rate=int(raw.get("sample_rate", SAMPLE_RATE)),
            seed=int(raw.get("seed", 0)),
            name=str(raw.get("name", Path(path).stem)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid dataset spec ({exc})") from exc


def midi_to_hz(midi: float) -> float:
    return 440.0 * 2.0 ** ((midi - 69) / 12)


def note_assignment(item_count: int, note_count: int, timbre_count: int) -> list[tuple[int, int]]:
    """(note index, timbre index) per item, balanced as described in the module docstring."""
    period = math.lcm(note_count, timbre_count)
    return [((p + p // period) % note_count, p % timbre_count) for p in range(item_count)]


def render_note(
    midi: int, timbre: Timbre, *, duration_s: float = 1.0, sample_rate: int = SAMPLE_RATE
) -> npt.NDArray[np.float64]:
    """Peak-normalized harmonic tone; harmonics at or above Nyquist are dropped."""
    f0 = midi_to_hz(midi)
    n = round(duration_s * sample_rate)
    t = np.arange(n, dtype=np.float64) / sample_rate
    x = np.zeros(n, dtype=np.float64)
    nyquist = sample_rate / 2
    for h, amp in enumerate(timbre.harmonics, start=1):
        if amp == 0 or h * f0 >= nyquist:
            continue
        x += amp * np.sin(2.0 * np.pi * h * f0 * t)
    x *= np.exp(-timbre.decay * t)
    peak = float(np.max(np.abs(x))) if n else 0.0
    if peak == 0.0:
        raise DatasetError(f"midi note {midi}: no harmonic below Nyquist ({nyquist} Hz)")
    return x * (PEAK / peak)


def generate_synth_set(
    spec: SynthSetSpec, out_dir: str | os.PathLike[str]
) -> tuple[DatasetManifest, list[Path]]:
    """Render every item of ``spec`` as a PCM16 WAV and write ``manifest.csv`` next to them."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    notes = spec.notes
    order = Rng(spec.seed).permutation(len(notes))
    notes = [notes[int(i)] for i in order]
    width = max(4, len(str(spec.item_count - 1)))
    rows: list[ManifestRow] = []
    files: list[Path] = []
    for p, (ni, ti) in enumerate(note_assignment(spec.item_count, len(notes), len(spec.timbres))):
        midi = notes[ni]
        samples = render_note(
            midi, spec.timbres[ti], duration_s=spec.duration_s, sample_rate=spec.sample_rate
        )
        item_id = f"{spec.name}_{p:0{width}d}"
        path = out / f"{item_id}.wav"
        write_wav(Waveform(samples, spec.sample_rate), path)
        rows.append(ManifestRow(item_id, path.name, midi, f"timbre{ti}"))
        files.append(path)
    manifest = DatasetManifest(rows=rows, root=out)
    write_manifest(manifest, out / "manifest.csv")
    return manifest, files


def describe(spec: SynthSetSpec) -> dict[str, Any]:
    """The spec as a ``.spec`` JSON object; ``load_synth_spec`` reads it back unchanged."""
    return {
        "item_count": spec.item_count,
        "midi_note_range": [spec.midi_lo, spec.midi_hi],
        "timbres": [{"harmonics": list(t.harmonics), "decay": t.decay} for t in spec.timbres],
        "duration_s": spec.duration_s,
        "sample_rate": spec.sample_rate,
        "seed": spec.seed,
        "name": spec.name,
    }
