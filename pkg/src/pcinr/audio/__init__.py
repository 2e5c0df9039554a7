"""Audio I/O: PCM16 WAV codec, dataset manifests and the synthetic tone-set generator."""

from .dataset import (
    Dataset,
    DatasetManifest,
    ManifestRow,
    dataset_hash,
    fit_length,
    load_dataset,
    write_manifest,
)
from .synth import SynthSetSpec, Timbre, describe, generate_synth_set, load_synth_spec, midi_to_hz, render_note
from .wav import SAMPLE_RATE, Waveform, read_wav, write_wav

__all__ = [
    "SAMPLE_RATE",
    "Dataset",
    "DatasetManifest",
    "ManifestRow",
    "SynthSetSpec",
    "Timbre",
    "Waveform",
    "dataset_hash",
    "describe",
    "fit_length",
    "generate_synth_set",
    "load_dataset",
    "load_synth_spec",
    "midi_to_hz",
    "read_wav",
    "render_note",
    "write_manifest",
    "write_wav",
]
