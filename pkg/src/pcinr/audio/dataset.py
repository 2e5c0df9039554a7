"""Dataset manifests and loading.

Manifest CSV (UTF-8, LF): ``item_id,file_path,midi_note,instrument``. Relative
file paths resolve against the manifest's directory. Loaded items are brought
to a common length (truncate or zero-pad, onset kept) and hashed so
checkpoints can tell which dataset they were trained on.
"""

from __future__ import annotations

import csv
import hashlib
import os
import warnings
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import AudioFormatError, DatasetError

from .wav import SAMPLE_RATE, Waveform, read_wav

__all__ = [
    "MANIFEST_HEADER",
    "Dataset",
    "DatasetManifest",
    "ManifestRow",
    "dataset_hash",
    "fit_length",
    "load_dataset",
    "write_manifest",
]

MANIFEST_HEADER = ("item_id", "file_path", "midi_note", "instrument")
DEFAULT_SAMPLE_COUNT = 16000


@dataclass(frozen=True)
class ManifestRow:
    item_id: str
    file_path: str
    midi_note: int
    instrument: str


@dataclass
class DatasetManifest:
    rows: list[ManifestRow]
    root: Path = field(default_factory=Path)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for row in self.rows:
            if row.item_id in seen:
                raise DatasetError(f"duplicate item_id {row.item_id!r} in manifest")
            seen.add(row.item_id)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ManifestRow]:
        return iter(self.rows)

    def resolve(self, row: ManifestRow) -> Path:
        p = Path(row.file_path)
        return p if p.is_absolute() else self.root / p

    @classmethod
    def read(cls, path: str | os.PathLike[str]) -> DatasetManifest:
        mpath = Path(path)
        try:
            with mpath.open(newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
                    raise DatasetError(
                        f"{mpath}: manifest header must be {','.join(MANIFEST_HEADER)}, got {header}"
                    )
                rows = []
                for lineno, rec in enumerate(reader, start=2):
                    if not rec:
                        continue
                    if len(rec) != len(MANIFEST_HEADER):
                        raise DatasetError(f"{mpath}:{lineno}: expected 4 columns, got {len(rec)}")
                    try:
                        note = int(rec[2])
                    except ValueError:
                        raise DatasetError(f"{mpath}:{lineno}: midi_note {rec[2]!r} is not an integer") from None
                    rows.append(ManifestRow(rec[0], rec[1], note, rec[3]))
        except FileNotFoundError:
            raise DatasetError(f"manifest not found: {mpath}") from None
        if not rows:
            raise DatasetError(f"{mpath}: manifest has no items")
        return cls(rows=rows, root=mpath.parent)


def write_manifest(manifest: DatasetManifest, path: str | os.PathLike[str]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for row in manifest.rows:
            writer.writerow([row.item_id, row.file_path, row.midi_note, row.instrument])


def dataset_hash(item_ids: Sequence[str], samples: Sequence[npt.NDArray[Any]]) -> str:
    """Order-fixed BLAKE2b over item ids and float32 little-endian sample bytes."""
    h = hashlib.blake2b(digest_size=16)
    for item_id, x in zip(item_ids, samples):
        h.update(item_id.encode("utf-8"))
        h.update(b"\0")
        h.update(np.ascontiguousarray(x, dtype="<f4").tobytes())
    return h.hexdigest()


@dataclass
class Dataset:
    manifest: DatasetManifest
    waveforms: list[Waveform]
    # original length of items that were truncated or zero-padded
    adjusted: dict[str, int]
    content_hash: str

    def __len__(self) -> int:
        return len(self.waveforms)

    @property
    def item_ids(self) -> list[str]:
        return [r.item_id for r in self.manifest.rows]

    @property
    def sample_count(self) -> int:
        return len(self.waveforms[0])

    @property
    def sample_rate(self) -> int:
        return self.waveforms[0].sample_rate_hz

    def index_of(self, item: str | int) -> int:
        if isinstance(item, int):
            if not 0 <= item < len(self):
                raise DatasetError(f"item index {item} out of range [0, {len(self)})")
            return item
        try:
            return self.item_ids.index(item)
        except ValueError:
            raise DatasetError(f"unknown item_id {item!r}") from None

    def targets(self, dtype: npt.DTypeLike = np.float64) -> npt.NDArray[Any]:
        """(N, M) matrix of all items."""
        return np.stack([w.samples for w in self.waveforms]).astype(dtype)


def fit_length(x: npt.NDArray[Any], length: int) -> npt.NDArray[Any]:
    """Keep the first ``length`` samples, zero-padding at the end when shorter."""
    if len(x) >= length:
        return x[:length]
    return np.concatenate((x, np.zeros(length - len(x), dtype=x.dtype)))


def load_dataset(
    manifest_path: str | os.PathLike[str],
    *,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    sample_rate: int = SAMPLE_RATE,
    allow_rate_mismatch: bool = False,
) -> Dataset:
    """Load every manifest item in order, normalized to ``sample_count`` samples."""
    manifest = DatasetManifest.read(manifest_path)
    waveforms: list[Waveform] = []
    adjusted: dict[str, int] = {}
    for row in manifest:
        path = manifest.resolve(row)
        if not path.is_file():
            raise DatasetError(f"item {row.item_id!r}: file not found: {path}")
        try:
            wav = read_wav(path)
        except AudioFormatError as exc:
            raise DatasetError(f"item {row.item_id!r}: {exc}") from exc
        if wav.sample_rate_hz != sample_rate and not allow_rate_mismatch:
            raise DatasetError(
                f"item {row.item_id!r}: sample rate {wav.sample_rate_hz} Hz, expected {sample_rate} Hz"
            )
        if len(wav) != sample_count:
            adjusted[row.item_id] = len(wav)
        waveforms.append(Waveform(fit_length(wav.samples, sample_count), sample_rate))
    if adjusted:
        warnings.warn(
            f"{len(adjusted)} item(s) truncated or zero-padded to {sample_count} samples: "
            + ", ".join(f"{k} ({v})" for k, v in sorted(adjusted.items())),
            UserWarning,
            stacklevel=2,
        )
    content_hash = dataset_hash([r.item_id for r in manifest], [w.samples for w in waveforms])
    return Dataset(manifest=manifest, waveforms=waveforms, adjusted=adjusted, content_hash=content_hash)
