"""Per-item evaluation of trained checkpoints and the CSV / summary report.

A single run aggregates mean and (population) standard deviation across
items. Several runs aggregate the per-run means: the reported mean is the
mean of run means and the deviation is taken across runs.
"""

from __future__ import annotations

import math
import os
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from pcinr.audio.dataset import Dataset
from pcinr.errors import DatasetError
from pcinr.numerics import Rng
from pcinr.training.state import TrainState
from pcinr.training.synthesis import check_compatible, reconstruct

from .pointwise import derivative_mse, mse, snr_db
from .spectral import lsd, multi_stft_mse

__all__ = [
    "CSV_HEADER",
    "METRICS",
    "EvalReport",
    "ItemMetrics",
    "evaluate_checkpoint",
    "evaluate_runs",
    "item_metrics",
    "reference_metrics",
    "write_report",
]

CSV_HEADER = ("item_id", "mse", "snr_db", "lsd", "multi_stft_mse")
METRICS = ("mse", "snr_db", "lsd", "multi_stft_mse", "derivative_mse")
NOISE_SEED = 0


@dataclass(frozen=True)
class ItemMetrics:
    item_id: str
    mse: float
    snr_db: float
    lsd: float
    multi_stft_mse: float
    derivative_mse: float

    def value(self, metric: str) -> float:
        return float(getattr(self, metric))


@dataclass
class EvalReport:
    rows: list[ItemMetrics]
    runs: int = 1
    dataset_hash: str = ""
    references: dict[str, dict[str, float]] = field(default_factory=dict)

    def _run_means(self, metric: str) -> list[float]:
        per_run = len(self.rows) // self.runs
        return [
            float(np.mean([r.value(metric) for r in self.rows[k * per_run : (k + 1) * per_run]]))
            for k in range(self.runs)
        ]

    def mean(self, metric: str) -> float:
        return float(np.mean(self._run_means(metric)))

    def std(self, metric: str) -> float:
        values = self._run_means(metric) if self.runs > 1 else [r.value(metric) for r in self.rows]
        if any(math.isinf(v) for v in values):
            return math.nan
        return float(np.std(values))

    def summary(self) -> dict[str, dict[str, float]]:
        return {m: {"mean": self.mean(m), "std": self.std(m)} for m in METRICS}


def item_metrics(item_id: str, ref: Any, est: Any) -> ItemMetrics:
    return ItemMetrics(
        item_id=item_id,
        mse=mse(ref, est),
        snr_db=snr_db(ref, est),
        lsd=lsd(ref, est),
        multi_stft_mse=multi_stft_mse(ref, est),
        derivative_mse=derivative_mse(ref, est),
    )


def reference_metrics(dataset: Dataset) -> dict[str, dict[str, float]]:
    """Mean metrics of an all-zero estimate and of unit Gaussian noise against every item."""
    out: dict[str, dict[str, float]] = {}
    silence = [item_metrics(i, w.samples, np.zeros_like(w.samples)) for i, w in zip(dataset.item_ids, dataset.waveforms)]
    rng = Rng(NOISE_SEED)
    noise = [
        item_metrics(i, w.samples, rng.child(k).normal(0.0, 1.0, len(w), dtype=np.float64))
        for k, (i, w) in enumerate(zip(dataset.item_ids, dataset.waveforms))
    ]
    for name, rows in (("silence", silence), ("noise", noise)):
        out[name] = {m: float(np.mean([r.value(m) for r in rows])) for m in METRICS}
    return out


def _check_hash(expected: str, dataset: Dataset, strict: bool) -> None:
    if expected and expected != dataset.content_hash:
        msg = f"checkpoint dataset hash {expected} does not match {dataset.content_hash}"
        if strict:
            raise DatasetError(msg)
        warnings.warn(msg, UserWarning, stacklevel=3)


def _score_run(
    state: TrainState, dataset: Dataset, prefix: str, on_item: Callable[[ItemMetrics], None] | None
) -> list[ItemMetrics]:
    if len(state.latents) != len(dataset):
        raise DatasetError(f"checkpoint has {len(state.latents)} latents, dataset {len(dataset)} items")
    rows = []
    for k, (item_id, wav) in enumerate(zip(dataset.item_ids, dataset.waveforms)):
        est = reconstruct(state, k)
        row = item_metrics(f"{prefix}{item_id}", wav.samples, est.samples)
        rows.append(row)
        if on_item is not None:
            on_item(row)
    return rows


def evaluate_checkpoint(
    state: TrainState,
    dataset: Dataset,
    *,
    strict: bool = False,
    references: bool = True,
    on_item: Callable[[ItemMetrics], None] | None = None,
) -> EvalReport:
    """Synthesize every item on its native grid and score it against the dataset."""
    _check_hash(state.dataset_hash, dataset, strict)
    rows = _score_run(state, dataset, "", on_item)
    refs = reference_metrics(dataset) if references else {}
    return EvalReport(rows=rows, runs=1, dataset_hash=dataset.content_hash, references=refs)


def evaluate_runs(
    states: Sequence[TrainState],
    dataset: Dataset,
    *,
    strict: bool = False,
    references: bool = True,
    on_item: Callable[[ItemMetrics], None] | None = None,
) -> EvalReport:
    """Score several independently trained runs; rows are prefixed ``r<k>:``."""
    if len(states) == 1:
        return evaluate_checkpoint(states[0], dataset, strict=strict, references=references, on_item=on_item)
    check_compatible(states)
    rows: list[ItemMetrics] = []
    for k, st in enumerate(states):
        _check_hash(st.dataset_hash, dataset, strict)
        rows.extend(_score_run(st, dataset, f"r{k}:", on_item))
    refs = reference_metrics(dataset) if references else {}
    return EvalReport(rows=rows, runs=len(states), dataset_hash=dataset.content_hash, references=refs)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_report(report: EvalReport, csv_path: str | os.PathLike[str], summary_path: str | os.PathLike[str]) -> None:
    lines = [",".join(CSV_HEADER)]
    for r in report.rows:
        lines.append(",".join([r.item_id, *(_fmt(getattr(r, m)) for m in CSV_HEADER[1:])]))
    Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    out = [
        "pcinr evaluation summary",
        f"dataset_hash: {report.dataset_hash}",
        f"runs: {report.runs}",
        f"items: {len(report.rows) // report.runs}",
        "std: " + ("across run means" if report.runs > 1 else "across items"),
        "",
        f"{'metric':<16}{'mean':>16}{'std':>16}",
    ]
    for m, agg in report.summary().items():
        out.append(f"{m:<16}{agg['mean']:>16.6g}{agg['std']:>16.6g}")
    for name, values in report.references.items():
        out.append("")
        out.append(f"reference {name}: " + ", ".join(f"{m}={values[m]:.6g}" for m in METRICS))
    out.append("")
    out.append("note: CDPAM column omitted (needs a pretrained perceptual model)")
    Path(summary_path).write_text("\n".join(out) + "\n", encoding="utf-8")

