from __future__ import annotations

import numpy as np
import pytest

pytest.importorskip("pytest_benchmark")

from pcinr.core import Emitter, EventCollector
from pcinr.numerics import rfft

MAX_EMIT_MEAN_S = 0.0005
MAX_STFT_MEAN_S = 0.25


def test_emitter_emit_epoch_microbench(benchmark) -> None:  # type: ignore[no-untyped-def]
    def sink(_batch: list[dict[str, object]]) -> None:
        return

    collector: EventCollector[dict[str, object]] = EventCollector(
        sink, queue_size=8192, flush_interval=10.0, batch_max=1024
    )
    emitter = Emitter(collector)
    loss = {"mse": 0.01, "deriv": 0.2, "wr": 0.0, "total": 0.21}

    def emit_one() -> None:
        emitter.emit_epoch(1, loss, 123_456)

    benchmark(emit_one)

    # conservative for shared CI runners
    assert benchmark.stats.stats.mean < MAX_EMIT_MEAN_S
    collector.close()


def test_rfft_stft_frames_microbench(benchmark) -> None:  # type: ignore[no-untyped-def]
    frames = np.random.default_rng(0).standard_normal((60, 1024))

    spec = benchmark(rfft, frames, 1024)

    assert spec.shape == (60, 513)
    assert benchmark.stats.stats.mean < MAX_STFT_MEAN_S
