"""EventCollector: bounded drop-oldest buffer drained to a sink by a background thread.

- enqueue never blocks; when full the oldest event is dropped
- the writer thread flushes in batches of at most ``batch_max``
- after ``max_consecutive_sink_failures`` failing flushes the sink is replaced
  by a no-op and a warning is issued; training continues regardless
- close() drains what is left within a deadline, then closes the sink
"""

from __future__ import annotations

import atexit
import contextlib
import threading
import time
import warnings
from collections import deque
from collections.abc import Callable, Sequence
from types import TracebackType
from typing import Any, Generic, TypeVar

T = TypeVar("T")

__all__ = ["EventCollector", "FanoutSink"]

Sink = Callable[[list[Any]], None]


def _discard(batch: list[Any]) -> None:
    del batch


class FanoutSink:
    """Forward each batch to several sinks in order; close() closes each of them."""

    def __init__(self, sinks: Sequence[Sink]) -> None:
        self.sinks = list(sinks)

    def __call__(self, batch: list[Any]) -> None:
        for sink in self.sinks:
            sink(batch)

    def close(self) -> None:
        for sink in self.sinks:
            close = getattr(sink, "close", None)
            if close is not None:
                with contextlib.suppress(Exception):
                    close()


class EventCollector(Generic[T]):
    def __init__(  # noqa: PLR0913
        self,
        sink: Callable[[list[T]], None],
        *,
        queue_size: int = 4096,
        flush_interval: float = 0.25,
        batch_max: int = 256,
        name: str = "pcinr-events",
        max_consecutive_sink_failures: int = 5,
    ) -> None:
        if queue_size <= 0:
            raise ValueError("queue_size must be > 0")
        if batch_max <= 0:
            raise ValueError("batch_max must be > 0")
        if flush_interval <= 0:
            raise ValueError("flush_interval must be > 0")
        if max_consecutive_sink_failures < 1:
            raise ValueError("max_consecutive_sink_failures must be >= 1")

        self._sink: Callable[[list[T]], None] = sink
        self._original_sink = sink
        self._buf: deque[T] = deque()
        self._max = int(queue_size)
        self._batch_max = int(batch_max)
        self._interval = float(flush_interval)
        self._max_failures = int(max_consecutive_sink_failures)

        self._lock = threading.Lock()
        self._wakeup = threading.Event()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name=name, daemon=True)

        # counters are best-effort, read without the lock
        self.enqueued = 0
        self.processed = 0
        self.dropped_oldest = 0
        self.flush_errors = 0
        self._failures = 0
        self.sink_disabled = False

        self._thread.start()
        atexit.register(self._atexit)

    def __enter__(self) -> EventCollector[T]:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()

    @property
    def queue_depth(self) -> int:
        with self._lock:
            return len(self._buf)

    def enqueue(self, item: T) -> None:
        with self._lock:
            if len(self._buf) >= self._max:
                self._buf.popleft()
                self.dropped_oldest += 1
            self._buf.append(item)
            self.enqueued += 1
        self._wakeup.set()

    def close(self, *, timeout: float = 2.0) -> None:
        if self._stop.is_set():
            return
        self._stop.set()
        self._wakeup.set()
        deadline = time.monotonic() + timeout
        self._thread.join(timeout=timeout)
        self._drain(deadline)
        close = getattr(self._original_sink, "close", None)
        if close is not None:
            with contextlib.suppress(Exception):
                close()
        with contextlib.suppress(Exception):
            atexit.unregister(self._atexit)

    def _atexit(self) -> None:
        with contextlib.suppress(Exception):
            self.close()

    def _run(self) -> None:
        while not self._stop.is_set():
            self._wakeup.wait(timeout=self._interval)
            self._wakeup.clear()
            try:
                self._flush()
                self._failures = 0
            except Exception:
                self.flush_errors += 1
                self._failures += 1
                if self._failures >= self._max_failures and not self.sink_disabled:
                    self.sink_disabled = True
                    self._sink = _discard
                    warnings.warn(
                        f"EventCollector disabled its sink after {self._failures} consecutive "
                        "failures; further events are dropped.",
                        UserWarning,
                        stacklevel=0,
                    )
                time.sleep(min(0.05, self._interval))

    def _pop_many(self, n: int) -> list[T]:
        with self._lock:
            return [self._buf.popleft() for _ in range(min(n, len(self._buf)))]

    def _flush(self) -> None:
        while batch := self._pop_many(self._batch_max):
            self._sink(batch)
            self.processed += len(batch)

    def _drain(self, deadline: float) -> None:
        while time.monotonic() < deadline:
            batch = self._pop_many(self._batch_max * 4)
            if not batch:
                return
            try:
                self._sink(batch)
                self.processed += len(batch)
            except Exception:
                self.flush_errors += 1
