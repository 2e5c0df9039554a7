"""Append-only JSON lines exporter for a run's ``events.jsonl``.

Collector-ready via ``__call__(batch)``. Thread-safe. On ENOSPC/EDQUOT the
exporter turns into a no-op and warns once; any other OSError propagates to
the collector, which counts it as a sink failure.
"""

from __future__ import annotations

import errno
import os
import threading
import warnings
from collections.abc import Iterable
from pathlib import Path
from typing import Any, BinaryIO

from ._encoding import dumps

__all__ = ["JSONLExporter"]


class JSONLExporter:
    def __init__(self, path: str | os.PathLike[str]) -> None:
        self.path = Path(path).resolve()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._fh: BinaryIO | None = self.path.open("ab", buffering=0)
        self.bytes_written = 0
        self.disk_full = False

    def __call__(self, batch: Iterable[dict[str, Any]]) -> None:
        self.write_batch(batch)

    def write_batch(self, batch: Iterable[dict[str, Any]]) -> None:
        with self._lock:
            if self.disk_full or self._fh is None:
                return
            try:
                data = b"".join(dumps(obj) + b"\n" for obj in batch)
                self._fh.write(data)
                self.bytes_written += len(data)
            except OSError as e:
                if e.errno in (errno.ENOSPC, errno.EDQUOT):
                    self.disk_full = True
                    warnings.warn(
                        f"JSONLExporter: disk full writing {self.path}; telemetry is off for this run.",
                        UserWarning,
                        stacklevel=0,
                    )
                else:
                    raise

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()
                self._fh = None
