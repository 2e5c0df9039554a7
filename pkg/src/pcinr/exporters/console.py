"""Console exporter: one compact JSON object per line on stderr (``--verbose``)."""

from __future__ import annotations

import sys
from collections.abc import Iterable
from typing import Any, TextIO

from ._encoding import dumps

__all__ = ["ConsoleExporter"]


class ConsoleExporter:
    def __init__(self, *, stream: TextIO | None = None, pretty: bool = False) -> None:
        self.stream = stream
        self.pretty = pretty

    def __call__(self, batch: Iterable[dict[str, Any]]) -> None:
        out = self.stream if self.stream is not None else sys.stderr
        for obj in batch:
            out.write(dumps(obj, pretty=self.pretty).decode("utf-8"))
            out.write("\n")
        out.flush()
