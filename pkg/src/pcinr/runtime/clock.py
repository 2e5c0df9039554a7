"""Monotonic nanosecond clock for durations (epoch, checkpoint, function timings)."""

from __future__ import annotations

import time

__all__ = ["now_ns"]


def now_ns() -> int:
    # perf_counter_ns: monotonic, unaffected by wall-clock adjustments
    return time.perf_counter_ns()
