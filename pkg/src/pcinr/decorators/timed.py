"""@timed(emitter): emit an FN event (name, duration, error flag) per call.

Exceptions are recorded and re-raised unchanged.

    @timed(emitter)
    def run_sweep(...): ...
"""

from __future__ import annotations

import functools
from typing import Callable, TypeVar

from typing_extensions import ParamSpec

from pcinr.core.emitter import Emitter
from pcinr.runtime import now_ns

P = ParamSpec("P")
T = TypeVar("T")

__all__ = ["timed"]


def timed(emitter: Emitter, name: str | None = None) -> Callable[[Callable[P, T]], Callable[P, T]]:
    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        label = name or getattr(func, "__qualname__", getattr(func, "__name__", "<fn>"))

        @functools.wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            start = now_ns()
            failed = False
            try:
                return func(*args, **kwargs)
            except BaseException:
                failed = True
                raise
            finally:
                emitter.emit_fn(label, dur_ns=now_ns() - start, error=failed)

        return wrapper

    return decorator
