"""Real dtype selection via ContextVar.

- 32-bit by default (training throughput)
- ``use_precision(np.float64)`` for gradient-check oracles
"""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import NonFiniteError

__all__ = ["as_real", "check_finite", "real_dtype", "use_precision"]

_ALLOWED = (np.dtype(np.float32), np.dtype(np.float64))
_DTYPE: ContextVar[np.dtype[Any]] = ContextVar("pcinr_real_dtype", default=np.dtype(np.float32))


def real_dtype() -> np.dtype[Any]:
    return _DTYPE.get()


@contextmanager
def use_precision(dtype: npt.DTypeLike) -> Iterator[np.dtype[Any]]:
    """Temporarily switch the default real dtype (float32 or float64)."""
    dt = np.dtype(dtype)
    if dt not in _ALLOWED:
        raise ValueError(f"precision must be float32 or float64, got {dt}")
    token = _DTYPE.set(dt)
    try:
        yield dt
    finally:
        _DTYPE.reset(token)


def as_real(values: npt.ArrayLike, dtype: npt.DTypeLike | None = None) -> npt.NDArray[Any]:
    """Return a C-contiguous array in the active (or given) real dtype."""
    return np.ascontiguousarray(values, dtype=np.dtype(dtype) if dtype is not None else real_dtype())


def check_finite(name: str, values: npt.NDArray[Any], **context: object) -> None:
    """Raise NonFiniteError if ``values`` holds NaN or Inf."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"non-finite values in {name}", **context)
