"""Time-domain metrics. Inputs are converted to float64 before reducing."""

from __future__ import annotations

import math
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import ShapeError

__all__ = ["derivative_mse", "mse", "snr_db"]


def _pair(a: npt.ArrayLike, b: npt.ArrayLike) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    x = np.asarray(getattr(a, "samples", a), dtype=np.float64).reshape(-1)
    y = np.asarray(getattr(b, "samples", b), dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.size == 0:
        raise ShapeError("empty signals")
    return x, y


def mse(a: npt.ArrayLike | Any, b: npt.ArrayLike | Any) -> float:
    x, y = _pair(a, b)
    d = x - y
    return float(np.dot(d, d) / d.size)


def snr_db(ref: npt.ArrayLike | Any, est: npt.ArrayLike | Any) -> float:
    """10 log10(signal energy / error energy); ``math.inf`` for an exact match."""
    r, e = _pair(ref, est)
    signal = float(np.dot(r, r))
    if signal == 0.0:
        raise ValueError("SNR undefined for an all-zero reference")
    d = r - e
    noise = float(np.dot(d, d))
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / noise)


def derivative_mse(a: npt.ArrayLike | Any, b: npt.ArrayLike | Any) -> float:
    """MSE between forward differences (per-sample units)."""
    x, y = _pair(a, b)
    if x.size < 2:  # noqa: PLR2004
        raise ShapeError("derivative_mse needs at least two samples")
    d = np.diff(x) - np.diff(y)
    return float(np.dot(d, d) / d.size)
