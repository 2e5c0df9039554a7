"""STFT magnitudes, multi-resolution STFT MSE and log-spectral distance.

Frames start at 0, ``hop`` apart, no centering or reflection padding; each
Hamming-windowed frame is zero-padded to the next power of two.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import ShapeError
from pcinr.numerics import hamming_window, next_pow2, rfft

__all__ = [
    "LSD_HOP",
    "LSD_WINDOW",
    "MULTI_STFT_WINDOWS",
    "Spectrogram",
    "SpectrogramStack",
    "lsd",
    "multi_stft_mse",
    "spectrogram_stack",
    "stft_mag",
]

MULTI_STFT_WINDOWS = (400, 800, 1600, 3200)
LSD_WINDOW = 1024
LSD_HOP = 256
POWER_FLOOR = 1e-10

Array = npt.NDArray[Any]


@dataclass(frozen=True)
class Spectrogram:
    magnitudes: npt.NDArray[np.float64]  # (frames, fft_size // 2 + 1)
    window: int
    hop: int
    fft_size: int

    @property
    def frames(self) -> int:
        return int(self.magnitudes.shape[0])


# window length -> spectrogram
SpectrogramStack = dict[int, Spectrogram]


def _signal(x: Any) -> npt.NDArray[np.float64]:
    return np.asarray(getattr(x, "samples", x), dtype=np.float64).reshape(-1)


def _frames(x: npt.NDArray[np.float64], window: int, hop: int) -> npt.NDArray[np.float64]:
    if window < 2 or hop < 1:  # noqa: PLR2004
        raise ValueError(f"need window >= 2 and hop >= 1, got {window}/{hop}")
    if x.shape[0] < window:
        raise ShapeError(f"signal of {x.shape[0]} samples is shorter than one window ({window})")
    return np.lib.stride_tricks.sliding_window_view(x, window)[::hop]


def stft_mag(signal: npt.ArrayLike | Any, window_len: int, hop: int) -> Spectrogram:
    x = _signal(signal)
    frames = _frames(x, window_len, hop) * hamming_window(window_len)
    fft_size = next_pow2(window_len)
    return Spectrogram(np.abs(rfft(frames, fft_size)), window_len, hop, fft_size)


def spectrogram_stack(
    signal: npt.ArrayLike | Any, windows: Sequence[int] = MULTI_STFT_WINDOWS
) -> SpectrogramStack:
    return {w: stft_mag(signal, w, w // 4) for w in windows}


def _check_pair(a: Any, b: Any) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    ra, rb = getattr(a, "sample_rate_hz", None), getattr(b, "sample_rate_hz", None)
    if ra is not None and rb is not None and ra != rb:
        raise ShapeError(f"sample rate mismatch: {ra} vs {rb}")
    x, y = _signal(a), _signal(b)
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def multi_stft_mse(
    a: npt.ArrayLike | Any, b: npt.ArrayLike | Any, windows: Sequence[int] = MULTI_STFT_WINDOWS
) -> float:
    """Mean over window sizes of the mean squared STFT-magnitude difference (hop = window / 4)."""
    x, y = _check_pair(a, b)
    sa, sb = spectrogram_stack(x, windows), spectrogram_stack(y, windows)
    total = 0.0
    for w in windows:
        d = sa[w].magnitudes - sb[w].magnitudes
        total += float(np.mean(d * d))
    return total / len(windows)


def lsd(
    ref: npt.ArrayLike | Any, est: npt.ArrayLike | Any, *, window: int = LSD_WINDOW, hop: int = LSD_HOP
) -> float:
    """Frame mean of the RMS (over bins) of 10 log10(P_ref / P_est)."""
    x, y = _check_pair(ref, est)
    p_ref = np.maximum(stft_mag(x, window, hop).magnitudes ** 2, POWER_FLOOR)
    p_est = np.maximum(stft_mag(y, window, hop).magnitudes ** 2, POWER_FLOOR)
    ratio_db = 10.0 * np.log10(p_ref / p_est)
    return float(np.mean(np.sqrt(np.mean(ratio_db**2, axis=1))))
