"""Radix-2 real FFT and analysis windows.

- rfft(): unnormalized forward DFT of real input, zero-padded to a power of two,
  vectorized over leading axes (one call transforms every STFT frame)
- hamming_window(): symmetric Hamming window
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any

import numpy as np
import numpy.typing as npt

from .precision import real_dtype

__all__ = ["ComplexSpectrum", "hamming_window", "is_pow2", "next_pow2", "rfft"]

# bins = fft_size // 2 + 1 along the last axis
ComplexSpectrum = npt.NDArray[np.complexfloating[Any, Any]]

MAX_FFT_SIZE = 1 << 24


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return 1 << (n - 1).bit_length()


@lru_cache(maxsize=32)
def _bit_reverse(n: int) -> npt.NDArray[np.intp]:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.intp)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=64)
def _twiddles(size: int) -> npt.NDArray[np.complex128]:
    half = size // 2
    tw = np.exp(-2j * np.pi * np.arange(half) / size)
    tw.setflags(write=False)
    return tw


def _fft_pow2(x: npt.NDArray[Any]) -> npt.NDArray[Any]:
    """Iterative decimation-in-time Cooley-Tukey along the last axis."""
    n = x.shape[-1]
    lead = x.shape[:-1]
    a = x[..., _bit_reverse(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = a.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(size).astype(a.dtype, copy=False)
        a = np.concatenate((even + odd, even - odd), axis=-1).reshape(*lead, n)
        size *= 2
    return a


def rfft(signal: npt.ArrayLike, fft_size: int) -> ComplexSpectrum:
    """Forward DFT (no 1/N) of real ``signal`` zero-padded to ``fft_size``.

    Works on the last axis; returns ``fft_size // 2 + 1`` bins. Complex output
    follows the input precision (complex64 for float32, complex128 otherwise).
    """
    if not is_pow2(fft_size) or fft_size > MAX_FFT_SIZE:
        raise ValueError(f"fft_size must be a power of two, got {fft_size}")
    x = np.asarray(signal)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(real_dtype())
    if x.ndim == 0:
        x = x.reshape(1)
    length = x.shape[-1]
    if length > fft_size:
        raise ValueError(f"signal length {length} exceeds fft_size {fft_size}")
    cdtype = np.complex64 if x.dtype == np.float32 else np.complex128
    buf = np.zeros((*x.shape[:-1], fft_size), dtype=cdtype)
    buf[..., :length] = x
    return _fft_pow2(buf)[..., : fft_size // 2 + 1]


def hamming_window(length: int, dtype: npt.DTypeLike | None = None) -> npt.NDArray[Any]:
    """Symmetric Hamming window: 0.54 - 0.46 cos(2 pi n / (len - 1))."""
    if length < 2:  # noqa: PLR2004
        raise ValueError(f"window length must be >= 2, got {length}")
    n = np.arange(length, dtype=np.float64)
    w = 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (length - 1))
    return w.astype(dtype if dtype is not None else np.float64)
