"""Dense numeric kernel: precision context, seeded RNG, radix-2 FFT and windows.

Public API surface exported here for convenience.
"""

from .fft import ComplexSpectrum, hamming_window, is_pow2, next_pow2, rfft
from .precision import as_real, check_finite, real_dtype, use_precision
from .rng import Rng

__all__ = [
    "ComplexSpectrum",
    "Rng",
    "as_real",
    "check_finite",
    "hamming_window",
    "is_pow2",
    "next_pow2",
    "real_dtype",
    "rfft",
    "use_precision",
]
