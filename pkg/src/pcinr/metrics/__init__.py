"""Reconstruction metrics and evaluation reports."""

from .pointwise import derivative_mse, mse, snr_db
from .report import EvalReport, ItemMetrics, evaluate_checkpoint, evaluate_runs, write_report
from .spectral import (
    MULTI_STFT_WINDOWS,
    Spectrogram,
    SpectrogramStack,
    lsd,
    multi_stft_mse,
    spectrogram_stack,
    stft_mag,
)

__all__ = [
    "MULTI_STFT_WINDOWS",
    "EvalReport",
    "ItemMetrics",
    "Spectrogram",
    "SpectrogramStack",
    "derivative_mse",
    "evaluate_checkpoint",
    "evaluate_runs",
    "lsd",
    "mse",
    "multi_stft_mse",
    "snr_db",
    "spectrogram_stack",
    "stft_mag",
    "write_report",
]
