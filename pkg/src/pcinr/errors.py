"""Exception hierarchy shared by every pcinr module.

Each error also derives from the closest builtin so callers can catch either
the pcinr type or the generic one (``ValueError``, ``OSError``...).
"""

from __future__ import annotations

__all__ = [
    "AudioFormatError",
    "CheckpointError",
    "ConfigError",
    "DatasetError",
    "NonFiniteError",
    "PcinrError",
    "ShapeError",
    "UnsupportedArchError",
]


class PcinrError(Exception):
    """Base class for all pcinr errors."""


class ShapeError(PcinrError, ValueError):
    """Dimension or shape mismatch between arrays, caches or parameters."""


class NonFiniteError(PcinrError, FloatingPointError):
    """A NaN or Inf showed up where only finite values are allowed.

    ``context`` carries where it happened (layer index, epoch, batch...).
    """

    def __init__(self, message: str, **context: object) -> None:
        self.context = dict(context)
        if context:
            detail = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class CheckpointError(PcinrError, ValueError):
    """Malformed, truncated or mismatching checkpoint / latent file."""


class AudioFormatError(PcinrError, ValueError):
    """WAV file that is not RIFF PCM16 mono."""


class DatasetError(PcinrError, ValueError):
    """Manifest rows, files or sample rates that cannot be loaded."""


class ConfigError(PcinrError, ValueError):
    """Invalid or unknown configuration keys/values."""


class UnsupportedArchError(PcinrError, ValueError):
    """Operation not available for the checkpoint's architecture."""
