"""Bundled dataset specs (JSON): ``keyboard_like.spec`` and ``diverse_like.spec``."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

__all__ = ["BUNDLED", "preset_path"]

BUNDLED = ("keyboard_like", "diverse_like")


def preset_path(name: str) -> Path:
    stem = name.removesuffix(".spec")
    if stem not in BUNDLED:
        raise KeyError(f"unknown bundled dataset spec {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files(__package__).joinpath(f"{stem}.spec")))
