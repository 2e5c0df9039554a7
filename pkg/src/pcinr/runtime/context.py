"""Run id and phase carried by every telemetry event (ContextVar, no locks)."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar

__all__ = ["PHASES", "get_phase", "get_run_id", "use_run"]

PHASES = ("train", "sweep", "eval", "encode", "synth", "gen-dataset")

_RUN_ID: ContextVar[str | None] = ContextVar("pcinr_run_id", default=None)
_PHASE: ContextVar[str | None] = ContextVar("pcinr_phase", default=None)


def get_run_id() -> str | None:
    return _RUN_ID.get()


def get_phase() -> str | None:
    return _PHASE.get()


@contextmanager
def use_run(run_id: str | None = None, phase: str | None = None) -> Iterator[None]:
    """Set run id and/or phase for the block; None leaves a value unchanged."""
    if phase is not None and phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    rtoken = _RUN_ID.set(run_id) if run_id is not None else None
    ptoken = _PHASE.set(phase) if phase is not None else None
    try:
        yield
    finally:
        if ptoken is not None:
            _PHASE.reset(ptoken)
        if rtoken is not None:
            _RUN_ID.reset(rtoken)
