"""Run identity, clock and ContextVar-scoped run context for telemetry events."""

from .clock import now_ns
from .context import get_phase, get_run_id, use_run
from .ids import run_id

__all__ = ["get_phase", "get_run_id", "now_ns", "run_id", "use_run"]
