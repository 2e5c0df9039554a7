"""Emitter: builds small event dicts and enqueues them.

Kinds: RUN (start/end), EPOCH, CKPT, RUNG, EVAL, FN. Every event carries
``ts_ns``, ``run_id``, ``phase`` and ``kind``.
"""

from __future__ import annotations

from typing import Any, Protocol

from pcinr.runtime import get_phase, get_run_id, now_ns

__all__ = ["Emitter"]


class _Queue(Protocol):
    def enqueue(self, item: dict[str, Any]) -> None: ...


class Emitter:
    def __init__(self, collector: _Queue | None) -> None:
        # None: events are built and discarded (telemetry off)
        self._collector = collector

    def _base(self, kind: str) -> dict[str, Any]:
        return {"ts_ns": now_ns(), "run_id": get_run_id(), "phase": get_phase(), "kind": kind}

    def _put(self, ev: dict[str, Any]) -> None:
        if self._collector is not None:
            self._collector.enqueue(ev)

    def emit_run(self, status: str, **fields: Any) -> None:
        ev = self._base("RUN")
        ev.update(status=status, **fields)
        self._put(ev)

    def emit_epoch(self, epoch: int, loss: dict[str, float], dur_ns: int) -> None:
        ev = self._base("EPOCH")
        ev.update(epoch=epoch, dur_ns=dur_ns, **loss)
        self._put(ev)

    def emit_ckpt(self, path: str, epoch: int) -> None:
        ev = self._base("CKPT")
        ev.update(path=path, epoch=epoch)
        self._put(ev)

    def emit_rung(
        self, rung: int, candidate: int, omega0_first: float, omega0_hidden: float, mse: float
    ) -> None:
        ev = self._base("RUNG")
        ev.update(rung=rung, candidate=candidate, omega0_first=omega0_first, omega0_hidden=omega0_hidden, mse=mse)
        self._put(ev)

    def emit_eval(self, item: str, metrics: dict[str, float]) -> None:
        ev = self._base("EVAL")
        ev.update(item=item, **metrics)
        self._put(ev)

    def emit_fn(self, name: str, dur_ns: int, error: bool = False) -> None:
        ev = self._base("FN")
        ev.update(fn=name, dur_ns=dur_ns, error=error)
        self._put(ev)
