from __future__ import annotations

import errno
import io
import json
import re
import threading
import time
from pathlib import Path
from typing import Any

import pytest

from pcinr.core import Emitter, EventCollector, FanoutSink
from pcinr.decorators import timed
from pcinr.exporters import ConsoleExporter, JSONLExporter
from pcinr.runtime import get_phase, get_run_id, now_ns, run_id, use_run

HEX16 = re.compile(r"^[0-9a-f]{16}$")
EXPECTED_RESULT = 42


class _Sink(list[Any]):
    def __call__(self, batch: list[Any]) -> None:
        self.extend(batch)


# ---------------------------------------------------------------- runtime


def test_now_ns_monotonic_non_decreasing() -> None:
    last = now_ns()
    for _ in range(1000):
        cur = now_ns()
        assert cur >= last
        last = cur


def test_run_id_is_deterministic_hex() -> None:
    rid = run_id(3, "abcd")
    assert HEX16.match(rid)
    assert rid == run_id(3, "abcd")
    assert rid != run_id(4, "abcd")
    assert rid != run_id(3, "abce")


def test_use_run_sets_and_resets() -> None:
    assert get_run_id() is None and get_phase() is None
    with use_run("r1", "train"):
        assert (get_run_id(), get_phase()) == ("r1", "train")
        with use_run(phase="eval"):
            assert (get_run_id(), get_phase()) == ("r1", "eval")
        assert get_phase() == "train"
    assert get_run_id() is None and get_phase() is None
    with pytest.raises(ValueError):
        with use_run(phase="lunch"):
            pass


def test_context_is_thread_local() -> None:
    seen: dict[str, Any] = {}

    def worker() -> None:
        seen["run"] = get_run_id()

    with use_run("outer", "sweep"):
        t = threading.Thread(target=worker)
        t.start()
        t.join()
    assert seen["run"] is None


# ---------------------------------------------------------------- collector


def test_non_blocking_and_drop_oldest_under_burst() -> None:
    received: list[int] = []
    lock = threading.Lock()

    def sink(batch: list[int]) -> None:
        with lock:
            received.extend(batch)

    qsize = 100
    col: EventCollector[int] = EventCollector(sink, queue_size=qsize, flush_interval=0.05, batch_max=32)
    total = qsize * 10
    for i in range(total):
        col.enqueue(i)
    time.sleep(0.3)
    col.close()
    assert col.enqueued == total
    assert col.processed + col.dropped_oldest == total
    assert len(received) == col.processed
    assert col.flush_errors == 0


def test_close_drains_remaining_items() -> None:
    received = _Sink()
    with EventCollector(received, queue_size=16, flush_interval=1.0, batch_max=8) as col:
        for i in range(25):
            col.enqueue(i)
    assert col.processed + col.dropped_oldest == col.enqueued
    assert len(received) == col.processed


def test_failing_sink_is_disabled_with_warning() -> None:
    calls = 0

    def failing(batch: list[int]) -> None:
        nonlocal calls
        calls += 1
        raise RuntimeError("exporter down")

    col: EventCollector[int] = EventCollector(
        failing, queue_size=20, flush_interval=0.03, batch_max=5, max_consecutive_sink_failures=3
    )
    with pytest.warns(UserWarning, match="disabled its sink"):
        for i in range(30):
            col.enqueue(i)
            time.sleep(0.01)
        time.sleep(0.25)
    col.close()
    assert col.sink_disabled
    assert col.flush_errors >= 3


def test_graceful_shutdown_respects_deadline() -> None:
    release = threading.Event()

    def blocking(batch: list[int]) -> None:
        release.wait(timeout=5.0)

    col: EventCollector[int] = EventCollector(blocking, queue_size=50, flush_interval=10.0, batch_max=10)
    for i in range(25):
        col.enqueue(i)
    t0 = time.monotonic()
    col.close(timeout=0.15)
    assert time.monotonic() - t0 < 0.5
    release.set()


def test_collector_argument_validation() -> None:
    for kwargs in ({"queue_size": 0}, {"batch_max": 0}, {"flush_interval": 0.0}, {"max_consecutive_sink_failures": 0}):
        with pytest.raises(ValueError):
            EventCollector(_Sink(), **kwargs)


def test_fanout_feeds_every_sink_and_closes_them() -> None:
    a, b = _Sink(), _Sink()
    closed: list[str] = []

    class Closing(_Sink):
        def close(self) -> None:
            closed.append("c")

    fan = FanoutSink([a, b, Closing()])
    fan([1, 2])
    fan.close()
    assert a == b == [1, 2]
    assert closed == ["c"]


# ---------------------------------------------------------------- emitter + decorator


def test_emitter_event_kinds_carry_run_context() -> None:
    events = _Sink()
    col = EventCollector(events, queue_size=64, flush_interval=0.01, batch_max=16)
    em = Emitter(col)
    with use_run("rid", "train"):
        em.emit_run("start", arch="pcinr")
        em.emit_epoch(1, {"mse": 0.5, "deriv": 0.1, "wr": 0.0, "total": 0.6}, 1000)
        em.emit_ckpt("out/checkpoint.pcnr", 1)
        em.emit_rung(0, 3, 3000.0, 30.0, 0.01)
        em.emit_eval("item0", {"mse": 0.1})
        em.emit_fn("work", 5)
    col.close()
    assert [e["kind"] for e in events] == ["RUN", "EPOCH", "CKPT", "RUNG", "EVAL", "FN"]
    assert all(e["run_id"] == "rid" and e["phase"] == "train" for e in events)
    assert events[1]["total"] == 0.6 and events[1]["epoch"] == 1
    assert all(isinstance(e["ts_ns"], int) for e in events)


def test_emitter_without_collector_is_a_no_op() -> None:
    Emitter(None).emit_run("start")


def test_timed_records_duration_and_errors() -> None:
    events = _Sink()
    col = EventCollector(events, queue_size=64, flush_interval=0.01, batch_max=16)
    em = Emitter(col)

    @timed(em)
    def work() -> int:
        return EXPECTED_RESULT

    @timed(em, "explode")
    def fail() -> None:
        raise RuntimeError("nope")

    assert work() == EXPECTED_RESULT
    with pytest.raises(RuntimeError):
        fail()
    col.close()
    fns = {e["fn"]: e for e in events if e["kind"] == "FN"}
    assert fns["explode"]["error"] is True
    ok = next(e for name, e in fns.items() if name.endswith("work"))
    assert ok["error"] is False and ok["dur_ns"] >= 0


# ---------------------------------------------------------------- exporters


def test_jsonl_exporter_writes_one_object_per_line(tmp_path: Path) -> None:
    exp = JSONLExporter(tmp_path / "events.jsonl")
    col = EventCollector(exp, queue_size=64, flush_interval=0.01, batch_max=8)
    for i in range(20):
        col.enqueue({"i": i, "snr": float("inf"), "u": "ユニコード"})
    col.close()
    lines = (tmp_path / "events.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 20
    first = json.loads(lines[0])
    assert first == {"i": 0, "snr": "inf", "u": "ユニコード"}


def test_jsonl_appends_across_instances(tmp_path: Path) -> None:
    for k in range(2):
        exp = JSONLExporter(tmp_path / "e.jsonl")
        exp([{"k": k}])
        exp.close()
    assert len((tmp_path / "e.jsonl").read_text().splitlines()) == 2


class _FullDisk(io.RawIOBase):
    def writable(self) -> bool:
        return True

    def write(self, data: Any) -> int:
        raise OSError(errno.ENOSPC, "No space left on device")

    def fileno(self) -> int:
        raise OSError("no descriptor")


def test_jsonl_disk_full_turns_into_noop(tmp_path: Path) -> None:
    exp = JSONLExporter(tmp_path / "e.jsonl")
    assert exp._fh is not None
    exp._fh.close()
    exp._fh = _FullDisk()  # type: ignore[assignment]
    with pytest.warns(UserWarning, match="disk full"):
        exp([{"a": 1}])
    assert exp.disk_full
    exp([{"a": 2}])  # silently dropped
    exp._fh = None


def test_console_exporter_compact_and_pretty() -> None:
    buf = io.StringIO()
    ConsoleExporter(stream=buf)([{"kind": "EPOCH", "epoch": 1}])
    assert json.loads(buf.getvalue()) == {"kind": "EPOCH", "epoch": 1}
    assert buf.getvalue().count("\n") == 1

    pretty = io.StringIO()
    ConsoleExporter(stream=pretty, pretty=True)([{"kind": "RUN"}])
    assert "\n  " in pretty.getvalue()
