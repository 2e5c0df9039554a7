"""JSON encoding shared by the exporters: orjson when installed, stdlib json otherwise."""

from __future__ import annotations

import json
import math
from typing import Any, cast

try:  # optional perf
    import orjson as _orjson
except Exception:  # pragma: no cover
    _orjson = None  # type: ignore[assignment]

__all__ = ["dumps"]


def _finite(obj: dict[str, Any]) -> dict[str, Any]:
    # inf SNR / NaN std are written as strings so every line stays valid JSON
    return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in obj.items()}


def dumps(obj: dict[str, Any], *, pretty: bool = False) -> bytes:
    clean = _finite(obj)
    if _orjson is not None and not pretty:
        return cast(bytes, cast(Any, _orjson).dumps(clean, option=cast(Any, _orjson).OPT_NON_STR_KEYS))
    if pretty:
        return json.dumps(clean, ensure_ascii=False, indent=2).encode("utf-8")
    return json.dumps(clean, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
