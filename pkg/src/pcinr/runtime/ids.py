"""Deterministic run identifiers.

- run_id(seed, config_hash): 16 lowercase hex chars, BLAKE2b of both inputs,
  never all-zero
"""

from __future__ import annotations

import hashlib

__all__ = ["run_id"]


def run_id(seed: int, config_hash: str) -> str:
    """Same (seed, config) -> same id, so events of reruns line up."""
    salt = 0
    while True:
        digest = hashlib.blake2b(
            f"{seed}:{config_hash}:{salt}".encode(), digest_size=8
        ).digest()
        n = int.from_bytes(digest, "big")
        if n != 0:
            return f"{n:016x}"
        salt += 1
