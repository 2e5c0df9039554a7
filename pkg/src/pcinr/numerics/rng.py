"""Seeded, splittable RNG on top of numpy's counter-based Philox generator.

Identical (seed, stream) pairs give identical draw sequences on every
platform numpy supports. Streams are derived with ``child(*keys)`` so that
e.g. the batch permutation of epoch 12 never depends on how many draws were
made before it.
"""

from __future__ import annotations

from typing import Any

import numpy as np
import numpy.typing as npt

from .precision import real_dtype

__all__ = ["Rng"]

ALGORITHM = "philox4x64"


class Rng:
    def __init__(self, seed: int, stream: tuple[int, ...] = ()) -> None:
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self.stream = tuple(int(k) for k in stream)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._bitgen = np.random.Philox(seq)
        self._gen = np.random.Generator(self._bitgen)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream}, position={self.position})"

    @property
    def algorithm(self) -> str:
        return ALGORITHM

    @property
    def position(self) -> int:
        """Philox block counter; advances with every draw."""
        state = self._bitgen.state["state"]
        return int(state["counter"][0])

    def child(self, *keys: int) -> Rng:
        """Independent stream keyed by ``keys`` under the same seed."""
        return Rng(self.seed, self.stream + tuple(keys))

    def uniform(
        self, lo: float, hi: float, n: int | tuple[int, ...], dtype: npt.DTypeLike | None = None
    ) -> npt.NDArray[Any]:
        if not lo < hi:
            raise ValueError(f"uniform range needs lo < hi, got [{lo}, {hi})")
        dt = np.dtype(dtype) if dtype is not None else real_dtype()
        draws = self._gen.uniform(lo, hi, n).astype(dt)
        # float32 rounding can land exactly on hi
        top = np.nextafter(dt.type(hi), dt.type(lo))
        return np.minimum(draws, top)

    def normal(
        self, mean: float, std: float, n: int | tuple[int, ...], dtype: npt.DTypeLike | None = None
    ) -> npt.NDArray[Any]:
        if std < 0:
            raise ValueError(f"std must be >= 0, got {std}")
        draws = self._gen.normal(mean, std, n)
        return draws.astype(dtype if dtype is not None else real_dtype())

    def permutation(self, n: int) -> npt.NDArray[np.int64]:
        return self._gen.permutation(n).astype(np.int64)

    def integers(self, lo: int, hi: int, n: int) -> npt.NDArray[np.int64]:
        return self._gen.integers(lo, hi, n, dtype=np.int64)
