"""Activation-scaling search: seeded log-uniform candidates + successive halving.

Every candidate is trained to the first rung's epoch budget; the best
``keep_fraction`` (by training-set MSE) continue to the next rung, resuming
from where they stopped, until the last rung. Ties break on candidate index,
so a fixed seed always yields the same leaderboard.
"""

from __future__ import annotations

import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from pcinr.audio.dataset import Dataset
from pcinr.config import SweepSpace
from pcinr.core.emitter import Emitter
from pcinr.errors import NonFiniteError
from pcinr.metrics.pointwise import mse
from pcinr.numerics import Rng
from pcinr.training.loop import fit
from pcinr.training.state import TrainConfig, TrainState, build_state
from pcinr.training.synthesis import reconstruct

__all__ = [
    "LEADERBOARD_HEADER",
    "Candidate",
    "Objective",
    "SweepResult",
    "TrainingObjective",
    "sample_candidates",
    "stub_objective",
    "successive_halving",
    "write_leaderboard",
]

SWEEP_STREAM = 5
LEADERBOARD_HEADER = ("rank", "candidate", "omega0_first", "omega0_hidden", "rung", "epochs", "mse")
SEARCH_NOTE = (
    "search: seeded log-uniform random sampling + successive halving "
    "(in place of Gaussian-process Bayesian optimization with Hyperband early stopping)"
)


@dataclass(frozen=True)
class Candidate:
    index: int
    omega0_first: float
    omega0_hidden: float


class Objective(Protocol):
    def __call__(self, candidate: Candidate, epochs: int) -> float:
        """Score of ``candidate`` after ``epochs`` total epochs (lower is better)."""
        ...


@dataclass
class Score:
    candidate: Candidate
    rung: int
    epochs: int
    mse: float


@dataclass
class SweepResult:
    best: Candidate
    best_mse: float
    # last score of every candidate, survivors of later rungs first
    leaderboard: list[Score] = field(default_factory=list)
    history: list[Score] = field(default_factory=list)


def sample_candidates(space: SweepSpace, seed: int) -> list[Candidate]:
    rng = Rng(seed).child(SWEEP_STREAM)
    lf = np.exp(rng.uniform(math.log(space.omega0_first[0]), math.log(space.omega0_first[1]), space.candidate_count, dtype=np.float64))
    lh = np.exp(rng.uniform(math.log(space.omega0_hidden[0]), math.log(space.omega0_hidden[1]), space.candidate_count, dtype=np.float64))
    return [Candidate(k, float(f), float(h)) for k, (f, h) in enumerate(zip(lf, lh))]


def stub_objective(candidate: Candidate, epochs: int) -> float:
    """Training-free objective with its minimum at (3000, 30); used to check selection."""
    del epochs
    return (math.log(candidate.omega0_hidden) - math.log(30.0)) ** 2 + (
        math.log(candidate.omega0_first) - math.log(3000.0)
    ) ** 2


class TrainingObjective:
    """Trains one state per candidate and resumes it at each rung; scores by training-set MSE."""

    def __init__(self, base: TrainConfig, dataset: Dataset) -> None:
        if base.family != "pcinr":
            raise ValueError("the activation-scaling sweep needs a pcinr-family config")
        self.base = base
        self.dataset = dataset
        self.targets = dataset.targets(np.float64)
        self.states: dict[int, TrainState] = {}

    def _state(self, candidate: Candidate, epochs: int) -> TrainState:
        state = self.states.get(candidate.index)
        if state is None:
            cfg = self.base.with_(
                omega0_first=candidate.omega0_first, omega0_hidden=candidate.omega0_hidden, epochs=epochs
            )
            state = build_state(
                cfg,
                len(self.dataset),
                sample_count=self.dataset.sample_count,
                sample_rate=self.dataset.sample_rate,
                dataset_hash=self.dataset.content_hash,
                item_ids=self.dataset.item_ids,
            )
            self.states[candidate.index] = state
        return state

    def __call__(self, candidate: Candidate, epochs: int) -> float:
        state = self._state(candidate, epochs)
        try:
            fit(state, self.targets, max(0, epochs - state.epoch))
        except NonFiniteError:
            return math.inf
        return float(np.mean([mse(self.targets[i], reconstruct(state, i).samples) for i in range(len(self.dataset))]))


def _score(objective: Objective, candidate: Candidate, epochs: int) -> float:
    value = float(objective(candidate, epochs))
    return value if math.isfinite(value) else math.inf


def successive_halving(
    space: SweepSpace, objective: Objective, seed: int, *, emitter: Emitter | None = None
) -> SweepResult:
    survivors = sample_candidates(space, seed)
    history: list[Score] = []
    latest: dict[int, Score] = {}
    for rung, epochs in enumerate(space.rung_epochs):
        scores = []
        for cand in survivors:
            s = Score(cand, rung, epochs, _score(objective, cand, epochs))
            scores.append(s)
            history.append(s)
            latest[cand.index] = s
            if emitter is not None:
                emitter.emit_rung(rung, cand.index, cand.omega0_first, cand.omega0_hidden, s.mse)
        scores.sort(key=lambda s: (s.mse, s.candidate.index))
        if rung == len(space.rung_epochs) - 1:
            break
        keep = max(1, math.ceil(len(scores) * space.keep_fraction))
        survivors = [s.candidate for s in scores[:keep]]
    board = sorted(latest.values(), key=lambda s: (-s.rung, s.mse, s.candidate.index))
    return SweepResult(best=board[0].candidate, best_mse=board[0].mse, leaderboard=board, history=history)


def write_leaderboard(
    result: SweepResult, path: str | os.PathLike[str], *, seed: int, extra: Sequence[str] = ()
) -> None:
    lines = [f"# {SEARCH_NOTE}", f"# seed: {seed}", *(f"# {e}" for e in extra), ",".join(LEADERBOARD_HEADER)]
    for rank, s in enumerate(result.leaderboard, start=1):
        lines.append(
            ",".join(
                [
                    str(rank),
                    str(s.candidate.index),
                    repr(s.candidate.omega0_first),
                    repr(s.candidate.omega0_hidden),
                    str(s.rung),
                    str(s.epochs),
                    repr(s.mse),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def best_dict(result: SweepResult) -> dict[str, Any]:
    return {
        "candidate": result.best.index,
        "omega0_first": result.best.omega0_first,
        "omega0_hidden": result.best.omega0_hidden,
        "mse": result.best_mse,
    }
