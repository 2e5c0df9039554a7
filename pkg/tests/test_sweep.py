from __future__ import annotations

import math
from pathlib import Path

import pytest

from pcinr.audio import load_dataset
from pcinr.config import SweepSpace
from pcinr.core import Emitter
from pcinr.sweep import (
    LEADERBOARD_HEADER,
    Candidate,
    TrainingObjective,
    sample_candidates,
    stub_objective,
    successive_halving,
    write_leaderboard,
)
from pcinr.training import TrainConfig

SPACE = SweepSpace(candidate_count=12, rung_epochs=(1, 2, 4), keep_fraction=0.5)


class _Events(list):  # type: ignore[type-arg]
    def enqueue(self, item: dict) -> None:  # type: ignore[type-arg]
        self.append(item)


def test_candidates_are_seeded_and_in_range() -> None:
    cands = sample_candidates(SPACE, 3)
    assert cands == sample_candidates(SPACE, 3)
    assert cands != sample_candidates(SPACE, 4)
    assert [c.index for c in cands] == list(range(12))
    for c in cands:
        assert 500.0 <= c.omega0_first < 10000.0
        assert 5.0 <= c.omega0_hidden < 100.0


def test_stub_search_returns_best_sampled_candidate() -> None:
    result = successive_halving(SPACE, stub_objective, 7)
    cands = sample_candidates(SPACE, 7)
    assert result.best == min(cands, key=lambda c: (stub_objective(c, 0), c.index))
    assert result.best_mse == pytest.approx(stub_objective(result.best, 0))


def test_rungs_halve_survivors() -> None:
    calls: list[tuple[int, int]] = []

    def counting(c: Candidate, epochs: int) -> float:
        calls.append((c.index, epochs))
        return stub_objective(c, epochs)

    result = successive_halving(SPACE, counting, 1)
    per_rung = [sum(1 for _, e in calls if e == budget) for budget in SPACE.rung_epochs]
    assert per_rung == [12, 6, 3]
    assert len(result.leaderboard) == 12
    assert [s.rung for s in result.leaderboard[:3]] == [2, 2, 2]


def test_non_finite_scores_rank_last() -> None:
    def explosive(c: Candidate, epochs: int) -> float:
        return math.nan if c.index == 0 else stub_objective(c, epochs)

    result = successive_halving(SweepSpace(candidate_count=4, rung_epochs=(1,)), explosive, 0)
    assert result.leaderboard[-1].candidate.index == 0
    assert result.leaderboard[-1].mse == math.inf


def test_rung_events() -> None:
    events = _Events()
    successive_halving(SPACE, stub_objective, 2, emitter=Emitter(events))
    assert len(events) == 12 + 6 + 3
    assert {e["kind"] for e in events} == {"RUNG"}


def test_leaderboard_file(tmp_path: Path) -> None:
    result = successive_halving(SPACE, stub_objective, 5)
    write_leaderboard(result, tmp_path / "lb.csv", seed=5, extra=["objective: stub"])
    lines = (tmp_path / "lb.csv").read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    assert any("seed: 5" in ln for ln in comments)
    body = lines[len(comments) :]
    assert body[0] == ",".join(LEADERBOARD_HEADER)
    assert body[1].split(",")[1] == str(result.best.index)
    assert len(body) == 13


def test_training_objective_resumes_between_rungs(tone_set: Path) -> None:
    dataset = load_dataset(tone_set, sample_count=4096)
    base = TrainConfig(latent_dim=4, hidden_width=8, depth=2, mapping_width=8, mapping_depth=1, batch_items=4)
    objective = TrainingObjective(base, dataset)
    cand = Candidate(0, 300.0, 10.0)
    first = objective(cand, 1)
    assert objective.states[0].epoch == 1
    objective(cand, 3)
    assert objective.states[0].epoch == 3
    assert math.isfinite(first)
    with pytest.raises(ValueError):
        TrainingObjective(base.with_(arch="tcnn"), dataset)
