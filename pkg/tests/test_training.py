from __future__ import annotations

import numpy as np
import pytest
from conftest import TINY_ITEMS, TINY_SAMPLES, tiny_state, tiny_targets

from pcinr.errors import NonFiniteError, ShapeError
from pcinr.numerics import use_precision
from pcinr.training import batch_gradients, fit, item_gradients, train_epoch
from pcinr.training.loop import epoch_order
from pcinr.training.state import LATENT_NAME

FD_STEP = 1e-6
LEARN_EPOCHS = 40


def _snapshot(state) -> dict[str, np.ndarray]:  # type: ignore[no-untyped-def]
    out = {k: v.copy() for k, v in state.net_params().items()}
    out[LATENT_NAME] = state.latents.codes.copy()
    return out


def test_training_is_deterministic(targets: np.ndarray) -> None:
    a, b = tiny_state(seed=5), tiny_state(seed=5)
    hist_a = fit(a, targets, 2)
    hist_b = fit(b, targets, 2)
    assert hist_a == hist_b
    snap_a, snap_b = _snapshot(a), _snapshot(b)
    for name in snap_a:
        np.testing.assert_array_equal(snap_a[name], snap_b[name])


def test_different_seeds_diverge(targets: np.ndarray) -> None:
    a, b = tiny_state(seed=1), tiny_state(seed=2)
    fit(a, targets, 1)
    fit(b, targets, 1)
    assert not np.array_equal(a.latents.codes, b.latents.codes)


def test_epoch_order_is_a_seeded_permutation() -> None:
    order = epoch_order(3, 1, 10)
    assert sorted(order.tolist()) == list(range(10))
    np.testing.assert_array_equal(order, epoch_order(3, 1, 10))
    assert not all(np.array_equal(order, epoch_order(3, e, 10)) for e in range(2, 6))


@pytest.mark.parametrize("arch", ["pcinr", "tcnn"])
def test_loss_goes_down(arch: str, targets: np.ndarray) -> None:
    state = tiny_state(arch, seed=0)
    history = fit(state, targets, LEARN_EPOCHS)
    assert state.epoch == LEARN_EPOCHS
    assert len(history) == LEARN_EPOCHS
    assert history[-1].total < history[0].total
    assert all(np.isfinite(h.total) for h in history)


def test_every_latent_row_steps_once_per_epoch(targets: np.ndarray) -> None:
    state = tiny_state()
    fit(state, targets, 3)
    np.testing.assert_array_equal(state.latent_opt.t[LATENT_NAME], [3] * TINY_ITEMS)
    # two batches of two items per epoch
    assert int(state.net_opt.t["decoder.head.weight"]) == 3 * 2


def test_batch_update_only_touches_its_latent_rows(targets: np.ndarray) -> None:
    state = tiny_state(batch_items=1)
    before = state.latents.codes.copy()
    first = int(epoch_order(state.config.seed, 1, TINY_ITEMS)[0])
    res = batch_gradients(state, targets, [first])
    assert res.latent.shape == (1, state.latents.dim)
    assert res.items.tolist() == [first]
    np.testing.assert_array_equal(state.latents.codes, before)


def test_item_gradients_ignore_other_items(targets: np.ndarray) -> None:
    state = tiny_state()
    ref = item_gradients(state, state.latents.codes[0], targets[0])
    state.latents.codes[1:] += 1.0
    again = item_gradients(state, state.latents.codes[0], targets[0])
    assert ref.loss == again.loss
    np.testing.assert_array_equal(ref.latent, again.latent)


def test_batch_gradients_match_finite_differences() -> None:
    with use_precision(np.float64):
        state = tiny_state(lambda_wr=1e-2, seed=4)
    targets = tiny_targets()
    items = [2, 0]
    res = batch_gradients(state, targets, items)
    params = state.net_params()

    def total() -> float:
        return batch_gradients(state, targets, items).loss.total

    def fd(arr: np.ndarray, idx: tuple[int, ...]) -> float:
        old = arr[idx]
        arr[idx] = old + FD_STEP
        up = total()
        arr[idx] = old - FD_STEP
        down = total()
        arr[idx] = old
        return (up - down) / (2 * FD_STEP)

    for name, idx in [
        ("decoder.sine0.weight", (3, 0)),
        ("decoder.sine1.weight", (2, 5)),
        ("decoder.sine2.bias", (1,)),
        ("decoder.head.weight", (0, 4)),
        ("mapping.layer0.weight", (2, 1)),
        ("mapping.layer2.bias", (9,)),
    ]:
        assert res.net[name][idx] == pytest.approx(fd(params[name], idx), rel=1e-4, abs=1e-7), name
    codes = state.latents.codes
    assert res.latent[0, 3] == pytest.approx(fd(codes, (2, 3)), rel=1e-4, abs=1e-7)
    assert res.latent[1, 1] == pytest.approx(fd(codes, (0, 1)), rel=1e-4, abs=1e-7)
    assert res.loss.wr_term > 0


def test_coordinate_chunking_does_not_change_gradients() -> None:
    with use_precision(np.float64):
        whole = tiny_state(seed=8)
        chunked = tiny_state(seed=8, coord_chunk=10)
    target = tiny_targets()[1]
    a = item_gradients(whole, whole.latents.codes[1], target)
    b = item_gradients(chunked, chunked.latents.codes[1], target)
    assert a.loss.total == pytest.approx(b.loss.total, rel=1e-12)
    np.testing.assert_allclose(a.latent, b.latent, rtol=1e-10, atol=1e-14)
    for name in a.net:
        np.testing.assert_allclose(a.net[name], b.net[name], rtol=1e-10, atol=1e-14)


def test_weight_regularization_only_on_decoder_weights(targets: np.ndarray) -> None:
    plain = tiny_state(seed=3)
    reg = tiny_state(seed=3, lambda_wr=0.5)
    a = batch_gradients(plain, targets, [0])
    b = batch_gradients(reg, targets, [0])
    weights = set(reg.decoder_weight_names())
    for name in a.net:
        if name in weights:
            assert not np.allclose(a.net[name], b.net[name])
        else:
            np.testing.assert_array_equal(a.net[name], b.net[name])


def test_dataset_shape_checks(pcinr_state) -> None:  # type: ignore[no-untyped-def]
    with pytest.raises(ShapeError):
        train_epoch(pcinr_state, tiny_targets(items=TINY_ITEMS + 1))
    with pytest.raises(ShapeError):
        train_epoch(pcinr_state, tiny_targets(samples=TINY_SAMPLES + 2))
    with pytest.raises(ShapeError):
        batch_gradients(pcinr_state, tiny_targets(), [])


def test_non_finite_loss_reports_epoch_and_batch() -> None:
    state = tiny_state()
    bad = tiny_targets()
    bad[1, 5] = np.nan
    with pytest.raises(NonFiniteError) as info:
        train_epoch(state, bad)
    assert info.value.context["epoch"] == 1
    assert "batch" in info.value.context
    assert state.epoch == 0
