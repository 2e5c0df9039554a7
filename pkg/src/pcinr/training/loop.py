"""Autodecoder training loop.

One epoch visits every item once, in a permutation drawn from the
``(seed, EPOCH_STREAM, epoch)`` stream, ``batch_items`` items at a time. Per
batch:

1. each item (in batch order): latent -> decoder -> loss -> backward;
   network gradients are summed in that fixed order
2. weight regularization is added once for the batch
3. one optimizer step for decoder + mapping, one row-sparse step for the
   latent rows of the batch

Batch loss = mean over items of (mse_term + derivative_term) + wr_term.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import NonFiniteError, ShapeError
from pcinr.models.pcinr import (
    FiLMVector,
    MappingParams,
    PcinrParams,
    map_latent_backward,
    map_latent_forward,
    pcinr_backward,
    pcinr_forward,
)
from pcinr.models.tcnn import TcnnParams, tcnn_backward, tcnn_forward
from pcinr.numerics import Rng
from pcinr.optim import optimizer_step

from .losses import LossBreakdown, coordinate_grid, reconstruction_loss, weight_reg_term
from .state import EPOCH_STREAM, LATENT_NAME, TrainState

__all__ = [
    "BatchResult",
    "ItemResult",
    "batch_gradients",
    "epoch_order",
    "fit",
    "item_gradients",
    "train_epoch",
]

Array = npt.NDArray[Any]


@dataclass
class ItemResult:
    loss: LossBreakdown
    net: dict[str, Array]  # decoder (+ mapping) gradients
    latent: Array  # (latent_dim,)
    pred: Array  # (M,)


@dataclass
class BatchResult:
    loss: LossBreakdown
    net: dict[str, Array]
    latent: Array  # (B, latent_dim), rows in ``items`` order
    items: npt.NDArray[np.int64]


def _targets(dataset: Any) -> Array:
    if hasattr(dataset, "targets"):
        return np.asarray(dataset.targets(np.float64))
    arr = np.asarray(dataset, dtype=np.float64)
    if arr.ndim != 2:  # noqa: PLR2004
        raise ShapeError(f"targets must be (items, samples), got shape {arr.shape}")
    return arr


def _add(acc: dict[str, Array], grads: dict[str, Array]) -> None:
    for name, g in grads.items():
        if name in acc:
            acc[name] += g
        else:
            acc[name] = g.copy()


def _pcinr_item(
    decoder: PcinrParams,
    mapping: MappingParams,
    z: Array,
    target: Array,
    grid: Array,
    *,
    chunk: int,
    derivative: bool,
    scale: float,
) -> ItemResult:
    film, mcache = map_latent_forward(mapping, z[None, :])
    m = grid.shape[0]
    spans = [(s, min(s + chunk, m)) for s in range(0, m, chunk)]
    keep = len(spans) == 1
    preds: list[Array] = []
    tans: list[Array] = []
    caches = []
    for s, e in spans:
        out, cache = pcinr_forward(decoder, film, grid[s:e], tangent=derivative)
        preds.append(out[0])
        if cache.tangent is not None:
            tans.append(cache.tangent[0])
        caches.append(cache if keep else None)
    pred = np.concatenate(preds)
    tangent = np.concatenate(tans) if derivative else None
    loss, g_pred, g_tan = reconstruction_loss(pred, tangent, target, grid, derivative=derivative)
    g_pred = g_pred * scale
    if g_tan is not None:
        g_tan = g_tan * scale

    dec: dict[str, Array] = {}
    g_gamma = np.zeros(film.gamma.shape, dtype=film.gamma.dtype)
    g_beta = np.zeros(film.beta.shape, dtype=film.beta.dtype)
    for (s, e), cached in zip(spans, caches):
        cache = cached if cached is not None else pcinr_forward(decoder, film, grid[s:e], tangent=derivative)[1]
        grads = pcinr_backward(
            cache,
            decoder,
            film,
            g_pred[None, s:e],
            g_tan[None, s:e] if g_tan is not None else None,
        )
        _add(dec, grads.decoder)
        g_gamma += grads.film.gamma
        g_beta += grads.film.beta
    mgrads, g_z = map_latent_backward(mcache, mapping, FiLMVector(g_gamma, g_beta))
    dec.update(mgrads)
    return ItemResult(loss=loss, net=dict(sorted(dec.items())), latent=g_z[0], pred=pred)


def _tcnn_item(decoder: TcnnParams, z: Array, target: Array, *, derivative: bool, scale: float) -> ItemResult:
    out, cache = tcnn_forward(decoder, z[None, :])
    m = target.shape[0]
    if m > out.shape[1]:
        raise ShapeError(f"tcnn output has {out.shape[1]} samples, target {m}")
    pred = out[0, :m]
    loss, g_pred, _ = reconstruction_loss(pred, None, target, derivative=derivative)
    upstream = np.zeros(out.shape, dtype=np.float64)
    upstream[0, :m] = g_pred * scale
    grads, g_z = tcnn_backward(cache, decoder, upstream)
    return ItemResult(loss=loss, net=grads, latent=g_z[0], pred=pred)


def item_gradients(state: TrainState, z: npt.ArrayLike, target: npt.ArrayLike, *, scale: float = 1.0) -> ItemResult:
    """Loss and gradients for one item decoded from latent ``z`` (no weight regularization)."""
    cfg = state.config
    zz = np.asarray(z, dtype=state.latents.codes.dtype).reshape(-1)
    a = np.asarray(getattr(target, "samples", target), dtype=np.float64).reshape(-1)
    if isinstance(state.decoder, TcnnParams):
        return _tcnn_item(state.decoder, zz, a, derivative=cfg.derivative_term, scale=scale)
    decoder, mapping = state.require_pcinr("training")
    grid = coordinate_grid(a.shape[0], dtype=decoder.weights[0].dtype)
    return _pcinr_item(
        decoder, mapping, zz, a, grid, chunk=cfg.coord_chunk, derivative=cfg.derivative_term, scale=scale
    )


def batch_gradients(state: TrainState, targets: npt.ArrayLike, items: npt.ArrayLike) -> BatchResult:
    """Assembled batch loss and gradients (including weight regularization)."""
    tgt = _targets(targets)
    idx = np.asarray(items, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise ShapeError("empty batch")
    scale = 1.0 / idx.size
    net: dict[str, Array] = {}
    latent = np.zeros((idx.size, state.latents.dim), dtype=state.latents.codes.dtype)
    parts: list[tuple[LossBreakdown, float]] = []
    for row, i in enumerate(idx):
        res = item_gradients(state, state.latents.codes[i], tgt[i], scale=scale)
        _add(net, res.net)
        latent[row] = res.latent
        parts.append((res.loss, 1.0))
    params = state.net_params()
    net = {k: v.astype(params[k].dtype, copy=False) for k, v in sorted(net.items())}
    wr = weight_reg_term(params, state.decoder_weight_names(), state.config.lambda_wr, net)
    data = LossBreakdown.weighted_mean(parts)
    return BatchResult(LossBreakdown.of(data.mse_term, data.derivative_term, wr), net, latent, idx)


def epoch_order(seed: int, epoch: int, item_count: int) -> npt.NDArray[np.int64]:
    return Rng(seed).child(EPOCH_STREAM, epoch).permutation(item_count)


def train_epoch(state: TrainState, dataset: Any) -> tuple[TrainState, LossBreakdown]:
    """One pass over all items; returns the state (updated in place) and the item-weighted mean loss."""
    targets = _targets(dataset)
    if targets.shape[0] != len(state.latents):
        raise ShapeError(f"dataset has {targets.shape[0]} items, latent table {len(state.latents)}")
    if targets.shape[1] != state.sample_count:
        raise ShapeError(f"dataset items have {targets.shape[1]} samples, state expects {state.sample_count}")
    cfg = state.config
    epoch = state.epoch + 1
    order = epoch_order(cfg.seed, epoch, targets.shape[0])
    parts: list[tuple[LossBreakdown, float]] = []
    params = state.net_params()
    latents = state.latents.named()
    for b, start in enumerate(range(0, order.size, cfg.batch_items)):
        items = order[start : start + cfg.batch_items]
        try:
            res = batch_gradients(state, targets, items)
            if not np.isfinite(res.loss.total):
                raise NonFiniteError("non-finite loss")
        except NonFiniteError as exc:
            raise NonFiniteError(str(exc), epoch=epoch, batch=b) from exc
        optimizer_step(cfg.optimizer, state.net_opt, params, res.net)  # type: ignore[arg-type]
        optimizer_step(
            cfg.optimizer,  # type: ignore[arg-type]
            state.latent_opt,
            latents,
            {LATENT_NAME: res.latent},
            rows={LATENT_NAME: items},
        )
        parts.append((res.loss, float(items.size)))
    state.epoch = epoch
    return state, LossBreakdown.weighted_mean(parts)


def fit(
    state: TrainState,
    dataset: Any,
    epochs: int | None = None,
    *,
    on_epoch: Callable[[TrainState, LossBreakdown], None] | None = None,
) -> list[LossBreakdown]:
    """Run ``epochs`` (default: config.epochs minus epochs already done) more epochs."""
    remaining = epochs if epochs is not None else max(0, state.config.epochs - state.epoch)
    history: list[LossBreakdown] = []
    for _ in range(remaining):
        state, loss = train_epoch(state, dataset)
        history.append(loss)
        if on_epoch is not None:
            on_epoch(state, loss)
    return history
