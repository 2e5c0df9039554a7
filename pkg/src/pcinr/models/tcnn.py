"""Transposed-convolution decoder baseline (WaveGAN-style, channels divided by eight).

latent -> dense -> reshape (channels x seed_timesteps) -> [tconv + ReLU] x (L-1)
-> tconv -> tanh. Every stage upsamples by exactly ``stride``.

Kernels are stored (kernel_len, in_ch, out_ch). Transposed convolution is a
scatter-accumulate: input step t adds ``x[:, t] @ kernel[k]`` at output
position ``t * stride + k``; the full-length result is cropped from
``(kernel_len - stride) // 2`` to keep ``length * stride`` samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import ShapeError
from pcinr.numerics import Rng, check_finite, real_dtype

__all__ = [
    "TcnnCache",
    "TcnnConfig",
    "TcnnParams",
    "conv1d_transpose",
    "conv1d_transpose_backward",
    "init_tcnn",
    "tcnn_backward",
    "tcnn_count_params",
    "tcnn_forward",
]

Array = npt.NDArray[Any]


@dataclass(frozen=True)
class TcnnConfig:
    latent_dim: int = 256
    base_channels: int = 128
    kernel_len: int = 25
    stride: int = 4
    num_upsample_layers: int = 5
    seed_timesteps: int = 16
    output_len: int = 16384

    def __post_init__(self) -> None:
        for name in ("latent_dim", "base_channels", "kernel_len", "stride", "num_upsample_layers", "seed_timesteps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.kernel_len % 2 == 0:
            raise ValueError(f"kernel_len must be odd, got {self.kernel_len}")
        if self.kernel_len < self.stride:
            raise ValueError("kernel_len must be >= stride")
        if self.seed_timesteps * self.stride**self.num_upsample_layers != self.output_len:
            raise ValueError(
                "seed_timesteps * stride ** num_upsample_layers must equal output_len "
                f"({self.seed_timesteps} * {self.stride}**{self.num_upsample_layers} != {self.output_len})"
            )

    def channels(self) -> list[int]:
        """Channel schedule, e.g. 128 -> 64 -> 32 -> 16 -> 8 -> 1."""
        chans = [self.base_channels]
        for _ in range(self.num_upsample_layers - 1):
            chans.append(max(1, chans[-1] // 2))
        chans.append(1)
        return chans


@dataclass
class TcnnParams:
    dense_weight: Array  # (seed_timesteps * base_channels, latent_dim)
    dense_bias: Array
    kernels: list[Array]  # (kernel_len, in_ch, out_ch)
    biases: list[Array]  # (out_ch,)
    stride: int
    seed_timesteps: int

    def named(self) -> dict[str, Array]:
        out = {"decoder.dense.weight": self.dense_weight, "decoder.dense.bias": self.dense_bias}
        for k, (w, b) in enumerate(zip(self.kernels, self.biases)):
            out[f"decoder.tconv{k}.kernel"] = w
            out[f"decoder.tconv{k}.bias"] = b
        return out

    def weight_names(self) -> list[str]:
        return ["decoder.dense.weight"] + [f"decoder.tconv{k}.kernel" for k in range(len(self.kernels))]

    @property
    def latent_dim(self) -> int:
        return int(self.dense_weight.shape[1])

    @property
    def base_channels(self) -> int:
        return int(self.kernels[0].shape[1])


@dataclass
class TcnnCache:
    z: Array
    stage_inputs: list[Array]  # input of each tconv, (B, C, T)
    stage_pre: list[Array]  # tconv outputs before activation
    output: Array  # (B, output_len) after tanh, clipped inside (-1, 1)
    final_tanh: Array  # float64 tanh of the last stage before clipping


def init_tcnn(config: TcnnConfig, rng: Rng) -> TcnnParams:
    """He-uniform dense and kernel weights, zero biases."""
    dt = real_dtype()
    c0 = config.base_channels
    dense_out = config.seed_timesteps * c0
    bound = math.sqrt(6.0 / config.latent_dim)
    dense_w = rng.uniform(-bound, bound, (dense_out, config.latent_dim), dtype=dt)
    chans = config.channels()
    kernels: list[Array] = []
    biases: list[Array] = []
    for cin, cout in zip(chans[:-1], chans[1:]):
        # fan-in of a transposed conv output: each output sees ~kernel_len/stride input steps
        fan = cin * max(1, config.kernel_len // config.stride)
        kb = math.sqrt(6.0 / fan)
        kernels.append(rng.uniform(-kb, kb, (config.kernel_len, cin, cout), dtype=dt))
        biases.append(np.zeros(cout, dtype=dt))
    return TcnnParams(
        dense_weight=dense_w,
        dense_bias=np.zeros(dense_out, dtype=dt),
        kernels=kernels,
        biases=biases,
        stride=config.stride,
        seed_timesteps=config.seed_timesteps,
    )


def tcnn_count_params(params: TcnnParams) -> int:
    return sum(int(a.size) for a in params.named().values())


# ---------------------------------------------------------------- transposed convolution


def _crop_start(kernel_len: int, stride: int) -> int:
    return (kernel_len - stride) // 2


def conv1d_transpose(x: npt.ArrayLike, kernel: Array, bias: Array | None, stride: int) -> Array:
    """Fractionally-strided convolution of (B, C_in, T) or (C_in, T) input -> (.., C_out, T * stride)."""
    xa = np.asarray(x)
    squeeze = xa.ndim == 2  # noqa: PLR2004
    if squeeze:
        xa = xa[None]
    if xa.ndim != 3 or kernel.ndim != 3 or xa.shape[1] != kernel.shape[1]:  # noqa: PLR2004
        raise ShapeError(f"input {xa.shape} incompatible with kernel {kernel.shape}")
    klen, _, cout = kernel.shape
    if klen < stride:
        raise ShapeError(f"kernel_len {klen} shorter than stride {stride}")
    batch, _, steps = xa.shape
    # contrib[b, o, t, k] = sum_c x[b, c, t] * kernel[k, c, o]
    contrib = np.einsum("bct,kco->botk", xa, kernel, optimize=True)
    full_len = (steps - 1) * stride + klen
    full = np.zeros((batch, cout, full_len), dtype=contrib.dtype)
    span = (steps - 1) * stride + 1
    for k in range(klen):
        full[:, :, k : k + span : stride] += contrib[..., k]
    start = _crop_start(klen, stride)
    out = full[:, :, start : start + steps * stride]
    if bias is not None:
        out = out + bias[None, :, None]
    return out[0] if squeeze else np.ascontiguousarray(out)


def conv1d_transpose_backward(
    x: Array, kernel: Array, stride: int, upstream: Array
) -> tuple[Array, Array, Array]:
    """Gradients (dx, dkernel, dbias) of conv1d_transpose for (B, C_in, T) input."""
    klen, _, cout = kernel.shape
    batch, _, steps = x.shape
    if upstream.shape != (batch, cout, steps * stride):
        raise ShapeError(f"upstream {upstream.shape} != {(batch, cout, steps * stride)}")
    full_len = (steps - 1) * stride + klen
    start = _crop_start(klen, stride)
    g_full = np.zeros((batch, cout, full_len), dtype=upstream.dtype)
    g_full[:, :, start : start + steps * stride] = upstream
    span = (steps - 1) * stride + 1
    # strided gather is the adjoint of the strided scatter above
    g_contrib = np.stack([g_full[:, :, k : k + span : stride] for k in range(klen)], axis=-1)
    dx = np.einsum("botk,kco->bct", g_contrib, kernel, optimize=True)
    dkernel = np.einsum("bct,botk->kco", x, g_contrib, optimize=True)
    dbias = upstream.sum(axis=(0, 2))
    return dx, dkernel, dbias


# ---------------------------------------------------------------- network


def _inside_unit(x: Array, dtype: npt.DTypeLike) -> Array:
    """Cast to ``dtype`` keeping every value strictly inside (-1, 1)."""
    bound = np.nextafter(np.ones((), dtype=dtype), np.zeros((), dtype=dtype))
    return np.clip(x, -bound, bound).astype(dtype)


def tcnn_forward(params: TcnnParams, z: npt.ArrayLike) -> tuple[Array, TcnnCache]:
    """Decode latent(s) to (B, output_len) amplitudes in (-1, 1)."""
    za = np.asarray(z, dtype=params.dense_weight.dtype)
    if za.ndim == 1:
        za = za[None, :]
    if za.ndim != 2 or za.shape[1] != params.latent_dim:  # noqa: PLR2004
        raise ShapeError(f"latent must have {params.latent_dim} columns, got {za.shape}")
    batch = za.shape[0]
    h = (za @ params.dense_weight.T + params.dense_bias).reshape(
        batch, params.base_channels, params.seed_timesteps
    )
    inputs: list[Array] = []
    pre: list[Array] = []
    last = len(params.kernels) - 1
    raw = np.empty(0)
    for k, (w, b) in enumerate(zip(params.kernels, params.biases)):
        inputs.append(h)
        p = conv1d_transpose(h, w, b, params.stride)
        pre.append(p)
        if k == last:
            raw = np.tanh(p.astype(np.float64))
            h = _inside_unit(raw, p.dtype)
        else:
            h = np.maximum(p, 0)
        check_finite("tconv stage", h, layer=k)
    out = h[:, 0, :]
    return out, TcnnCache(z=za, stage_inputs=inputs, stage_pre=pre, output=out, final_tanh=raw[:, 0, :])


def tcnn_backward(
    cache: TcnnCache, params: TcnnParams, upstream: npt.ArrayLike
) -> tuple[dict[str, Array], Array]:
    """Gradients of all TCNN parameters and of z given dL/d(output)."""
    g = np.asarray(upstream, dtype=params.dense_weight.dtype)
    if g.shape != cache.output.shape or len(cache.stage_inputs) != len(params.kernels):
        raise ShapeError(f"upstream {g.shape} does not match cache output {cache.output.shape}")
    grads: dict[str, Array] = {}
    last = len(params.kernels) - 1
    g_h = g[:, None, :] * (1.0 - cache.final_tanh[:, None, :] ** 2).astype(g.dtype)
    for k in range(last, -1, -1):
        if k != last:
            g_h = g_h * (cache.stage_pre[k] > 0)
        g_h, dkern, dbias = conv1d_transpose_backward(
            cache.stage_inputs[k], params.kernels[k], params.stride, g_h
        )
        grads[f"decoder.tconv{k}.kernel"] = dkern
        grads[f"decoder.tconv{k}.bias"] = dbias
    g_dense = g_h.reshape(g_h.shape[0], -1)
    grads["decoder.dense.weight"] = g_dense.T @ cache.z
    grads["decoder.dense.bias"] = g_dense.sum(axis=0)
    g_z = g_dense @ params.dense_weight
    return dict(sorted(grads.items())), g_z
