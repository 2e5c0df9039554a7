from __future__ import annotations

import numpy as np
import pytest

from pcinr.errors import ShapeError
from pcinr.models.tcnn import (
    TcnnConfig,
    conv1d_transpose,
    conv1d_transpose_backward,
    init_tcnn,
    tcnn_backward,
    tcnn_count_params,
    tcnn_forward,
)
from pcinr.numerics import Rng, use_precision

BASELINE_PARAMS = 798_657
OUTPUT_LEN = 16384
SMALL = TcnnConfig(latent_dim=4, base_channels=4, kernel_len=5, stride=2, num_upsample_layers=3, seed_timesteps=4, output_len=32)
FD_STEP = 1e-6
FD_PICKS = 6


def _naive_tconv(x: np.ndarray, kernel: np.ndarray, stride: int) -> np.ndarray:
    cin, steps = x.shape
    klen, _, cout = kernel.shape
    full = np.zeros((cout, (steps - 1) * stride + klen))
    for t in range(steps):
        for k in range(klen):
            full[:, t * stride + k] += x[:, t] @ kernel[k]
    start = (klen - stride) // 2
    return full[:, start : start + steps * stride]


def test_baseline_parameter_count_and_output() -> None:
    params = init_tcnn(TcnnConfig(), Rng(0))
    assert tcnn_count_params(params) == BASELINE_PARAMS
    out, _ = tcnn_forward(params, Rng(1).normal(0.0, 1.0, 256))
    assert out.shape == (1, OUTPUT_LEN)
    assert np.all(np.abs(out) < 1.0)


def test_channel_schedule() -> None:
    assert TcnnConfig().channels() == [128, 64, 32, 16, 8, 1]


@pytest.mark.parametrize(
    "kwargs",
    [{"kernel_len": 24}, {"kernel_len": 3, "stride": 4, "output_len": 16 * 4**5}, {"output_len": 16000}],
)
def test_config_validation(kwargs: dict) -> None:
    with pytest.raises(ValueError):
        TcnnConfig(**kwargs)


def test_conv1d_transpose_matches_direct_scatter() -> None:
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 7))
    kernel = rng.normal(size=(5, 3, 2))
    np.testing.assert_allclose(conv1d_transpose(x, kernel, None, 2), _naive_tconv(x, kernel, 2), atol=1e-12)
    bias = np.array([0.5, -1.0])
    np.testing.assert_allclose(
        conv1d_transpose(x, kernel, bias, 2), _naive_tconv(x, kernel, 2) + bias[:, None], atol=1e-12
    )


def test_conv1d_transpose_shape_checks() -> None:
    with pytest.raises(ShapeError):
        conv1d_transpose(np.zeros((3, 4)), np.zeros((5, 2, 1)), None, 2)
    with pytest.raises(ShapeError):
        conv1d_transpose(np.zeros((2, 4)), np.zeros((1, 2, 1)), None, 2)


def test_conv1d_transpose_backward_is_adjoint() -> None:
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3, 6))
    kernel = rng.normal(size=(5, 3, 4))
    g = rng.normal(size=(2, 4, 12))
    dx, dk, db = conv1d_transpose_backward(x, kernel, 2, g)
    # <g, T(x)> is linear in x and in the kernel
    y = conv1d_transpose(x, kernel, None, 2)
    assert np.sum(g * y) == pytest.approx(np.sum(dx * x))
    assert np.sum(g * y) == pytest.approx(np.sum(dk * kernel))
    np.testing.assert_allclose(db, g.sum(axis=(0, 2)))


def test_backward_matches_finite_differences() -> None:
    with use_precision(np.float64):
        params = init_tcnn(SMALL, Rng(2))
    rng = np.random.default_rng(2)
    for b in params.biases:
        b[...] = rng.normal(0.0, 0.1, b.shape)
    z = rng.normal(size=(2, SMALL.latent_dim))
    c = rng.normal(size=(2, SMALL.output_len))

    def objective() -> float:
        return float(np.sum(c * tcnn_forward(params, z)[0]))

    _, cache = tcnn_forward(params, z)
    grads, g_z = tcnn_backward(cache, params, c)

    def fd(arr: np.ndarray, idx: tuple[int, ...]) -> float:
        old = arr[idx]
        arr[idx] = old + FD_STEP
        up = objective()
        arr[idx] = old - FD_STEP
        down = objective()
        arr[idx] = old
        return (up - down) / (2 * FD_STEP)

    named = params.named()
    assert set(grads) == set(named)
    for name, arr in named.items():
        assert grads[name].shape == arr.shape, name
        for flat in rng.choice(arr.size, size=min(arr.size, FD_PICKS), replace=False):
            idx = np.unravel_index(int(flat), arr.shape)
            assert grads[name][idx] == pytest.approx(fd(arr, idx), rel=1e-4, abs=1e-7), (name, idx)
    for idx in np.ndindex(*z.shape):
        assert g_z[idx] == pytest.approx(fd(z, idx), rel=1e-4, abs=1e-7), idx


def test_large_latent_stays_inside_unit_interval() -> None:
    params = init_tcnn(TcnnConfig(), Rng(0))
    z = np.full((1, 256), 3.0, dtype=np.float32)
    out, cache = tcnn_forward(params, z)
    assert out.dtype == np.float32
    assert np.abs(cache.stage_pre[-1]).max() > 8.0
    assert np.all(np.abs(out) < 1.0)
    _, g_z = tcnn_backward(cache, params, np.ones_like(out))
    assert np.all(np.isfinite(g_z)) and np.any(g_z != 0)


def test_latent_width_mismatch() -> None:
    params = init_tcnn(SMALL, Rng(0))
    with pytest.raises(ShapeError):
        tcnn_forward(params, np.zeros(SMALL.latent_dim + 1))
