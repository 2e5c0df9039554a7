"""FiLM-conditioned sine MLP decoder and its latent mapping network.

Layer k of the decoder computes

    u_k = W_k x + b_k
    y_k = sin((omega0_k + gamma) * u_k + beta)

with one (gamma, beta) pair shared by every sine layer, followed by a linear
head to one amplitude. The mapping network turns a latent code z into
(gamma, beta) with ReLU hidden layers and a linear output of width
2 * hidden_width.

Differentiation is written out by hand:
- forward-mode: dPhi/dt is propagated next to the values when ``tangent`` is set
- reverse-mode: ``pcinr_backward`` returns exact gradients of a scalar loss that
  depends on both Phi and dPhi/dt (forward-over-reverse for the tangent path)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import ShapeError
from pcinr.numerics import Rng, as_real, check_finite, real_dtype

__all__ = [
    "FiLMVector",
    "ForwardCache",
    "MappingCache",
    "MappingParams",
    "PcinrConfig",
    "PcinrGrads",
    "PcinrParams",
    "count_params",
    "init_pcinr",
    "map_latent",
    "map_latent_backward",
    "map_latent_forward",
    "pcinr_backward",
    "pcinr_forward",
    "siren_forward",
]

Array = npt.NDArray[Any]


@dataclass(frozen=True)
class PcinrConfig:
    hidden_width: int = 256
    depth: int = 8
    latent_dim: int = 256
    omega0_first: float = 3000.0
    omega0_hidden: float = 30.0
    mapping_width: int = 256
    mapping_depth: int = 3

    def __post_init__(self) -> None:
        for name in ("hidden_width", "depth", "latent_dim", "mapping_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.mapping_depth < 0:
            raise ValueError(f"mapping_depth must be >= 0, got {self.mapping_depth}")
        if not (self.omega0_first > 0 and self.omega0_hidden > 0):
            raise ValueError("omega0 values must be > 0")

    @classmethod
    def wide(cls, **overrides: Any) -> PcinrConfig:
        """Wide variant: 380 hidden units, 4 sine layers."""
        return cls(**{"hidden_width": 380, "depth": 4, **overrides})

    def omega0(self, layer: int) -> float:
        return self.omega0_first if layer == 0 else self.omega0_hidden


@dataclass
class PcinrParams:
    """Shared decoder parameters. Weights are (out, in); omega0 is fixed, not trained."""

    weights: list[Array]
    biases: list[Array]
    omega0: list[float]
    head_weight: Array  # (1, hidden_width)
    head_bias: Array  # (1,)

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def hidden_width(self) -> int:
        return int(self.weights[0].shape[0])

    def named(self) -> dict[str, Array]:
        out: dict[str, Array] = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"decoder.sine{k}.weight"] = w
            out[f"decoder.sine{k}.bias"] = b
        out["decoder.head.weight"] = self.head_weight
        out["decoder.head.bias"] = self.head_bias
        return out

    def weight_names(self) -> list[str]:
        """Names of weight matrices (the tensors weight regularization touches)."""
        return [f"decoder.sine{k}.weight" for k in range(self.depth)] + ["decoder.head.weight"]


@dataclass
class MappingParams:
    """Latent mapping network: ``len(weights) - 1`` ReLU layers plus a linear output."""

    weights: list[Array]
    biases: list[Array]

    @property
    def latent_dim(self) -> int:
        return int(self.weights[0].shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights[-1].shape[0])

    def named(self) -> dict[str, Array]:
        out: dict[str, Array] = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"mapping.layer{k}.weight"] = w
            out[f"mapping.layer{k}.bias"] = b
        return out


@dataclass
class FiLMVector:
    """(gamma, beta), each (batch, hidden_width). No per-layer axis: shared by all layers."""

    gamma: Array
    beta: Array

    def __post_init__(self) -> None:
        if self.gamma.shape != self.beta.shape:
            raise ShapeError(f"gamma {self.gamma.shape} and beta {self.beta.shape} differ")

    @classmethod
    def zeros(cls, batch: int, width: int, dtype: npt.DTypeLike | None = None) -> FiLMVector:
        dt = dtype if dtype is not None else real_dtype()
        return cls(np.zeros((batch, width), dtype=dt), np.zeros((batch, width), dtype=dt))

    @property
    def batch(self) -> int:
        return int(self.gamma.shape[0])


@dataclass
class MappingCache:
    z: Array
    pre: list[Array]  # pre-activations of each layer
    acts: list[Array]  # inputs to each layer (acts[0] is z)


@dataclass
class ForwardCache:
    coords: Array  # (M,)
    inputs: list[Array]  # x_k fed into layer k, (B, M, n_in)
    u: list[Array]  # W_k x + b_k
    sin_a: list[Array]
    cos_a: list[Array]
    d_inputs: list[Array] | None = None  # tangents of x_k
    du: list[Array] | None = None
    tangent: Array | None = None  # dPhi/dt, (B, M)

    @property
    def has_tangent(self) -> bool:
        return self.du is not None


@dataclass
class PcinrGrads:
    decoder: dict[str, Array]
    film: FiLMVector
    mapping: dict[str, Array] | None = None
    latent: Array | None = None  # (B, latent_dim)


# ---------------------------------------------------------------- init


def init_pcinr(config: PcinrConfig, rng: Rng) -> tuple[PcinrParams, MappingParams]:
    """SIREN-style decoder init (omega0-compensated bounds), He-uniform mapping init, zero biases."""
    dt = real_dtype()
    width = config.hidden_width
    weights: list[Array] = []
    biases: list[Array] = []
    omega0: list[float] = []
    fan_in = 1
    for k in range(config.depth):
        w0 = config.omega0(k)
        bound = 1.0 / fan_in if k == 0 else math.sqrt(6.0 / fan_in) / w0
        weights.append(rng.uniform(-bound, bound, (width, fan_in), dtype=dt))
        biases.append(np.zeros(width, dtype=dt))
        omega0.append(float(w0))
        fan_in = width
    head_bound = math.sqrt(6.0 / width) / config.omega0_hidden
    decoder = PcinrParams(
        weights=weights,
        biases=biases,
        omega0=omega0,
        head_weight=rng.uniform(-head_bound, head_bound, (1, width), dtype=dt),
        head_bias=np.zeros(1, dtype=dt),
    )

    m_weights: list[Array] = []
    m_biases: list[Array] = []
    dims = [config.latent_dim] + [config.mapping_width] * config.mapping_depth + [2 * width]
    for fan, out in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / fan)
        m_weights.append(rng.uniform(-bound, bound, (out, fan), dtype=dt))
        m_biases.append(np.zeros(out, dtype=dt))
    return decoder, MappingParams(weights=m_weights, biases=m_biases)


def count_params(params: PcinrParams, mapping: MappingParams) -> int:
    """Learnable scalars of decoder + mapping network (latent table excluded)."""
    return sum(int(a.size) for a in params.named().values()) + sum(
        int(a.size) for a in mapping.named().values()
    )


# ---------------------------------------------------------------- mapping network


def map_latent_forward(mapping: MappingParams, z: npt.ArrayLike) -> tuple[FiLMVector, MappingCache]:
    z_arr = np.asarray(z)
    if z_arr.ndim == 1:
        z_arr = z_arr[None, :]
    if z_arr.ndim != 2 or z_arr.shape[1] != mapping.latent_dim:  # noqa: PLR2004
        raise ShapeError(f"latent must have {mapping.latent_dim} columns, got shape {z_arr.shape}")
    h = z_arr.astype(mapping.weights[0].dtype, copy=False)
    acts: list[Array] = []
    pre: list[Array] = []
    last = len(mapping.weights) - 1
    for k, (w, b) in enumerate(zip(mapping.weights, mapping.biases)):
        acts.append(h)
        p = h @ w.T + b
        pre.append(p)
        h = p if k == last else np.maximum(p, 0)
    half = h.shape[1] // 2
    film = FiLMVector(gamma=h[:, :half], beta=h[:, half:])
    return film, MappingCache(z=z_arr, pre=pre, acts=acts)


def map_latent(mapping: MappingParams, z: npt.ArrayLike) -> FiLMVector:
    """w = g(z): latent code(s) to the shared FiLM vector."""
    return map_latent_forward(mapping, z)[0]


def map_latent_backward(
    cache: MappingCache, mapping: MappingParams, g_film: FiLMVector
) -> tuple[dict[str, Array], Array]:
    """Gradients of the mapping network and of z given dL/d(gamma, beta)."""
    g = np.concatenate((g_film.gamma, g_film.beta), axis=1)
    if g.shape != cache.pre[-1].shape:
        raise ShapeError(f"FiLM gradient {g.shape} does not match cache {cache.pre[-1].shape}")
    grads: dict[str, Array] = {}
    last = len(mapping.weights) - 1
    for k in range(last, -1, -1):
        if k != last:
            g = g * (cache.pre[k] > 0)
        grads[f"mapping.layer{k}.weight"] = g.T @ cache.acts[k]
        grads[f"mapping.layer{k}.bias"] = g.sum(axis=0)
        g = g @ mapping.weights[k]
    return dict(sorted(grads.items())), g


# ---------------------------------------------------------------- decoder


def _check_film(params: PcinrParams, film: FiLMVector) -> None:
    if film.gamma.ndim != 2 or film.gamma.shape[1] != params.hidden_width:  # noqa: PLR2004
        raise ShapeError(
            f"FiLM vector width {film.gamma.shape} does not match hidden width {params.hidden_width}"
        )


def pcinr_forward(
    params: PcinrParams, film: FiLMVector, coords: npt.ArrayLike, tangent: bool = False
) -> tuple[Array, ForwardCache]:
    """Evaluate Phi at ``coords`` for every FiLM row; returns (B, M) amplitudes.

    With ``tangent`` set, dPhi/dt is propagated in forward mode (seed 1 at the
    input) and stored in ``cache.tangent``.
    """
    _check_film(params, film)
    dt = params.weights[0].dtype
    t = as_real(coords, dt).reshape(-1)
    check_finite("coords", t)
    batch, m = film.batch, t.shape[0]
    gamma = film.gamma.astype(dt, copy=False)[:, None, :]
    beta = film.beta.astype(dt, copy=False)[:, None, :]

    x: Array = np.broadcast_to(t[None, :, None], (batch, m, 1))
    dx: Array | None = np.ones((batch, m, 1), dtype=dt) if tangent else None
    cache = ForwardCache(
        coords=t,
        inputs=[],
        u=[],
        sin_a=[],
        cos_a=[],
        d_inputs=[] if tangent else None,
        du=[] if tangent else None,
    )
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        freq = params.omega0[k] + gamma
        u = x @ w.T + b
        a = freq * u + beta
        s = np.sin(a)
        c = np.cos(a)
        check_finite("sine layer", s, layer=k)
        cache.inputs.append(x)
        cache.u.append(u)
        cache.sin_a.append(s)
        cache.cos_a.append(c)
        if dx is not None:
            assert cache.d_inputs is not None and cache.du is not None
            du = dx @ w.T
            cache.d_inputs.append(dx)
            cache.du.append(du)
            dx = c * freq * du
        x = s
    out = (x @ params.head_weight.T)[..., 0] + params.head_bias[0]
    check_finite("output", out, layer=params.depth)
    if tangent:
        assert dx is not None
        cache.tangent = (dx @ params.head_weight.T)[..., 0]
    return out, cache


def siren_forward(params: PcinrParams, coords: npt.ArrayLike) -> Array:
    """Unconditioned path: sin(omega0 * (W x + b)) per layer, linear head. Returns (M,)."""
    dt = params.weights[0].dtype
    x: Array = as_real(coords, dt).reshape(1, -1, 1)
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        x = np.sin(params.omega0[k] * (x @ w.T + b))
    return (x @ params.head_weight.T)[0, :, 0] + params.head_bias[0]


def _outer_sum(g: Array, x: Array) -> Array:
    """sum over (batch, coord) of g[..., o] x[..., i] -> (o, i)."""
    return g.reshape(-1, g.shape[-1]).T @ x.reshape(-1, x.shape[-1])


def pcinr_backward(  # noqa: PLR0913, PLR0915
    cache: ForwardCache,
    params: PcinrParams,
    film: FiLMVector,
    upstream: npt.ArrayLike,
    upstream_tangent: npt.ArrayLike | None = None,
    mapping: MappingParams | None = None,
    mapping_cache: MappingCache | None = None,
) -> PcinrGrads:
    """Exact gradients of a scalar loss given dL/dPhi and (optionally) dL/d(dPhi/dt).

    When ``mapping`` and ``mapping_cache`` are given the FiLM gradient is
    chained through the mapping network, filling ``mapping`` and ``latent``.
    """
    _check_film(params, film)
    if len(cache.u) != params.depth:
        raise ShapeError(f"cache has {len(cache.u)} layers, params have {params.depth}")
    dt = params.weights[0].dtype
    batch, m = cache.sin_a[-1].shape[:2]
    if film.batch != batch:
        raise ShapeError(f"FiLM batch {film.batch} != cache batch {batch}")
    g_out = np.asarray(upstream, dtype=dt)
    if g_out.shape != (batch, m):
        raise ShapeError(f"upstream shape {g_out.shape} != ({batch}, {m})")
    g_tan: Array | None = None
    if upstream_tangent is not None:
        if not cache.has_tangent:
            raise ShapeError("upstream_tangent given but the forward pass ran without tangent mode")
        g_tan = np.asarray(upstream_tangent, dtype=dt)
        if g_tan.shape != (batch, m):
            raise ShapeError(f"upstream_tangent shape {g_tan.shape} != ({batch}, {m})")

    grads: dict[str, Array] = {}
    gamma = film.gamma.astype(dt, copy=False)[:, None, :]
    head_w = params.head_weight[0]
    grads["decoder.head.weight"] = _outer_sum(g_out[..., None], cache.sin_a[-1])
    grads["decoder.head.bias"] = np.array([g_out.sum()], dtype=dt)
    g_y = g_out[..., None] * head_w
    g_dy: Array | None = None
    if g_tan is not None:
        assert cache.du is not None
        dy_last = cache.cos_a[-1] * (params.omega0[-1] + gamma) * cache.du[-1]
        grads["decoder.head.weight"] += _outer_sum(g_tan[..., None], dy_last)
        g_dy = g_tan[..., None] * head_w

    g_gamma = np.zeros(film.gamma.shape, dtype=dt)
    g_beta = np.zeros(film.beta.shape, dtype=dt)
    for k in range(params.depth - 1, -1, -1):
        freq = params.omega0[k] + gamma
        s, c, u = cache.sin_a[k], cache.cos_a[k], cache.u[k]
        g_a = g_y * c
        g_du: Array | None = None
        if g_dy is not None:
            assert cache.du is not None
            du = cache.du[k]
            # dy = cos(a) * freq * du
            g_dy_c = g_dy * c
            g_a = g_a - g_dy * s * freq * du
            g_gamma += (g_dy_c * du).sum(axis=1)
            g_du = g_dy_c * freq
        g_gamma += (g_a * u).sum(axis=1)
        g_beta += g_a.sum(axis=1)
        g_u = g_a * freq
        g_w = _outer_sum(g_u, cache.inputs[k])
        g_b = g_u.sum(axis=(0, 1))
        if g_du is not None:
            assert cache.d_inputs is not None
            g_w += _outer_sum(g_du, cache.d_inputs[k])
        grads[f"decoder.sine{k}.weight"] = g_w
        grads[f"decoder.sine{k}.bias"] = g_b
        if k > 0:
            w = params.weights[k]
            g_y = g_u @ w
            g_dy = g_du @ w if g_du is not None else None

    result = PcinrGrads(decoder=dict(sorted(grads.items())), film=FiLMVector(g_gamma, g_beta))
    if mapping is not None and mapping_cache is not None:
        result.mapping, result.latent = map_latent_backward(mapping_cache, mapping, result.film)
    return result
