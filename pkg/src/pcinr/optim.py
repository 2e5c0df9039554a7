"""Adam and AdaBelief over named parameter dicts.

Parameters are updated in place so containers (``PcinrParams``...) that hand
out views through ``named()`` see the new values.

Row-sparse tensors (the latent table) keep one step counter per row; a step
with ``rows`` given only touches those rows and their moments, so untouched
latent codes stay bit-identical.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import numpy.typing as npt

from pcinr.errors import NonFiniteError, ShapeError

__all__ = [
    "OptimState",
    "OptimizerName",
    "adabelief_step",
    "adam_step",
    "init_optim_state",
    "optimizer_step",
]

Array = npt.NDArray[Any]
OptimizerName = Literal["adabelief", "adam"]


@dataclass
class OptimState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: dict[str, Array] = field(default_factory=dict)
    # second moment v (Adam) or belief s (AdaBelief)
    v: dict[str, Array] = field(default_factory=dict)
    # () for dense tensors, (rows,) for row-sparse tensors
    t: dict[str, Array] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")

    def hyper(self) -> dict[str, float]:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def init_optim_state(
    params: Mapping[str, Array],
    lr: float,
    *,
    row_sparse: tuple[str, ...] = (),
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> OptimState:
    state = OptimState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    for name, p in params.items():
        state.m[name] = np.zeros_like(p)
        state.v[name] = np.zeros_like(p)
        shape = (p.shape[0],) if name in row_sparse else ()
        state.t[name] = np.zeros(shape, dtype=np.int64)
    return state


def _check(state: OptimState, params: Mapping[str, Array], grads: Mapping[str, Array]) -> None:
    for name, g in grads.items():
        if name not in params or name not in state.m:
            raise ShapeError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape and state.t[name].ndim == 0:
            raise ShapeError(f"gradient {name!r} shape {g.shape} != {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient", parameter=name)


def _step(
    kind: OptimizerName,
    state: OptimState,
    params: Mapping[str, Array],
    grads: Mapping[str, Array],
    rows: Mapping[str, npt.NDArray[np.integer[Any]]] | None,
) -> None:
    _check(state, params, grads)
    b1, b2, eps, lr = state.beta1, state.beta2, state.eps, state.lr
    for name in sorted(grads):
        g = grads[name]
        p, m, v, t = params[name], state.m[name], state.v[name], state.t[name]
        idx = rows.get(name) if rows is not None else None
        if idx is not None:
            idx = np.asarray(idx, dtype=np.int64)
            if len(np.unique(idx)) != len(idx):
                raise ShapeError(f"duplicate rows in sparse update of {name!r}")
            if g.shape != (len(idx), *p.shape[1:]):
                raise ShapeError(f"row gradient {name!r} shape {g.shape} does not match rows")
            t[idx] += 1
            steps = t[idx].reshape(-1, *([1] * (p.ndim - 1)))
            m_r = b1 * m[idx] + (1 - b1) * g
            if kind == "adam":
                v_r = b2 * v[idx] + (1 - b2) * g * g
            else:
                v_r = b2 * v[idx] + (1 - b2) * (g - m_r) ** 2 + eps
            m_hat = m_r / (1 - b1**steps)
            v_hat = v_r / (1 - b2**steps)
            m[idx] = m_r
            v[idx] = v_r
            p[idx] -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype, copy=False)
            continue
        if t.ndim != 0:
            t += 1  # row-sparse tensor updated densely
            steps = t.reshape(-1, *([1] * (p.ndim - 1)))
        else:
            t += 1
            steps = t
        m *= b1
        m += (1 - b1) * g
        if kind == "adam":
            v *= b2
            v += (1 - b2) * g * g
        else:
            v *= b2
            v += (1 - b2) * (g - m) ** 2 + eps
        m_hat = m / (1 - b1**steps)
        v_hat = v / (1 - b2**steps)
        p -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype, copy=False)


def adam_step(
    state: OptimState,
    params: Mapping[str, Array],
    grads: Mapping[str, Array],
    rows: Mapping[str, npt.NDArray[np.integer[Any]]] | None = None,
) -> OptimState:
    """One Adam update: bias-corrected first/second moments."""
    _step("adam", state, params, grads, rows)
    return state


def adabelief_step(
    state: OptimState,
    params: Mapping[str, Array],
    grads: Mapping[str, Array],
    rows: Mapping[str, npt.NDArray[np.integer[Any]]] | None = None,
) -> OptimState:
    """One AdaBelief update: second moment tracks (g - m)^2 + eps instead of g^2."""
    _step("adabelief", state, params, grads, rows)
    return state


def optimizer_step(
    kind: OptimizerName,
    state: OptimState,
    params: Mapping[str, Array],
    grads: Mapping[str, Array],
    rows: Mapping[str, npt.NDArray[np.integer[Any]]] | None = None,
) -> OptimState:
    if kind == "adam":
        return adam_step(state, params, grads, rows)
    if kind == "adabelief":
        return adabelief_step(state, params, grads, rows)
    raise ValueError(f"unknown optimizer: {kind}")
