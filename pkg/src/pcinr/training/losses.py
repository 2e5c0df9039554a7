"""Reconstruction objective: amplitude MSE + derivative MSE, and decoder weight regularization.

The derivative target is the forward difference of the target divided by the
coordinate spacing, so it shares units with the analytic tangent dPhi/dt.
The last coordinate has no forward difference and does not enter the term.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, MutableMapping
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from pcinr.errors import ShapeError

__all__ = [
    "LossBreakdown",
    "coordinate_grid",
    "grid_spacing",
    "reconstruction_loss",
    "weight_reg_term",
]

Array = npt.NDArray[Any]


@dataclass(frozen=True)
class LossBreakdown:
    mse_term: float
    derivative_term: float
    wr_term: float
    total: float

    @classmethod
    def of(cls, mse_term: float, derivative_term: float = 0.0, wr_term: float = 0.0) -> LossBreakdown:
        return cls(mse_term, derivative_term, wr_term, mse_term + derivative_term + wr_term)

    @classmethod
    def weighted_mean(cls, parts: Iterable[tuple[LossBreakdown, float]]) -> LossBreakdown:
        items = list(parts)
        weight = sum(w for _, w in items)
        if weight <= 0:
            raise ValueError("weighted_mean needs a positive total weight")
        m = sum(b.mse_term * w for b, w in items) / weight
        d = sum(b.derivative_term * w for b, w in items) / weight
        r = sum(b.wr_term * w for b, w in items) / weight
        return cls.of(m, d, r)

    def as_row(self) -> dict[str, float]:
        return {"mse": self.mse_term, "deriv": self.derivative_term, "wr": self.wr_term, "total": self.total}


def coordinate_grid(
    sample_count: int, duration_fraction: float = 1.0, dtype: npt.DTypeLike = np.float64
) -> Array:
    """t_j = -1 + 2 j * fraction / (M - 1); fraction 1 spans [-1, 1]."""
    if sample_count < 2:  # noqa: PLR2004
        raise ShapeError(f"sample_count must be >= 2, got {sample_count}")
    if not 0.0 < duration_fraction <= 1.0:
        raise ValueError(f"duration_fraction must lie in (0, 1], got {duration_fraction}")
    j = np.arange(sample_count, dtype=np.float64)
    t = -1.0 + (2.0 * duration_fraction * j) / (sample_count - 1)
    return t.astype(dtype)


def grid_spacing(sample_count: int) -> float:
    return 2.0 / (sample_count - 1)


def reconstruction_loss(
    pred: npt.ArrayLike,
    pred_tangent: npt.ArrayLike | None,
    target: npt.ArrayLike | Any,
    grid: npt.ArrayLike | None = None,
    *,
    derivative: bool = True,
) -> tuple[LossBreakdown, Array, Array | None]:
    """Loss terms plus dL/dpred and dL/dtangent (float64).

    With ``pred_tangent`` absent and ``derivative`` set, the prediction
    derivative is the forward difference of ``pred`` itself and its gradient
    lands on both neighbouring samples; the returned tangent gradient is None.
    """
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    a = np.asarray(getattr(target, "samples", target), dtype=np.float64).reshape(-1)
    m = a.shape[0]
    if p.shape[0] != m:
        raise ShapeError(f"prediction has {p.shape[0]} samples, target {m}")
    if m < 2:  # noqa: PLR2004
        raise ShapeError("reconstruction_loss needs at least two samples")
    if grid is not None and np.asarray(grid).reshape(-1).shape[0] != m:
        raise ShapeError(f"grid has {np.asarray(grid).size} coordinates, target {m}")

    diff = p - a
    mse_term = float(np.dot(diff, diff) / m)
    g_pred = (2.0 / m) * diff
    if not derivative:
        return LossBreakdown.of(mse_term), g_pred, None

    dt = grid_spacing(m)
    target_slope = np.diff(a) / dt
    if pred_tangent is not None:
        tan = np.asarray(pred_tangent, dtype=np.float64).reshape(-1)
        if tan.shape[0] != m:
            raise ShapeError(f"tangent has {tan.shape[0]} samples, target {m}")
        r = tan[:-1] - target_slope
        g_tan = np.zeros(m, dtype=np.float64)
        g_tan[:-1] = (2.0 / (m - 1)) * r
        deriv_term = float(np.dot(r, r) / (m - 1))
        return LossBreakdown.of(mse_term, deriv_term), g_pred, g_tan

    r = np.diff(p) / dt - target_slope
    deriv_term = float(np.dot(r, r) / (m - 1))
    g_r = (2.0 / (m - 1)) * r / dt
    g_pred[1:] += g_r
    g_pred[:-1] -= g_r
    return LossBreakdown.of(mse_term, deriv_term), g_pred, None


def weight_reg_term(
    params: Mapping[str, Array],
    weight_names: Iterable[str],
    lam: float,
    grads: MutableMapping[str, Array] | None = None,
) -> float:
    """(lam / 2) * sum ||W||^2 over ``weight_names``; adds lam * W into ``grads`` when given."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if lam == 0:
        return 0.0
    total = 0.0
    for name in weight_names:
        w = params[name]
        total += float(np.sum(np.square(w, dtype=np.float64)))
        if grads is not None:
            if name in grads:
                grads[name] += (lam * w).astype(grads[name].dtype, copy=False)
            else:
                grads[name] = lam * w
    return 0.5 * lam * total
