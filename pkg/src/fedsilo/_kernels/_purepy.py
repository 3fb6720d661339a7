"""Reference numpy backend for the training kernels.

Mirrors the compiled backend in `_core.pyx` function for function; both are
selected through `fedsilo._kernels`. Branch boundaries (which piece of a
piecewise loss an exact boundary point falls into) are written identically
in both backends so the two agree everywhere, not just almost everywhere.
"""

from __future__ import annotations

import numpy as np

LOGISTIC = 0
HUBER_HINGE = 1
SMOOTHED_PERCEPTRON = 2


def loss_values(z: np.ndarray, loss_id: int, h: float) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if loss_id == LOGISTIC:
        return np.logaddexp(0.0, -z)
    if loss_id == HUBER_HINGE:
        t = 1.0 + h - z
        quad = t * t / (4.0 * h)
        return np.where(z > 1.0 + h, 0.0, np.where(z < 1.0 - h, 1.0 - z, quad))
    if loss_id == SMOOTHED_PERCEPTRON:
        t = h - z
        quad = t * t / (4.0 * h)
        return np.where(z > h, 0.0, np.where(z < -h, -z, quad))
    raise ValueError(f"unknown loss id {loss_id}")


def loss_derivs(z: np.ndarray, loss_id: int, h: float) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if loss_id == LOGISTIC:
        # -sigmoid(-z), computed as -exp(-logaddexp(0, z)) for stability.
        return -np.exp(-np.logaddexp(0.0, z))
    if loss_id == HUBER_HINGE:
        slope = -(1.0 + h - z) / (2.0 * h)
        return np.where(z > 1.0 + h, 0.0, np.where(z < 1.0 - h, -1.0, slope))
    if loss_id == SMOOTHED_PERCEPTRON:
        slope = -(h - z) / (2.0 * h)
        return np.where(z > h, 0.0, np.where(z < -h, -1.0, slope))
    raise ValueError(f"unknown loss id {loss_id}")


def objective_value(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    loss_id: int,
    h: float,
    lam_eff: float,
    b_over_n: np.ndarray | None,
) -> float:
    z = (X @ w) * y
    value = float(np.mean(loss_values(z, loss_id, h)))
    value += 0.5 * lam_eff * float(w @ w)
    if b_over_n is not None:
        value += float(b_over_n @ w)
    return value


def objective_grad(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    loss_id: int,
    h: float,
    lam_eff: float,
    b_over_n: np.ndarray | None,
) -> np.ndarray:
    n = X.shape[0]
    z = (X @ w) * y
    coef = loss_derivs(z, loss_id, h) * y / n
    grad = X.T @ coef + lam_eff * w
    if b_over_n is not None:
        grad += b_over_n
    return grad


def sgd_epoch(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    order: np.ndarray,
    batch_size: int,
    lr: float,
    loss_id: int,
    h: float,
    lam_eff: float,
    b_over_n: np.ndarray | None,
) -> None:
    """One pass over `order` in mini-batches, updating w in place."""
    n = order.shape[0]
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        Xb = X[idx]
        yb = y[idx]
        z = (Xb @ w) * yb
        coef = loss_derivs(z, loss_id, h) * yb / idx.shape[0]
        grad = Xb.T @ coef + lam_eff * w
        if b_over_n is not None:
            grad += b_over_n
        w -= lr * grad
