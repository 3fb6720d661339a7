"""Seeded mini-batch gradient descent for the regularized objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import Dataset
from .errors import DivergenceError, ValidationError
from .models import LossKind, _check_weights, _perturb_terms
from .privacy import PerturbationVector
from .seeding import as_generator


@dataclass(frozen=True)
class OptimizerConfig:
    """batch_size=None trains full batch; tolerance=0 disables early stop."""

    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int | None = 64
    tolerance: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0.0):
            raise ValidationError(
                "learning_rate", f"learning_rate must be > 0, got {self.learning_rate}"
            )
        if not (isinstance(self.epochs, (int, np.integer)) and self.epochs >= 0):
            raise ValidationError("epochs", f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size is not None and not (
            isinstance(self.batch_size, (int, np.integer)) and self.batch_size >= 1
        ):
            raise ValidationError(
                "batch_size", f"batch_size must be >= 1 or None, got {self.batch_size}"
            )
        if not (np.isfinite(self.tolerance) and self.tolerance >= 0.0):
            raise ValidationError(
                "tolerance", f"tolerance must be >= 0, got {self.tolerance}"
            )
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValidationError("seed", f"seed must be a non-negative int, got {self.seed}")


@dataclass(frozen=True)
class TrainResult:
    weights: np.ndarray
    loss_history: tuple[float, ...]
    converged: bool
    epochs_run: int


def has_converged(history, tolerance: float) -> bool:
    """Relative-improvement stop: |l_t - l_{t-1}| / max(l_{t-1}, 1e-12) < tol."""
    if len(history) < 2:
        return False
    prev, last = history[-2], history[-1]
    return abs(last - prev) / max(prev, 1e-12) < tolerance


def minimize(
    data: Dataset,
    kind: LossKind,
    lam: float,
    perturb: PerturbationVector | None,
    w0: np.ndarray,
    config: OptimizerConfig,
) -> TrainResult:
    """Run mini-batch GD from w0; the epoch loss drives the early stop.

    Identical inputs give bit-identical results. Full-batch epochs draw no
    permutation, so the RNG stream is untouched and a chain of full-batch
    runs equals one longer run step for step.
    """
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValidationError("lam", f"lam must be > 0, got {lam}")
    w = np.array(_check_weights(w0, data.dim), copy=True)
    delta, b_over_n = _perturb_terms(perturb, data.dim, len(data))
    loss_id, h = kind.kernel_args
    lam_eff = lam + delta

    n = len(data)
    batch = n if config.batch_size is None else min(int(config.batch_size), n)
    full_batch = batch >= n
    rng = as_generator(config.seed)
    identity = np.arange(n, dtype=np.int64)

    history: list[float] = []
    converged = False
    for epoch in range(config.epochs):
        if full_batch:
            order = identity
        else:
            order = rng.permutation(n).astype(np.int64, copy=False)
        _kernels.sgd_epoch(
            data.X, data.y, w, order, batch, config.learning_rate,
            loss_id, h, lam_eff, b_over_n,
        )
        loss = float(
            _kernels.objective_value(data.X, data.y, w, loss_id, h, lam_eff, b_over_n)
        )
        if not math.isfinite(loss):
            raise DivergenceError(
                f"non-finite training loss at epoch {epoch}", epoch=epoch
            )
        history.append(loss)
        if has_converged(history, config.tolerance):
            converged = True
            break

    w.flags.writeable = False
    return TrainResult(
        weights=w,
        loss_history=tuple(history),
        converged=converged,
        epochs_run=len(history),
    )
