"""Linear binary classifiers on {-1, +1} labels.

A model is a weight vector w; the decision rule is sign(<w, x>) with ties
going to +1. Training minimizes the regularized empirical risk

    F(w) = (1/n) sum_i loss(y_i <w, x_i>) + (lam/2) ||w||^2

optionally plus a privacy perturbation term (delta/2) ||w||^2 + <b, w> / n.

All three loss kinds are convex, differentiable upper bounds on the 0-1
loss with |loss'| <= 1 and a finite smoothness bound, which is what the
privacy layer's noise calibration relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import _kernels
from .dataset import Dataset
from .errors import DimensionMismatchError, ValidationError

if TYPE_CHECKING:
    from .privacy import PerturbationVector

_KERNEL_IDS = {
    "logistic": _kernels.LOGISTIC,
    "huber_hinge": _kernels.HUBER_HINGE,
    "smoothed_perceptron": _kernels.SMOOTHED_PERCEPTRON,
}

# CLI-facing aliases; "svm" is the huber-smoothed hinge, "perceptron" the
# smoothed perceptron loss.
_PARSE_ALIASES = {
    "logistic": "logistic",
    "svm": "huber_hinge",
    "huber_hinge": "huber_hinge",
    "perceptron": "smoothed_perceptron",
    "smoothed_perceptron": "smoothed_perceptron",
}

_SHORT_NAMES = {
    "logistic": "logistic",
    "huber_hinge": "svm",
    "smoothed_perceptron": "perceptron",
}

DEFAULT_H = 0.5


@dataclass(frozen=True)
class LossKind:
    """A loss family, with smoothing width h for the piecewise kinds.

    logistic:            log(1 + exp(-z)); h unused.
    huber_hinge:         0 for z > 1+h; (1+h-z)^2/(4h) for |1-z| <= h;
                         1-z for z < 1-h.
    smoothed_perceptron: 0 for z > h; (h-z)^2/(4h) for |z| <= h;
                         -z for z < -h.
    """

    name: str
    h: float | None = None

    def __post_init__(self):
        if self.name not in _KERNEL_IDS:
            raise ValidationError("name", f"unknown loss kind {self.name!r}")
        if self.name == "logistic":
            if self.h is not None:
                raise ValidationError("h", "logistic loss takes no smoothing width")
        else:
            if self.h is None or not (0.0 < self.h <= 1.0):
                raise ValidationError("h", f"h must be in (0, 1], got {self.h}")

    @staticmethod
    def logistic() -> "LossKind":
        return LossKind("logistic")

    @staticmethod
    def huber_hinge(h: float = DEFAULT_H) -> "LossKind":
        return LossKind("huber_hinge", h)

    @staticmethod
    def smoothed_perceptron(h: float = DEFAULT_H) -> "LossKind":
        return LossKind("smoothed_perceptron", h)

    @staticmethod
    def parse(text: str, h: float | None = None) -> "LossKind":
        key = text.strip().lower()
        if key not in _PARSE_ALIASES:
            raise ValidationError(
                "loss", f"unknown loss {text!r}; expected one of {sorted(_PARSE_ALIASES)}"
            )
        name = _PARSE_ALIASES[key]
        if name == "logistic":
            return LossKind.logistic()
        return LossKind(name, DEFAULT_H if h is None else h)

    @property
    def label(self) -> str:
        """Stable report label, e.g. 'logistic' or 'svm(h=0.5)'."""
        short = _SHORT_NAMES[self.name]
        if self.name == "logistic":
            return short
        return f"{short}(h={self.h!r})"

    @property
    def kernel_args(self) -> tuple[int, float]:
        return _KERNEL_IDS[self.name], 0.0 if self.h is None else self.h


def loss_value(kind: LossKind, z):
    """Loss at margin z; z may be a scalar or an array."""
    loss_id, h = kind.kernel_args
    arr = np.ascontiguousarray(np.atleast_1d(z), dtype=np.float64)
    out = _kernels.loss_values(arr.ravel(), loss_id, h).reshape(arr.shape)
    if np.isscalar(z) or np.ndim(z) == 0:
        return float(out[0])
    return out


def loss_grad(kind: LossKind, z):
    """dloss/dz at margin z; z may be a scalar or an array."""
    loss_id, h = kind.kernel_args
    arr = np.ascontiguousarray(np.atleast_1d(z), dtype=np.float64)
    out = _kernels.loss_derivs(arr.ravel(), loss_id, h).reshape(arr.shape)
    if np.isscalar(z) or np.ndim(z) == 0:
        return float(out[0])
    return out


def smoothness_bound(kind: LossKind) -> float:
    """Upper bound c on loss''; drives the privacy budget slack."""
    if kind.name == "logistic":
        return 0.25
    return 1.0 / (2.0 * kind.h)


def _check_lam(lam: float) -> None:
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValidationError("lam", f"lam must be > 0, got {lam}")


def _check_weights(w: np.ndarray, dim: int) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != dim:
        raise DimensionMismatchError(
            "weights do not match data", expected=dim, actual=int(np.size(w))
        )
    if not np.all(np.isfinite(w)):
        raise ValidationError("w", "weights must be finite")
    return w


def _perturb_terms(
    perturb: "PerturbationVector | None", dim: int, n: int
) -> tuple[float, np.ndarray | None]:
    if perturb is None:
        return 0.0, None
    b = np.ascontiguousarray(perturb.b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != dim:
        raise DimensionMismatchError(
            "perturbation does not match data", expected=dim, actual=int(np.size(b))
        )
    return float(perturb.delta), b / n


def objective(
    w: np.ndarray,
    data: Dataset,
    kind: LossKind,
    lam: float,
    perturb: "PerturbationVector | None" = None,
) -> float:
    """Regularized training objective, perturbed when `perturb` is given."""
    _check_lam(lam)
    w = _check_weights(w, data.dim)
    delta, b_over_n = _perturb_terms(perturb, data.dim, len(data))
    loss_id, h = kind.kernel_args
    return float(
        _kernels.objective_value(data.X, data.y, w, loss_id, h, lam + delta, b_over_n)
    )


def objective_grad(
    w: np.ndarray,
    data: Dataset,
    kind: LossKind,
    lam: float,
    perturb: "PerturbationVector | None" = None,
) -> np.ndarray:
    """Gradient of `objective` with respect to w."""
    _check_lam(lam)
    w = _check_weights(w, data.dim)
    delta, b_over_n = _perturb_terms(perturb, data.dim, len(data))
    loss_id, h = kind.kernel_args
    return _kernels.objective_grad(data.X, data.y, w, loss_id, h, lam + delta, b_over_n)


def predict(w: np.ndarray, x: np.ndarray) -> int:
    """Label for one example: sign(<w, x>), ties to +1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != w.shape[0]:
        raise DimensionMismatchError(
            "example does not match weights", expected=int(w.shape[0]), actual=int(x.size)
        )
    return 1 if float(x @ w) >= 0.0 else -1


def predict_batch(w: np.ndarray, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != w.shape[0]:
        raise DimensionMismatchError(
            "examples do not match weights", expected=int(w.shape[0]), actual=int(X.shape[-1])
        )
    return np.where(X @ w >= 0.0, 1, -1).astype(np.int64)


def _check_label_pair(predictions, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(predictions)
    true = np.asarray(truth)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValidationError(
            "predictions", f"shape mismatch: predictions {pred.shape}, truth {true.shape}"
        )
    if pred.size == 0:
        raise ValidationError("predictions", "metrics need at least one pair")
    for name, arr in (("predictions", pred), ("truth", true)):
        if not np.all(np.abs(arr.astype(np.float64)) == 1.0):
            raise ValidationError(name, f"{name} must contain only -1/+1")
    return pred, true


def confusion_counts(predictions, truth) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with +1 as the positive class."""
    pred, true = _check_label_pair(predictions, truth)
    pos_pred = pred > 0
    pos_true = true > 0
    tp = int(np.sum(pos_pred & pos_true))
    fp = int(np.sum(pos_pred & ~pos_true))
    fn = int(np.sum(~pos_pred & pos_true))
    tn = int(np.sum(~pos_pred & ~pos_true))
    return tp, fp, fn, tn


def precision_score(predictions, truth) -> float:
    tp, fp, _, _ = confusion_counts(predictions, truth)
    return tp / (tp + fp) if tp + fp > 0 else 0.0


def recall_score(predictions, truth) -> float:
    tp, _, fn, _ = confusion_counts(predictions, truth)
    return tp / (tp + fn) if tp + fn > 0 else 0.0


def f1_score(predictions, truth) -> float:
    tp, fp, fn, _ = confusion_counts(predictions, truth)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0
