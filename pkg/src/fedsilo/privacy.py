"""Objective perturbation for epsilon-differentially-private ERM.

The mechanism releases the minimizer of the perturbed objective

    F(w) = (1/n) sum_i loss(y_i <w, x_i>) + (lam/2)||w||^2
           + (delta/2)||w||^2 + <b, w> / n

where b is drawn with density proportional to exp(-(eps'/2) ||b||) and eps'
is the budget left after accounting for the curvature of the loss
(Chaudhuri, Monteleoni and Sarwate, "Differentially Private Empirical Risk
Minimization", JMLR 2011, Algorithm 2). The guarantee needs every loss to be
convex and doubly differentiable with |loss'| <= 1 and loss'' <= c, every
feature row inside the unit L2 ball, and lam > 0 for strong convexity.

Budget accounting, for smoothness bound c and per-site sample count n:

    eps' = eps - ln(1 + 2c/(n lam) + c^2 / (n^2 lam^2))

If eps' <= 0 the regularizer is too weak for the requested budget; the
mechanism then adds extra quadratic regularization

    delta = c / (n (e^{eps/4} - 1)) - lam,   eps' = eps / 2.

The noise direction is uniform on the sphere (normalized isotropic
Gaussian); the norm is Gamma(shape=dim, scale=2/eps'), which makes the
vector's density proportional to exp(-(eps'/2)||b||).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import PreconditionError, ValidationError
from .models import LossKind, smoothness_bound
from .seeding import RngLike, as_generator

# Slack on the unit-ball precondition; preprocessing guarantees <= 1 exactly,
# the slack only absorbs round-off in externally scaled data.
NORM_SLACK = 1e-9


@dataclass(frozen=True)
class PrivacyParams:
    """Requested per-site budget and the regularization it assumes.

    A passive container: values are validated where they are consumed
    (compute_slack raises, validate_preconditions reports), so that the
    report path can describe bad parameters instead of refusing to exist.
    """

    epsilon: float
    lam: float


@dataclass(frozen=True)
class PerturbationVector:
    """One site's sampled perturbation: linear term b, extra quadratic
    regularization delta, and the post-slack budget epsilon_eff."""

    b: np.ndarray
    delta: float
    epsilon_eff: float

    def __post_init__(self):
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        if b.ndim != 1 or b.shape[0] < 1:
            raise ValidationError("b", "perturbation must be a non-empty vector")
        if not np.all(np.isfinite(b)):
            raise ValidationError("b", "perturbation must be finite")
        if not (np.isfinite(self.delta) and self.delta >= 0.0):
            raise ValidationError("delta", f"delta must be >= 0, got {self.delta}")
        if not (np.isfinite(self.epsilon_eff) and self.epsilon_eff > 0.0):
            raise ValidationError(
                "epsilon_eff", f"epsilon_eff must be > 0, got {self.epsilon_eff}"
            )
        b.flags.writeable = False
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class PreconditionReport:
    ok: bool
    violations: tuple[str, ...]

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise PreconditionError(self.violations)


def compute_slack(epsilon: float, c: float, n: int, lam: float) -> tuple[float, float]:
    """Split the budget: returns (epsilon_eff, delta).

    epsilon_eff is what remains for the noise after the curvature term
    ln(1 + 2q + q^2) with q = c/(n lam); delta is the extra quadratic
    regularization, 0 unless the remaining budget would be non-positive.
    ln(1 + 2q + q^2) is evaluated as 2 log1p(q), which is exact in exact
    arithmetic and avoids forming 1 + 2q + q^2.
    """
    if not (np.isfinite(epsilon) and epsilon > 0.0):
        raise ValidationError("epsilon", f"epsilon must be > 0, got {epsilon}")
    if not (np.isfinite(c) and c > 0.0):
        raise ValidationError("c", f"smoothness bound must be > 0, got {c}")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError("n", f"n must be a positive integer, got {n}")
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValidationError("lam", f"lam must be > 0, got {lam}")
    q = c / (n * lam)
    epsilon_eff = epsilon - 2.0 * math.log1p(q)
    if epsilon_eff > 0.0:
        return epsilon_eff, 0.0
    delta = c / (n * math.expm1(epsilon / 4.0)) - lam
    return epsilon / 2.0, delta


def sample_noise(
    dim: int, epsilon_eff: float, seed: RngLike, size: int | None = None
) -> np.ndarray:
    """Draw b with density proportional to exp(-(eps'/2) ||b||).

    Norm ~ Gamma(shape=dim, scale=2/eps'); direction uniform on the sphere.
    With `size` given, returns (size, dim) independent draws from one
    stream. size=None is exactly size=1 with the row dimension dropped;
    batches of different sizes are not prefixes of each other (all radii
    are drawn before all directions).
    """
    if not (isinstance(dim, (int, np.integer)) and dim >= 1):
        raise ValidationError("dim", f"dim must be a positive integer, got {dim}")
    if not (np.isfinite(epsilon_eff) and epsilon_eff > 0.0):
        raise ValidationError(
            "epsilon_eff", f"epsilon_eff must be > 0, got {epsilon_eff}"
        )
    if size is not None and size < 1:
        raise ValidationError("size", f"size must be >= 1, got {size}")
    rng = as_generator(seed)
    count = 1 if size is None else int(size)
    radii = rng.gamma(shape=dim, scale=2.0 / epsilon_eff, size=count)
    direction = rng.standard_normal((count, dim))
    norms = np.linalg.norm(direction, axis=1)
    while np.any(norms == 0.0):  # measure-zero; redraw deterministically
        zero = norms == 0.0
        direction[zero] = rng.standard_normal((int(zero.sum()), dim))
        norms = np.linalg.norm(direction, axis=1)
    out = direction * (radii / norms)[:, None]
    return out[0] if size is None else out


def make_perturbation(
    params: PrivacyParams, kind: LossKind, n: int, dim: int, seed: RngLike
) -> PerturbationVector:
    """Calibrate and sample one site's perturbation for n local examples."""
    c = smoothness_bound(kind)
    epsilon_eff, delta = compute_slack(params.epsilon, c, n, params.lam)
    b = sample_noise(dim, epsilon_eff, seed)
    return PerturbationVector(b=b, delta=delta, epsilon_eff=epsilon_eff)


def validate_preconditions(
    data: Dataset, params: PrivacyParams, kind: LossKind
) -> PreconditionReport:
    """Check the mechanism's requirements on one site's training set."""
    violations: list[str] = []
    if not (np.isfinite(params.epsilon) and params.epsilon > 0.0):
        violations.append(f"epsilon must be > 0, got {params.epsilon}")
    if not (np.isfinite(params.lam) and params.lam > 0.0):
        violations.append(
            f"lam must be > 0 for strong convexity, got {params.lam}"
        )
    norms = np.sqrt(np.einsum("ij,ij->i", data.X, data.X))
    worst = int(np.argmax(norms))
    if norms[worst] > 1.0 + NORM_SLACK:
        violations.append(
            f"row {worst} has L2 norm {norms[worst]:.6g} > 1; "
            "rescale features to the unit ball first"
        )
    if not np.isfinite(smoothness_bound(kind)):
        violations.append(f"loss {kind.label} has no finite smoothness bound")
    return PreconditionReport(ok=not violations, violations=tuple(violations))
