"""Backend selection for the training kernels.

FEDSILO_BACKEND controls which implementation is used:
  auto      compiled extension if importable, numpy fallback otherwise (default)
  compiled  require the Cython extension, fail loudly if missing
  python    force the numpy fallback

Both backends expose the same functions with identical semantics; results
agree to floating-point tolerance (see benchmarks/bench_backends.py).
"""

from __future__ import annotations

import os

_requested = os.environ.get("FEDSILO_BACKEND", "auto")
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(
        f"FEDSILO_BACKEND must be 'auto', 'compiled' or 'python', got {_requested!r}"
    )

if _requested == "python":
    from . import _purepy as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _purepy as _impl  # type: ignore[no-redef]

        BACKEND = "python"

LOGISTIC = 0
HUBER_HINGE = 1
SMOOTHED_PERCEPTRON = 2

loss_values = _impl.loss_values
loss_derivs = _impl.loss_derivs
objective_value = _impl.objective_value
objective_grad = _impl.objective_grad
sgd_epoch = _impl.sgd_epoch

__all__ = [
    "BACKEND",
    "LOGISTIC",
    "HUBER_HINGE",
    "SMOOTHED_PERCEPTRON",
    "loss_values",
    "loss_derivs",
    "objective_value",
    "objective_grad",
    "sgd_epoch",
]
