"""In-memory dataset container for binary linear classification."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .errors import ValidationError


class Dataset:
    """A feature matrix with {-1, +1} labels.

    X is (n, dim) float64, C-contiguous; y is (n,) float64 with values in
    {-1.0, +1.0}. Both arrays are private copies and marked read-only, so a
    Dataset never aliases caller memory and never changes after construction.
    """

    __slots__ = ("X", "y")

    def __init__(self, X: np.ndarray, y: np.ndarray):
        X = np.array(X, dtype=np.float64, order="C", copy=True)
        y = np.array(y, dtype=np.float64, copy=True)
        if X.ndim != 2:
            raise ValidationError("X", f"X must be 2-dimensional, got ndim={X.ndim}")
        if X.shape[0] < 1:
            raise ValidationError("X", "dataset must contain at least one example")
        if X.shape[1] < 1:
            raise ValidationError("X", "dataset must have at least one feature")
        if y.shape != (X.shape[0],):
            raise ValidationError(
                "y", f"label vector has shape {y.shape}, expected ({X.shape[0]},)"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError("X", "features must be finite")
        if not np.all(np.abs(y) == 1.0):
            bad = np.flatnonzero(np.abs(y) != 1.0)[0]
            raise ValidationError("y", f"labels must be -1 or +1, got {y[bad]} at index {bad}")
        X.flags.writeable = False
        y.flags.writeable = False
        self.X = X
        self.y = y

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def positive_rate(self) -> float:
        return float(np.mean(self.y > 0))

    def max_row_norm(self) -> float:
        return float(np.sqrt(np.max(np.einsum("ij,ij->i", self.X, self.X))))

    def subset(self, indices: np.ndarray) -> "Dataset":
        """A new Dataset holding the given rows, in the given order."""
        indices = np.asarray(indices, dtype=np.intp)
        n = len(self)
        if indices.size == 0:
            raise ValidationError("indices", "subset must be non-empty")
        if indices.min() < 0 or indices.max() >= n:
            raise ValidationError("indices", f"subset indices out of range [0, {n})")
        if indices.size == n and np.array_equal(indices, np.arange(n)):
            return self
        return Dataset(self.X[indices], self.y[indices])

    def iter_examples(self) -> Iterator[tuple[np.ndarray, int]]:
        for i in range(len(self)):
            yield self.X[i], int(self.y[i])

    def __repr__(self) -> str:
        return f"Dataset(n={len(self)}, dim={self.dim})"
