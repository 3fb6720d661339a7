"""Tabular ingestion, unit-ball preprocessing, splits and synthetic cohorts."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DataError, ValidationError
from .seeding import RngLike, as_generator


@dataclass(frozen=True)
class RawTable:
    """A parsed numeric table; one column holds the labels."""

    header: tuple[str, ...]
    rows: np.ndarray
    label_column: str

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise DataError("table must have at least one data row")
        if rows.shape[1] != len(self.header):
            raise DataError(
                f"rows have {rows.shape[1]} fields, header has {len(self.header)}"
            )
        if self.label_column not in self.header:
            raise DataError(
                f"label column {self.label_column!r} not in header {list(self.header)}"
            )
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", rows)

    @property
    def _label_index(self) -> int:
        return self.header.index(self.label_column)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for name in self.header if name != self.label_column)

    @property
    def features(self) -> np.ndarray:
        return np.delete(self.rows, self._label_index, axis=1)

    @property
    def labels(self) -> np.ndarray:
        """Labels mapped to {-1.0, +1.0}; 0 means negative."""
        col = self.rows[:, self._label_index]
        bad = ~np.isin(col, (-1.0, 0.0, 1.0))
        if np.any(bad):
            first = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"label must be -1, 0 or 1; row {first} has {col[first]!r}"
            )
        return np.where(col > 0.0, 1.0, -1.0)


def load_csv(path: str, label_column: str = "label") -> RawTable:
    """Parse a numeric CSV with a header row.

    Error messages use file line numbers (header = line 1).
    """
    try:
        with open(path, newline="") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty file, expected a header row")
    header = tuple(field.strip() for field in lines[0])
    if label_column not in header:
        raise DataError(
            f"{path}: label column {label_column!r} not found in header {list(header)}"
        )
    width = len(header)
    label_idx = header.index(label_column)
    parsed: list[list[float]] = []
    for lineno, row in enumerate(lines[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise DataError(
                f"{path}, line {lineno}: expected {width} fields, got {len(row)}"
            )
        values = []
        for j, cell in enumerate(row):
            try:
                values.append(float(cell))
            except ValueError as exc:
                raise DataError(
                    f"{path}, line {lineno}, column {header[j]!r}: "
                    f"not a number: {cell!r}"
                ) from exc
        if values[label_idx] not in (-1.0, 0.0, 1.0):
            raise DataError(
                f"{path}, line {lineno}: label must be -1, 0 or 1, "
                f"got {row[label_idx]!r}"
            )
        parsed.append(values)
    if not parsed:
        raise DataError(f"{path}: no data rows")
    return RawTable(header=header, rows=np.array(parsed), label_column=label_column)


def _format_cell(v: float) -> str:
    if v == round(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def save_csv(table: RawTable, path: str) -> None:
    """Write a table; floats round-trip exactly through load_csv."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_format_cell(v) for v in row])


@dataclass(frozen=True)
class PreprocessReport:
    scale_factor: float
    max_row_norm_before: float
    bias_appended: bool
    dim: int


def preprocess_features(
    features: np.ndarray, append_bias: bool = True
) -> tuple[np.ndarray, PreprocessReport]:
    """Optionally append a constant 1 feature, then scale every row by
    s = max(1, max row L2 norm) so the whole table fits in the unit ball.

    Applying this twice changes nothing: the second pass sees norms <= 1
    and scales by 1.
    """
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 1:
        raise ValidationError("features", "features must be a non-empty 2-D array")
    if F.shape[1] < 1:
        raise ValidationError("features", "zero-dimensional features")
    if not np.all(np.isfinite(F)):
        raise ValidationError("features", "features must be finite")
    if append_bias:
        F = np.hstack([F, np.ones((F.shape[0], 1))])
    max_before = float(np.sqrt(np.max(np.einsum("ij,ij->i", F, F))))
    scale = max(1.0, max_before)
    X = F / scale
    report = PreprocessReport(
        scale_factor=scale,
        max_row_norm_before=max_before,
        bias_appended=append_bias,
        dim=F.shape[1],
    )
    return X, report


def preprocess(
    table: RawTable, append_bias: bool = True
) -> tuple[Dataset, PreprocessReport]:
    X, report = preprocess_features(table.features, append_bias)
    return Dataset(X, table.labels), report


def train_test_split(
    data: Dataset, train_fraction: float = 0.7, seed: RngLike = 0
) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split; both sides keep source order internally."""
    if not (0.0 < train_fraction < 1.0):
        raise ValidationError(
            "train_fraction", f"train_fraction must be in (0, 1), got {train_fraction}"
        )
    n = len(data)
    if n < 2:
        raise ValidationError("data", "need at least 2 examples to split")
    n_train = int(train_fraction * n)
    if n_train < 1 or n_train >= n:
        raise ValidationError(
            "train_fraction",
            f"degenerate split: {n_train} train of {n} examples",
        )
    perm = as_generator(seed).permutation(n)
    return (
        data.subset(np.sort(perm[:n_train])),
        data.subset(np.sort(perm[n_train:])),
    )


def kfold(data: Dataset, k: int = 5, seed: RngLike = 0) -> list[tuple[Dataset, Dataset]]:
    """Seeded k-fold partition; returns (train, validation) pairs.

    Fold sizes are near-equal (they differ by at most 1); every example
    lands in exactly one validation fold.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 2):
        raise ValidationError("k", f"k must be an integer >= 2, got {k}")
    n = len(data)
    if k > n:
        raise ValidationError("k", f"k={k} folds need at least {k} examples, got {n}")
    perm = as_generator(seed).permutation(n)
    base, extra = divmod(n, k)
    folds: list[np.ndarray] = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(perm[start : start + size])
        start += size
    out = []
    for i in range(k):
        val = np.sort(folds[i])
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        out.append((data.subset(train), data.subset(val)))
    return out


@dataclass(frozen=True)
class SyntheticSpec:
    """Two class-conditional Gaussians along a fixed random direction."""

    n: int
    dim: int
    positive_rate: float
    class_separation: float
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 2):
            raise ValidationError("n", f"n must be an integer >= 2, got {self.n}")
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValidationError("dim", f"dim must be an integer >= 1, got {self.dim}")
        if not (0.0 < self.positive_rate < 1.0):
            raise ValidationError(
                "positive_rate",
                f"positive_rate must be in (0, 1), got {self.positive_rate}",
            )
        if not (np.isfinite(self.class_separation) and self.class_separation >= 0.0):
            raise ValidationError(
                "class_separation",
                f"class_separation must be >= 0, got {self.class_separation}",
            )
        if not (np.isfinite(self.noise_scale) and self.noise_scale >= 0.0):
            raise ValidationError(
                "noise_scale", f"noise_scale must be >= 0, got {self.noise_scale}"
            )


def generate_synthetic_raw(spec: SyntheticSpec) -> RawTable:
    """The unscaled table: features f0..f{dim-1} plus a label column.

    Class means sit at +/- (class_separation/2) u for a seeded unit
    direction u; isotropic Gaussian noise with sd noise_scale on top.
    """
    rng = as_generator(spec.seed)
    u = rng.standard_normal(spec.dim)
    while np.linalg.norm(u) == 0.0:
        u = rng.standard_normal(spec.dim)
    u /= np.linalg.norm(u)
    y = np.where(rng.random(spec.n) < spec.positive_rate, 1.0, -1.0)
    X = (
        y[:, None] * (spec.class_separation / 2.0) * u
        + spec.noise_scale * rng.standard_normal((spec.n, spec.dim))
    )
    header = tuple(f"f{j}" for j in range(spec.dim)) + ("label",)
    return RawTable(
        header=header, rows=np.hstack([X, y[:, None]]), label_column="label"
    )


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate and preprocess in one step (bias appended, unit ball)."""
    dataset, _ = preprocess(generate_synthetic_raw(spec))
    return dataset


SYNTHETIC_PRESETS: dict[str, SyntheticSpec] = {
    # near-separable balanced-ish cohort used by the comparison experiments
    "separable": SyntheticSpec(
        n=20_000, dim=20, positive_rate=0.2, class_separation=6.0,
        noise_scale=1.0, seed=7,
    ),
    # large cohort with rare positives, claims-data flavored
    "lced-like": SyntheticSpec(
        n=50_000, dim=40, positive_rate=0.05, class_separation=3.0,
        noise_scale=1.0, seed=11,
    ),
    # smaller, wider cohort, ICU flavored
    "mimic-like": SyntheticSpec(
        n=21_139, dim=100, positive_rate=0.13, class_separation=2.5,
        noise_scale=1.0, seed=13,
    ),
}


def synthetic_preset(name: str, **overrides) -> SyntheticSpec:
    if name not in SYNTHETIC_PRESETS:
        raise ConfigError(
            f"unknown synthetic preset {name!r}; "
            f"available: {sorted(SYNTHETIC_PRESETS)}"
        )
    spec = SYNTHETIC_PRESETS[name]
    return replace(spec, **overrides) if overrides else spec
