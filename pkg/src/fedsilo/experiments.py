"""Experiment harness: centralized vs federated vs federated+DP.

A run is the full Cartesian product of modes x losses x seeds (x the
epsilon grid for the DP mode). Every training is scored on the k CV folds
of the 70% train portion plus once on the 30% holdout after retraining on
the whole train portion, one report row per evaluation. Reports are
deterministic byte for byte given the config, except the wall_ms column.
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, replace

import numpy as np

from .data import (
    RawTable,
    generate_synthetic,
    kfold,
    load_csv,
    preprocess,
    synthetic_preset,
    train_test_split,
)
from .dataset import Dataset
from .errors import ConfigError, DataError, DivergenceError
from .federation import FederationConfig, PartitionStrategy, run_federation
from .models import LossKind, f1_score, objective, precision_score, predict_batch, recall_score
from .optimizer import OptimizerConfig, minimize
from .privacy import PrivacyParams
from .seeding import derive_seed, seed_sequence

MODES = ("CENTRALIZED", "FEDERATED", "FEDERATED_DP")

RESULT_COLUMNS = (
    "run_id",
    "mode",
    "loss_kind",
    "epsilon",
    "num_sites",
    "partition_strategy",
    "rounds_run",
    "fold",
    "seed",
    "f1",
    "precision",
    "recall",
    "final_train_loss",
    "wall_ms",
    "config_hash",
)

SWEEP_COLUMNS = ("loss_kind", "epsilon", "num_seeds", "f1_mean", "f1_std")

COMPARE_COLUMNS = (
    "loss_kind",
    "mode",
    "num_rows",
    "f1_mean",
    "f1_std",
    "gap_vs_centralized",
    "note",
)


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str | None = None
    synthetic: str | None = None
    label_column: str = "label"
    modes: tuple[str, ...] = MODES
    losses: tuple[LossKind, ...] = (LossKind.logistic(),)
    lam: float = 0.01
    epsilon_grid: tuple[float, ...] = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
    num_sites: int = 10
    rounds: int = 10
    partition: PartitionStrategy = PartitionStrategy.iid_equal()
    optimizer: OptimizerConfig = OptimizerConfig()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    cv_folds: int = 5
    train_fraction: float = 0.7

    def __post_init__(self):
        if (self.data_path is None) == (self.synthetic is None):
            raise ConfigError("exactly one of data_path or synthetic is required")
        if not self.modes:
            raise ConfigError("modes must be non-empty")
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}; expected one of {list(MODES)}")
        if len(set(self.modes)) != len(self.modes):
            raise ConfigError("duplicate mode")
        if not self.losses:
            raise ConfigError("losses must be non-empty")
        labels = [kind.label for kind in self.losses]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate loss in {labels}")
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        if "FEDERATED_DP" in self.modes:
            if not self.epsilon_grid:
                raise ConfigError("FEDERATED_DP mode needs a non-empty epsilon grid")
            for eps in self.epsilon_grid:
                if not (np.isfinite(eps) and eps > 0.0):
                    raise ConfigError(f"epsilon must be > 0, got {eps}")
            ordered = tuple(sorted(self.epsilon_grid))
            if len(set(ordered)) != len(ordered):
                raise ConfigError(f"duplicate epsilon in {list(self.epsilon_grid)}")
            object.__setattr__(self, "epsilon_grid", ordered)
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seed")
        for seed in self.seeds:
            if not isinstance(seed, (int, np.integer)) or seed < 0:
                raise ConfigError(f"seeds must be non-negative ints, got {seed}")
        if self.cv_folds != 0 and self.cv_folds < 2:
            raise ConfigError(
                f"cv_folds must be 0 (disabled) or >= 2, got {self.cv_folds}"
            )
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


def canonical_config_text(cfg: ExperimentConfig) -> str:
    """Stable key=value rendering (keys match the CLI flags)."""
    pairs = {
        "data": cfg.data_path or "",
        "synthetic": cfg.synthetic or "",
        "label-column": cfg.label_column,
        "modes": ",".join(cfg.modes),
        "loss": ",".join(kind.label for kind in cfg.losses),
        "lambda": repr(cfg.lam),
        "epsilon-grid": ",".join(repr(e) for e in cfg.epsilon_grid),
        "sites": str(cfg.num_sites),
        "rounds": str(cfg.rounds),
        "partition": cfg.partition.label,
        "learning-rate": repr(cfg.optimizer.learning_rate),
        "epochs": str(cfg.optimizer.epochs),
        "batch-size": "ALL" if cfg.optimizer.batch_size is None else str(cfg.optimizer.batch_size),
        "tolerance": repr(cfg.optimizer.tolerance),
        "opt-seed": str(cfg.optimizer.seed),
        "seeds": ",".join(str(s) for s in cfg.seeds),
        "cv-folds": str(cfg.cv_folds),
        "train-fraction": repr(cfg.train_fraction),
    }
    return "\n".join(f"{key}={pairs[key]}" for key in sorted(pairs)) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    digest = hashlib.sha256(canonical_config_text(cfg).encode("utf-8")).hexdigest()
    return digest[:12]


@dataclass(frozen=True)
class ResultRow:
    run_id: str
    mode: str
    loss_kind: str
    epsilon: float | None
    num_sites: int
    partition_strategy: str
    rounds_run: int
    fold: str
    seed: int
    f1: float
    precision: float
    recall: float
    final_train_loss: float
    wall_ms: int
    config_hash: str


@dataclass(frozen=True)
class SweepRow:
    loss_kind: str
    epsilon: float
    num_seeds: int
    f1_mean: float
    f1_std: float


@dataclass(frozen=True)
class CompareRow:
    loss_kind: str
    mode: str
    num_rows: int
    f1_mean: float
    f1_std: float
    gap_vs_centralized: float | None
    note: str


def expected_row_count(cfg: ExperimentConfig) -> int:
    per_training = cfg.cv_folds + 1 if cfg.cv_folds else 1
    count = 0
    for mode in cfg.modes:
        grid = len(cfg.epsilon_grid) if mode == "FEDERATED_DP" else 1
        count += grid * len(cfg.losses) * len(cfg.seeds) * per_training
    return count


def materialize_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.synthetic is not None:
        return generate_synthetic(synthetic_preset(cfg.synthetic))
    table = load_csv(cfg.data_path, cfg.label_column)
    dataset, _ = preprocess(table)
    return dataset


def _fold_sort_key(fold: str) -> tuple[int, int]:
    return (1, 0) if fold == "holdout" else (0, int(fold))


def _row_sort_key(row: ResultRow):
    eps = -1.0 if row.epsilon is None else row.epsilon
    return (
        MODES.index(row.mode),
        row.loss_kind,
        eps,
        row.seed,
        _fold_sort_key(row.fold),
    )


def _fit(
    cfg: ExperimentConfig,
    mode: str,
    kind: LossKind,
    epsilon: float | None,
    train: Dataset,
    seed: int,
    fold: str,
) -> tuple[np.ndarray, float, int]:
    """Train one model; returns (weights, final unperturbed-ish loss, rounds_run)."""
    opt = replace(cfg.optimizer, seed=derive_seed(seed, "opt", fold))
    if mode == "CENTRALIZED":
        result = minimize(train, kind, cfg.lam, None, np.zeros(train.dim), opt)
        if result.loss_history:
            final_loss = result.loss_history[-1]
        else:
            final_loss = objective(result.weights, train, kind, cfg.lam)
        return result.weights, final_loss, 0
    privacy = PrivacyParams(epsilon, cfg.lam) if mode == "FEDERATED_DP" else None
    fed = FederationConfig(
        num_sites=cfg.num_sites,
        rounds=cfg.rounds,
        partition=cfg.partition,
        optimizer=opt,
        privacy=privacy,
        master_seed=derive_seed(seed, "fed", fold),
    )
    weights, logs = run_federation(train, kind, cfg.lam, fed)
    return weights, logs[-1].global_loss, len(logs)


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    dataset = materialize_dataset(cfg)
    digest = config_hash(cfg)
    rows: list[ResultRow] = []
    for seed in cfg.seeds:
        train_full, holdout = train_test_split(
            dataset, cfg.train_fraction, seed_sequence(seed, "split")
        )
        evaluations: list[tuple[str, Dataset, Dataset]] = []
        if cfg.cv_folds:
            cv = kfold(train_full, cfg.cv_folds, seed_sequence(seed, "cv"))
            evaluations.extend((str(i), tr, va) for i, (tr, va) in enumerate(cv))
        evaluations.append(("holdout", train_full, holdout))
        for mode in cfg.modes:
            grid: tuple[float | None, ...]
            grid = cfg.epsilon_grid if mode == "FEDERATED_DP" else (None,)
            for kind in cfg.losses:
                for epsilon in grid:
                    for fold, train, eval_set in evaluations:
                        eps_tag = "noeps" if epsilon is None else f"eps{epsilon!r}"
                        run_id = f"{mode}-{kind.label}-{eps_tag}-s{seed}-f{fold}"
                        start = time.perf_counter()
                        try:
                            weights, final_loss, rounds_run = _fit(
                                cfg, mode, kind, epsilon, train, seed, fold
                            )
                        except DivergenceError as exc:
                            raise DivergenceError(
                                f"{run_id}: {exc}", epoch=exc.epoch, site=exc.site
                            ) from exc
                        predictions = predict_batch(weights, eval_set.X)
                        truth = eval_set.y.astype(np.int64)
                        wall_ms = int(round((time.perf_counter() - start) * 1000.0))
                        rows.append(
                            ResultRow(
                                run_id=run_id,
                                mode=mode,
                                loss_kind=kind.label,
                                epsilon=epsilon,
                                num_sites=cfg.num_sites if mode != "CENTRALIZED" else 1,
                                partition_strategy=(
                                    cfg.partition.label if mode != "CENTRALIZED" else "none"
                                ),
                                rounds_run=rounds_run,
                                fold=fold,
                                seed=seed,
                                f1=f1_score(predictions, truth),
                                precision=precision_score(predictions, truth),
                                recall=recall_score(predictions, truth),
                                final_train_loss=final_loss,
                                wall_ms=wall_ms,
                                config_hash=digest,
                            )
                        )
    rows.sort(key=_row_sort_key)
    return rows


def summarize_epsilon_sweep(rows: list[ResultRow]) -> list[SweepRow]:
    """Mean/std holdout F1 per (loss, epsilon) for the DP mode.

    Std is the population std (ddof=0): a single seed reports 0, not NaN.
    """
    groups: dict[tuple[str, float], list[float]] = {}
    for row in rows:
        if row.fold != "holdout" or row.mode != "FEDERATED_DP":
            continue
        groups.setdefault((row.loss_kind, row.epsilon), []).append(row.f1)
    out = []
    for (loss_kind, epsilon), scores in groups.items():
        arr = np.asarray(scores)
        out.append(
            SweepRow(
                loss_kind=loss_kind,
                epsilon=float(epsilon),
                num_seeds=len(scores),
                f1_mean=float(arr.mean()),
                f1_std=float(arr.std()),
            )
        )
    out.sort(key=lambda r: (r.loss_kind, r.epsilon))
    return out


def epsilon_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    if "FEDERATED_DP" not in cfg.modes:
        raise ConfigError("epsilon sweep needs FEDERATED_DP among the modes")
    return summarize_epsilon_sweep(run_experiment(cfg))


def compare_modes(rows: list[ResultRow]) -> list[CompareRow]:
    """Mean/std holdout F1 per (loss, mode) plus the gap vs CENTRALIZED.

    FEDERATED_DP pools the whole epsilon grid here; per-epsilon detail is
    the sweep summary's job. Without a CENTRALIZED baseline the gaps stay
    empty and a WARNING row is appended.
    """
    groups: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        if row.fold != "holdout":
            continue
        groups.setdefault((row.loss_kind, row.mode), []).append(row.f1)
    baselines = {
        loss: float(np.mean(scores))
        for (loss, mode), scores in groups.items()
        if mode == "CENTRALIZED"
    }
    out = []
    missing = []
    for (loss_kind, mode), scores in groups.items():
        arr = np.asarray(scores)
        baseline = baselines.get(loss_kind)
        gap = None if baseline is None else float(arr.mean() - baseline)
        if baseline is None:
            missing.append(loss_kind)
        out.append(
            CompareRow(
                loss_kind=loss_kind,
                mode=mode,
                num_rows=len(scores),
                f1_mean=float(arr.mean()),
                f1_std=float(arr.std()),
                gap_vs_centralized=gap,
                note="",
            )
        )
    out.sort(key=lambda r: (r.loss_kind, MODES.index(r.mode)))
    for loss_kind in sorted(set(missing)):
        out.append(
            CompareRow(
                loss_kind=loss_kind,
                mode="WARNING",
                num_rows=0,
                f1_mean=float("nan"),
                f1_std=float("nan"),
                gap_vs_centralized=None,
                note="no CENTRALIZED baseline; gap left empty",
            )
        )
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if value != value:  # NaN
            return ""
        return repr(value)
    return str(value)


def write_results_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_cell(getattr(row, col)) for col in RESULT_COLUMNS])


def read_results_csv(path: str) -> list[ResultRow]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_COLUMNS:
                raise DataError(
                    f"{path}: expected result columns {list(RESULT_COLUMNS)}, "
                    f"got {reader.fieldnames}"
                )
            out = []
            for record in reader:
                out.append(
                    ResultRow(
                        run_id=record["run_id"],
                        mode=record["mode"],
                        loss_kind=record["loss_kind"],
                        epsilon=float(record["epsilon"]) if record["epsilon"] else None,
                        num_sites=int(record["num_sites"]),
                        partition_strategy=record["partition_strategy"],
                        rounds_run=int(record["rounds_run"]),
                        fold=record["fold"],
                        seed=int(record["seed"]),
                        f1=float(record["f1"]),
                        precision=float(record["precision"]),
                        recall=float(record["recall"]),
                        final_train_loss=float(record["final_train_loss"]),
                        wall_ms=int(record["wall_ms"]),
                        config_hash=record["config_hash"],
                    )
                )
            return out
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed results file: {exc}") from exc


def write_sweep_csv(rows: list[SweepRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_cell(getattr(row, col)) for col in SWEEP_COLUMNS])


def write_compare_csv(rows: list[CompareRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(getattr(row, col)) for col in COMPARE_COLUMNS])


def write_meta(cfg: ExperimentConfig, path: str) -> None:
    """Sidecar record of what produced a report; deterministic content only."""
    lines = [
        "fedsilo run metadata",
        f"config-hash={config_hash(cfg)}",
        "",
        "[config]",
        canonical_config_text(cfg).rstrip("\n"),
        "",
        "[semantics]",
        "privacy: epsilon is a per-site budget; each site draws one perturbation",
        "  per run and keeps it across rounds; intermediate broadcasts are not",
        "  separately accounted.",
        "preprocessing: bias feature appended, then all rows scaled by one",
        "  global factor s = max(1, max row L2 norm); federated sites share",
        "  that global factor rather than computing local ones.",
        "rounds_run: federation rounds executed (0 for CENTRALIZED rows);",
        "  a value below the configured cap means the tolerance stop fired.",
        "determinism: rerunning this config reproduces the results CSV byte",
        "  for byte except the wall_ms column.",
        "",
    ]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines))


def meta_path_for(out_path: str) -> str:
    return f"{out_path}.meta.txt"
