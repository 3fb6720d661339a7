"""Command line interface.

Subcommands: run, sweep, compare, gen-data, validate.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 divergence.

run/sweep/compare accept --config FILE with flat key=value lines; keys are
exactly the long flag names (e.g. epsilon-grid=0.01,0.1). Explicit flags
override file values; unknown or duplicate keys are errors.
"""

from __future__ import annotations

import argparse
import sys

from .data import (
    generate_synthetic_raw,
    load_csv,
    preprocess_features,
    save_csv,
    synthetic_preset,
)
from .dataset import Dataset
from .errors import (
    ConfigError,
    DataError,
    DivergenceError,
    FedsiloError,
    PreconditionError,
    ValidationError,
)
from .experiments import (
    ExperimentConfig,
    compare_modes,
    config_hash,
    meta_path_for,
    read_results_csv,
    run_experiment,
    summarize_epsilon_sweep,
    write_compare_csv,
    write_meta,
    write_results_csv,
    write_sweep_csv,
)
from .federation import PartitionStrategy
from .models import LossKind
from .optimizer import OptimizerConfig
from .privacy import PrivacyParams, validate_preconditions

_EXPERIMENT_KEYS = (
    "config",
    "data",
    "synthetic",
    "label-column",
    "modes",
    "loss",
    "huber-h",
    "lambda",
    "epsilon-grid",
    "sites",
    "rounds",
    "partition",
    "alpha",
    "learning-rate",
    "epochs",
    "batch-size",
    "tolerance",
    "seeds",
    "cv-folds",
    "train-fraction",
    "out",
)


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    add = parser.add_argument
    add("--config", help="key=value config file; flags override it")
    add("--data", help="training CSV (mutually exclusive with --synthetic)")
    add("--synthetic", help="synthetic preset name")
    add("--label-column", help="label column name (default label)")
    add("--modes", help="comma list of CENTRALIZED,FEDERATED,FEDERATED_DP")
    add("--loss", help="comma list of logistic,svm,perceptron")
    add("--huber-h", help="smoothing width for svm/perceptron losses")
    add("--lambda", dest="lambda", help="L2 regularization strength")
    add("--epsilon-grid", help="comma list of epsilon values")
    add("--sites", help="number of federation sites")
    add("--rounds", help="federation round cap")
    add("--partition", help="iid or skewed")
    add("--alpha", help="power-law exponent for skewed partition")
    add("--learning-rate", help="GD step size")
    add("--epochs", help="local epochs per round")
    add("--batch-size", help="mini-batch size or ALL")
    add("--tolerance", help="relative-improvement stop; 0 disables")
    add("--seeds", help="comma list of experiment seeds")
    add("--cv-folds", help="cross-validation folds; 0 disables")
    add("--train-fraction", help="train share of the (train, holdout) split")
    add("--out", help="output CSV path")


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(f"{path}, line {lineno}: expected key=value, got {text!r}")
        key, _, value = text.partition("=")
        key = key.strip()
        if key not in _EXPERIMENT_KEYS or key == "config":
            raise ConfigError(f"{path}, line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{path}, line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def _merge_values(args: argparse.Namespace) -> dict[str, str]:
    ns = vars(args)
    values: dict[str, str] = {}
    if ns.get("config"):
        values.update(_read_config_file(ns["config"]))
    for key in _EXPERIMENT_KEYS:
        if key == "config":
            continue
        flag_value = ns.get(key.replace("-", "_")) if key != "lambda" else ns.get("lambda")
        if flag_value is not None:
            values[key] = flag_value
    return values


def _parse_float(values: dict[str, str], key: str) -> float:
    try:
        return float(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {values[key]!r}") from exc


def _parse_int(values: dict[str, str], key: str) -> int:
    try:
        return int(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {values[key]!r}") from exc


def _split_list(text: str, key: str) -> list[str]:
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return items


def build_experiment_config(values: dict[str, str]) -> ExperimentConfig:
    kwargs = {}
    if "data" in values:
        kwargs["data_path"] = values["data"]
    if "synthetic" in values:
        kwargs["synthetic"] = values["synthetic"]
    if "label-column" in values:
        kwargs["label_column"] = values["label-column"]
    if "modes" in values:
        kwargs["modes"] = tuple(
            item.upper() for item in _split_list(values["modes"], "modes")
        )
    huber_h = _parse_float(values, "huber-h") if "huber-h" in values else None
    if "loss" in values:
        try:
            kwargs["losses"] = tuple(
                LossKind.parse(name, huber_h)
                for name in _split_list(values["loss"], "loss")
            )
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
        if huber_h is not None and all(kind.h is None for kind in kwargs["losses"]):
            raise ConfigError("huber-h given but no svm/perceptron loss selected")
    elif huber_h is not None:
        raise ConfigError("huber-h given but no svm/perceptron loss selected")
    if "lambda" in values:
        kwargs["lam"] = _parse_float(values, "lambda")
    if "epsilon-grid" in values:
        try:
            kwargs["epsilon_grid"] = tuple(
                float(item) for item in _split_list(values["epsilon-grid"], "epsilon-grid")
            )
        except ValueError as exc:
            raise ConfigError(f"epsilon-grid: {exc}") from exc
    if "sites" in values:
        kwargs["num_sites"] = _parse_int(values, "sites")
    if "rounds" in values:
        kwargs["rounds"] = _parse_int(values, "rounds")
    if "partition" in values or "alpha" in values:
        alpha = _parse_float(values, "alpha") if "alpha" in values else None
        try:
            kwargs["partition"] = PartitionStrategy.parse(
                values.get("partition", "skewed" if alpha is not None else "iid"), alpha
            )
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
    opt_kwargs = {}
    if "learning-rate" in values:
        opt_kwargs["learning_rate"] = _parse_float(values, "learning-rate")
    if "epochs" in values:
        opt_kwargs["epochs"] = _parse_int(values, "epochs")
    if "batch-size" in values:
        text = values["batch-size"]
        opt_kwargs["batch_size"] = None if text.upper() == "ALL" else _parse_int(values, "batch-size")
    if "tolerance" in values:
        opt_kwargs["tolerance"] = _parse_float(values, "tolerance")
    if opt_kwargs:
        try:
            kwargs["optimizer"] = OptimizerConfig(**opt_kwargs)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
    if "seeds" in values:
        try:
            kwargs["seeds"] = tuple(
                int(item) for item in _split_list(values["seeds"], "seeds")
            )
        except ValueError as exc:
            raise ConfigError(f"seeds: {exc}") from exc
    if "cv-folds" in values:
        kwargs["cv_folds"] = _parse_int(values, "cv-folds")
    if "train-fraction" in values:
        kwargs["train_fraction"] = _parse_float(values, "train-fraction")
    try:
        return ExperimentConfig(**kwargs)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _require_out(values: dict[str, str]) -> str:
    if "out" not in values:
        raise ConfigError("--out is required")
    return values["out"]


def _cmd_run(args: argparse.Namespace) -> int:
    values = _merge_values(args)
    out = _require_out(values)
    cfg = build_experiment_config(values)
    rows = run_experiment(cfg)
    write_results_csv(rows, out)
    write_meta(cfg, meta_path_for(out))
    print(f"wrote {len(rows)} rows to {out} (config {config_hash(cfg)})")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    values = _merge_values(args)
    out = _require_out(values)
    if args.in_path is not None:
        summary = summarize_epsilon_sweep(read_results_csv(args.in_path))
    else:
        values.setdefault("modes", "FEDERATED_DP")
        cfg = build_experiment_config(values)
        if "FEDERATED_DP" not in cfg.modes:
            raise ConfigError("epsilon sweep needs FEDERATED_DP among the modes")
        summary = summarize_epsilon_sweep(run_experiment(cfg))
        write_meta(cfg, meta_path_for(out))
    write_sweep_csv(summary, out)
    print(f"wrote {len(summary)} sweep points to {out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    values = _merge_values(args)
    out = _require_out(values)
    if args.in_path is not None:
        summary = compare_modes(read_results_csv(args.in_path))
    else:
        cfg = build_experiment_config(values)
        summary = compare_modes(run_experiment(cfg))
        write_meta(cfg, meta_path_for(out))
    write_compare_csv(summary, out)
    print(f"wrote {len(summary)} comparison rows to {out}")
    return 0


def _cmd_gen_data(args: argparse.Namespace) -> int:
    if args.out is None:
        raise ConfigError("--out is required")
    overrides = {}
    try:
        for field, value in (
            ("n", args.n),
            ("dim", args.dim),
            ("seed", args.seed),
        ):
            if value is not None:
                overrides[field] = int(value)
        for field, value in (
            ("positive_rate", args.positive_rate),
            ("class_separation", args.class_separation),
            ("noise_scale", args.noise_scale),
        ):
            if value is not None:
                overrides[field] = float(value)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        spec = synthetic_preset(args.synthetic, **overrides)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    table = generate_synthetic_raw(spec)
    save_csv(table, args.out)
    rate = float((table.labels > 0).mean())
    print(
        f"wrote {table.rows.shape[0]} examples ({spec.dim} features, "
        f"positive rate {rate:.4f}) to {args.out}"
    )
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    table = load_csv(args.data, args.label_column)
    dataset = Dataset(table.features, table.labels)
    try:
        kind = LossKind.parse(
            args.loss, float(args.huber_h) if args.huber_h is not None else None
        )
        params = PrivacyParams(epsilon=float(args.epsilon), lam=float(getattr(args, "lambda")))
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = validate_preconditions(dataset, params, kind)
    _, prep = preprocess_features(table.features)
    print(f"checked {len(dataset)} examples, {dataset.dim} features, loss {kind.label}")
    if report.ok:
        print("ok: data satisfies the privacy preconditions as-is")
    else:
        for violation in report.violations:
            print(f"violation: {violation}")
        print(
            "hint: preprocess appends a bias feature and scales rows by "
            f"s={prep.scale_factor!r} (max raw norm {prep.max_row_norm_before!r})"
        )
    return 0 if report.ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsilo",
        description="Federated training of linear classifiers with optional "
        "objective-perturbation differential privacy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run experiments, write one CSV row per evaluation")
    _add_experiment_flags(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="privacy-utility frontier summary over the epsilon grid")
    _add_experiment_flags(p_sweep)
    p_sweep.add_argument("--in", dest="in_path", help="summarize an existing results CSV instead of running")
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_cmp = sub.add_parser("compare", help="mean holdout F1 per mode with gaps vs CENTRALIZED")
    _add_experiment_flags(p_cmp)
    p_cmp.add_argument("--in", dest="in_path", help="summarize an existing results CSV instead of running")
    p_cmp.set_defaults(handler=_cmd_compare)

    p_gen = sub.add_parser("gen-data", help="write a synthetic cohort as raw CSV")
    p_gen.add_argument("--synthetic", required=True, help="preset name")
    p_gen.add_argument("--out", help="output CSV path")
    p_gen.add_argument("--n", help="override example count")
    p_gen.add_argument("--dim", help="override feature count")
    p_gen.add_argument("--positive-rate", help="override positive rate")
    p_gen.add_argument("--class-separation", help="override class separation")
    p_gen.add_argument("--noise-scale", help="override noise scale")
    p_gen.add_argument("--seed", help="override generation seed")
    p_gen.set_defaults(handler=_cmd_gen_data)

    p_val = sub.add_parser("validate", help="check a CSV against the privacy preconditions")
    p_val.add_argument("--data", required=True, help="CSV to check (taken as-is, no rescaling)")
    p_val.add_argument("--label-column", default="label")
    p_val.add_argument("--lambda", dest="lambda", default="0.01")
    p_val.add_argument("--epsilon", default="0.1")
    p_val.add_argument("--loss", default="logistic")
    p_val.add_argument("--huber-h")
    p_val.set_defaults(handler=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    except (DataError, PreconditionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FedsiloError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
