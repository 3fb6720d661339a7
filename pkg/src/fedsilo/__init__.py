"""Federated training of linear binary classifiers on siloed tabular data,
with an objective-perturbation differential privacy layer."""

from ._kernels import BACKEND
from .data import (
    PreprocessReport,
    RawTable,
    SyntheticSpec,
    generate_synthetic,
    generate_synthetic_raw,
    kfold,
    load_csv,
    preprocess,
    save_csv,
    synthetic_preset,
    train_test_split,
)
from .dataset import Dataset
from .errors import (
    ConfigError,
    DataError,
    DimensionMismatchError,
    DivergenceError,
    FedsiloError,
    PreconditionError,
    ValidationError,
)
from .experiments import (
    ExperimentConfig,
    ResultRow,
    compare_modes,
    config_hash,
    epsilon_sweep,
    read_results_csv,
    run_experiment,
    summarize_epsilon_sweep,
    write_results_csv,
)
from .federation import (
    FederationConfig,
    PartitionStrategy,
    RoundLog,
    Site,
    SiteUpdate,
    aggregate,
    local_train,
    partition,
    run_federation,
)
from .models import (
    LossKind,
    confusion_counts,
    f1_score,
    loss_grad,
    loss_value,
    objective,
    objective_grad,
    precision_score,
    predict,
    predict_batch,
    recall_score,
    smoothness_bound,
)
from .optimizer import OptimizerConfig, TrainResult, has_converged, minimize
from .privacy import (
    PerturbationVector,
    PrivacyParams,
    PreconditionReport,
    compute_slack,
    make_perturbation,
    sample_noise,
    validate_preconditions,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DataError",
    "Dataset",
    "DimensionMismatchError",
    "DivergenceError",
    "ExperimentConfig",
    "FederationConfig",
    "FedsiloError",
    "LossKind",
    "OptimizerConfig",
    "PartitionStrategy",
    "PerturbationVector",
    "PreconditionError",
    "PreconditionReport",
    "PreprocessReport",
    "PrivacyParams",
    "RawTable",
    "ResultRow",
    "RoundLog",
    "Site",
    "SiteUpdate",
    "SyntheticSpec",
    "TrainResult",
    "ValidationError",
    "aggregate",
    "compare_modes",
    "compute_slack",
    "confusion_counts",
    "config_hash",
    "epsilon_sweep",
    "f1_score",
    "generate_synthetic",
    "generate_synthetic_raw",
    "has_converged",
    "kfold",
    "load_csv",
    "local_train",
    "loss_grad",
    "loss_value",
    "make_perturbation",
    "minimize",
    "objective",
    "objective_grad",
    "partition",
    "precision_score",
    "predict",
    "predict_batch",
    "preprocess",
    "read_results_csv",
    "recall_score",
    "run_experiment",
    "run_federation",
    "sample_noise",
    "save_csv",
    "smoothness_bound",
    "summarize_epsilon_sweep",
    "synthetic_preset",
    "train_test_split",
    "validate_preconditions",
    "write_results_csv",
]
