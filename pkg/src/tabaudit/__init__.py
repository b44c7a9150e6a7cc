"""tabaudit: audit toolkit for tabular prediction benchmarks."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    PredictionRecord,
    PredictionSet,
    TaskSpec,
    TaskType,
    class_distribution,
    load_dataset,
    load_predictions,
)
from .errors import (
    AuditError,
    ComputationError,
    DegenerateStatisticsError,
    InputError,
)
from .metrics import (
    AuditMetrics,
    accuracy,
    audit_dataset,
    cohen_kappa,
    lift,
    majority_baseline,
    recovery,
)
from .quartile import (
    QuartileTask,
    assign_bin,
    bin_label,
    build_quartile_task,
    quartile_bins,
    shortcut_audit,
)
from .stratify import (
    StatTestResult,
    TaskTypeSummary,
    flag_imbalance_riders,
    flag_negative_kappa,
    one_way_anova,
    pairwise_t,
    partition_gap,
    summarize_by_task,
)

__all__ = [
    "AuditError",
    "AuditMetrics",
    "ComputationError",
    "Dataset",
    "DegenerateStatisticsError",
    "InputError",
    "PredictionRecord",
    "PredictionSet",
    "QuartileTask",
    "StatTestResult",
    "TaskSpec",
    "TaskType",
    "TaskTypeSummary",
    "accuracy",
    "assign_bin",
    "audit_dataset",
    "bin_label",
    "build_quartile_task",
    "class_distribution",
    "cohen_kappa",
    "flag_imbalance_riders",
    "flag_negative_kappa",
    "lift",
    "load_dataset",
    "load_predictions",
    "majority_baseline",
    "one_way_anova",
    "pairwise_t",
    "partition_gap",
    "quartile_bins",
    "recovery",
    "shortcut_audit",
    "summarize_by_task",
]
