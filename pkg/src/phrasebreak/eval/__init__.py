"""Metrics, seeded folds, cross-validation and reports."""

from .cv import CVResult, MetricReport, SmallFoldWarning, gold_labels, run_cv
from .folds import FoldPlan
from .metrics import (
    LABELS,
    BinaryReport,
    ClassStats,
    Metrics,
    collapse,
    collapse_binary,
    compute_metrics,
    confusion,
)
from .report import format_class_table, format_table, to_json, write_reports
from .systems import (
    AgainstTTSAssessor,
    BiLSTMAssessor,
    BreakBertAssessor,
    LlmAssessor,
    MajorityAssessor,
)

__all__ = [
    "LABELS",
    "AgainstTTSAssessor",
    "BiLSTMAssessor",
    "BinaryReport",
    "BreakBertAssessor",
    "CVResult",
    "ClassStats",
    "FoldPlan",
    "LlmAssessor",
    "MajorityAssessor",
    "MetricReport",
    "Metrics",
    "SmallFoldWarning",
    "collapse",
    "collapse_binary",
    "compute_metrics",
    "confusion",
    "format_class_table",
    "format_table",
    "gold_labels",
    "run_cv",
    "to_json",
    "write_reports",
]
