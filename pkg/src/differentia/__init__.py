"""Guided genus-differentia image annotation toolkit."""

from .agreement import (
    AgreementReport,
    ReliabilityMatrix,
    TimingStats,
    agreement_report,
    build_reliability,
    krippendorff_alpha,
    timing_stats,
)
from .errors import DifferentiaError
from .hierarchy import (
    Diagnostic,
    Hierarchy,
    HierarchyNode,
    Sense,
    children,
    load_hierarchy,
    reconstruct_definition,
    relation,
    split_gloss,
    validate,
)
from .localization import (
    AnnotationTask,
    ImageRecord,
    LocalizationStrategy,
    ObjectRegion,
    dataset_task_count,
    expand_tasks,
    validate_region,
)
from .outcomes import (
    GoldAssignment,
    OutcomeKind,
    SimulatedAnnotatorModel,
    audit_report,
    classify_outcome,
    simulate_annotator,
)
from .traversal import (
    AskAnswer,
    ClassificationSession,
    Question,
    TerminalLabel,
    TraversalConfig,
    classify_with_oracle,
    current_question,
    path_oracle,
    start_session,
    submit_answer,
)

__all__ = [
    "AgreementReport",
    "AnnotationTask",
    "AskAnswer",
    "ClassificationSession",
    "Diagnostic",
    "DifferentiaError",
    "GoldAssignment",
    "Hierarchy",
    "HierarchyNode",
    "ImageRecord",
    "LocalizationStrategy",
    "ObjectRegion",
    "OutcomeKind",
    "Question",
    "ReliabilityMatrix",
    "Sense",
    "SimulatedAnnotatorModel",
    "TerminalLabel",
    "TimingStats",
    "TraversalConfig",
    "agreement_report",
    "audit_report",
    "build_reliability",
    "children",
    "classify_outcome",
    "classify_with_oracle",
    "current_question",
    "dataset_task_count",
    "expand_tasks",
    "krippendorff_alpha",
    "load_hierarchy",
    "path_oracle",
    "reconstruct_definition",
    "relation",
    "simulate_annotator",
    "split_gloss",
    "start_session",
    "submit_answer",
    "timing_stats",
    "validate",
    "validate_region",
]

__version__ = "0.1.0"
