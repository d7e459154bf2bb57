"""Prompting of likely-omitted foods in dietary recall surveys.

Learns which foods tend to be eaten together from past recalls and uses
that to remind respondents about foods they may have forgotten to
report, alongside a hand-authored rule baseline and the evaluation
machinery to compare the two.
"""

from .core import (
    Arm,
    Corpus,
    DeviceClass,
    DomainError,
    Meal,
    RecallDay,
    food_code,
    validate_recall,
)
from .evaluation import (
    EvaluationReport,
    MannWhitneyResult,
    PromptEvent,
    acceptance_stats,
    arm_metrics,
    coverage_stats,
    duration_stats,
    energy_stats,
    mann_whitney_u,
    precision,
    simulate_leave_one_out,
)
from .model import (
    DEFAULT_RECOMMENDATION_LIMIT,
    CoOccurrenceModel,
    Recommendation,
    build_model,
    conditional_probability,
    merge_models,
    recommend,
    score,
)
from .rules import AssociatedFoodRule, load_rules, prompts_for, read_rules

__version__ = "0.1.0"

__all__ = [
    "Arm",
    "AssociatedFoodRule",
    "CoOccurrenceModel",
    "Corpus",
    "DEFAULT_RECOMMENDATION_LIMIT",
    "DeviceClass",
    "DomainError",
    "EvaluationReport",
    "MannWhitneyResult",
    "Meal",
    "PromptEvent",
    "RecallDay",
    "Recommendation",
    "acceptance_stats",
    "arm_metrics",
    "build_model",
    "conditional_probability",
    "coverage_stats",
    "duration_stats",
    "energy_stats",
    "food_code",
    "load_rules",
    "mann_whitney_u",
    "merge_models",
    "precision",
    "prompts_for",
    "read_rules",
    "recommend",
    "score",
    "simulate_leave_one_out",
    "validate_recall",
]
