"""Deterministic scoring engine for robotic video generation benchmarks.

Computes motion metrics from point tracks, normalizes judge-graded metrics,
composes them into task-completion / visual-quality / total scores, builds
ranked leaderboards, and validates benchmark-human agreement.
"""

from .aggregate import (
    LeaderboardEntry,
    PenaltyConfig,
    aggregate_model,
    aggregate_models,
    motion_penalty,
    rank_models,
    sample_total,
    stability_penalty,
    stability_score,
    strata_from_manifest,
    task_completion,
    visual_quality,
)
from .agreement import (
    AgreementReport,
    PairwiseVote,
    VoteOutcome,
    aggregate_votes,
    bland_altman,
    build_agreement_report,
    loo_calibrate,
    spearman,
)
from .errors import EngineError, GradeParseError, RecordParseError, SchemaError
from .motion import MotionConfig, adaptive_threshold, mean_displacement, motion_amplitude, motion_smoothness
from .records import (
    Embodiment,
    EvaluationSample,
    NormalizationRange,
    SampleScore,
    SignalBundle,
    StabilityGrade,
    SubMetric,
    TaskCategory,
    TrackSet,
    ValidationReport,
    VqaRecordSet,
    normalize_score,
    parse_grade,
    validate_manifest,
)
from .vqa import (
    TaskMetricVector,
    VqaConfig,
    event_completion_rate,
    question_chain_score,
    score_sample_vqa,
)

__version__ = "0.1.0"
