"""Converts raw judge records into normalized plausibility/adherence metric values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import SchemaError
from .records import (
    RAW_SCORE_RANGE,
    StabilityGrade,
    SubMetric,
    TaskCategory,
    VqaRecordSet,
    normalize_score,
)

# Sub-metric kinds a judge may emit per task, as published in the per-task
# result tables. Records for the embodiment split carry no task sub-metrics.
TASK_SUBMETRICS: Mapping[TaskCategory, frozenset[SubMetric]] = {
    TaskCategory.COMMON_MANIPULATION: frozenset(
        {SubMetric.AES, SubMetric.TCS, SubMetric.OCS, SubMetric.RCS, SubMetric.PSS}
    ),
    TaskCategory.LONG_HORIZON_PLANNING: frozenset(
        {SubMetric.AES, SubMetric.ECR, SubMetric.OCS, SubMetric.RCS, SubMetric.PSS}
    ),
    TaskCategory.MULTI_ENTITY_COLLABORATION: frozenset(
        {SubMetric.ACS, SubMetric.TCS, SubMetric.ECS, SubMetric.OCS, SubMetric.PSS}
    ),
    TaskCategory.SPATIAL_RELATIONSHIP: frozenset(
        {SubMetric.SRS, SubMetric.MFS, SubMetric.OCS, SubMetric.RCS, SubMetric.PSS}
    ),
    TaskCategory.VISUAL_REASONING: frozenset(
        {SubMetric.AES, SubMetric.VRS, SubMetric.OCS, SubMetric.RCS, SubMetric.PSS}
    ),
}


@dataclass(frozen=True)
class VqaConfig:
    """Weights for composing the adherence value from a task's criteria pair."""

    adherence_pair_weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        w1, w2 = self.adherence_pair_weights
        if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-9:
            raise ValueError("adherence pair weights must be non-negative and sum to 1")


def _ratio_score(completed: int, total: int, what: str) -> float:
    if total < 1:
        raise ValueError(f"empty {what} list")
    if not 0 <= completed <= total:
        raise ValueError(f"{what} completed must lie in [0, {total}], got {completed}")
    return 5.0 * completed / total


def event_completion_rate(completed: int, total: int) -> float:
    """How completely an ordered event list was executed, on the raw 0-5 scale."""
    return _ratio_score(completed, total, "event")


def question_chain_score(completed: int, total: int) -> float:
    """Fraction of binary verification questions answered correctly, scaled to 0-5."""
    return _ratio_score(completed, total, "question")


@dataclass(frozen=True)
class TaskMetricVector:
    """Normalized task sub-metric values for one video."""

    task_category: TaskCategory
    values: Mapping[SubMetric, float] = field(default_factory=dict)

    def __post_init__(self):
        legal = TASK_SUBMETRICS[self.task_category]
        illegal = set(self.values) - legal
        if illegal:
            names = ", ".join(sorted(k.value for k in illegal))
            raise SchemaError(
                f"sub-metrics [{names}] are not legal for task {self.task_category.value}"
            )


@dataclass(frozen=True)
class VqaSampleResult:
    """Normalized per-video judge metrics: plausibility, adherence, grades, sub-metrics."""

    pss: float
    tac: float
    robot_grade: StabilityGrade | None
    object_grade: StabilityGrade | None
    task_vector: TaskMetricVector | None


def _adherence_raw(record: VqaRecordSet, task: TaskCategory | None, cfg: VqaConfig) -> float:
    """Raw adherence value, on the 0-5 scale, before normalization.

    Long-horizon planning pairs the event completion rate with the action
    execution sub-score; visual reasoning pairs the question-chain score with
    it. The pair is combined with configurable weights (equal by default).
    When either half of a pair is missing the plain judge value is kept.
    """
    aes = record.task_submetrics.get(SubMetric.AES)
    if task is TaskCategory.LONG_HORIZON_PLANNING and record.events_total:
        first = event_completion_rate(record.events_completed, record.events_total)
    elif task is TaskCategory.VISUAL_REASONING:
        if record.questions_total:
            first = question_chain_score(record.questions_completed, record.questions_total)
        else:
            first = record.task_submetrics.get(SubMetric.VRS)
    else:
        return record.tac_raw
    if first is None or aes is None:
        return record.tac_raw
    w1, w2 = cfg.adherence_pair_weights
    return w1 * first + w2 * aes


def score_sample_vqa(
    record: VqaRecordSet,
    task_category: TaskCategory | None = None,
    cfg: VqaConfig = VqaConfig(),
) -> VqaSampleResult:
    """Normalize one judge record into [0, 1] metric values.

    Deterministic: identical records yield identical outputs. Sub-metric kinds
    outside the task's legal set (or any sub-metric on an embodiment-split
    record) raise :class:`SchemaError`.
    """
    if task_category is None:
        if record.task_submetrics:
            names = ", ".join(sorted(k.value for k in record.task_submetrics))
            raise SchemaError(f"sub-metrics [{names}] given for a record without a task category")
        task_vector = None
    else:
        task_vector = TaskMetricVector(
            task_category=task_category,
            values={
                kind: normalize_score(value, RAW_SCORE_RANGE)
                for kind, value in record.task_submetrics.items()
            },
        )
    tac_raw = _adherence_raw(record, task_category, cfg)
    if not math.isfinite(tac_raw):
        raise SchemaError(f"adherence composition produced a non-finite value {tac_raw!r}")
    return VqaSampleResult(
        pss=normalize_score(record.pss_raw, RAW_SCORE_RANGE),
        tac=normalize_score(tac_raw, RAW_SCORE_RANGE),
        robot_grade=record.robot_grade,
        object_grade=record.object_grade,
        task_vector=task_vector,
    )
