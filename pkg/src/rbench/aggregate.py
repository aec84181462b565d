"""Penalty terms, per-sample score composition, and leaderboard aggregation."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import JoinError
from .records import Embodiment, EvaluationSample, SampleScore, StabilityGrade, TaskCategory

logger = logging.getLogger(__name__)

GRADE_PENALTIES: Mapping[StabilityGrade, float] = {
    StabilityGrade.A: 0.0,
    StabilityGrade.B: 0.2,
    StabilityGrade.C: 0.4,
    StabilityGrade.D: 0.6,
    StabilityGrade.E: 0.8,
}


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty thresholds and visual-quality weights."""

    low_motion_threshold: float = 0.1  # below this a soft penalty kicks in
    very_low_motion_threshold: float = 0.05  # below this an extra flat penalty is added
    very_low_motion_extra: float = 0.1
    grade_penalties: Mapping[StabilityGrade, float] = field(
        default_factory=lambda: dict(GRADE_PENALTIES)
    )
    stability_weight: float = 0.8
    smoothness_weight: float = 0.2

    def __post_init__(self):
        if not 0 < self.very_low_motion_threshold < self.low_motion_threshold:
            raise ValueError("need 0 < very_low_motion_threshold < low_motion_threshold")
        if self.very_low_motion_extra < 0:
            raise ValueError("very_low_motion_extra must be >= 0")
        penalties = [self.grade_penalties[g] for g in StabilityGrade]
        if any(b < a for a, b in zip(penalties, penalties[1:])):
            raise ValueError("grade penalties must be non-decreasing from A to E")
        if abs(self.stability_weight + self.smoothness_weight - 1.0) > 1e-9:
            raise ValueError("stability and smoothness weights must sum to 1")


def motion_penalty(ma: float, cfg: PenaltyConfig = PenaltyConfig()) -> float:
    """Soft penalty for insufficient subject motion.

    Zero at or above the threshold, growing linearly below it, with an extra
    flat amount once motion drops below the very-low threshold.
    """
    if not 0.0 <= ma <= 1.0:
        raise ValueError(f"motion amplitude must lie in [0, 1], got {ma!r}")
    t = cfg.low_motion_threshold
    if ma >= t:
        return 0.0
    if ma >= cfg.very_low_motion_threshold:
        return t - ma
    return (t - ma) + cfg.very_low_motion_extra


def stability_penalty(
    robot: StabilityGrade | None,
    obj: StabilityGrade | None,
    cfg: PenaltyConfig = PenaltyConfig(),
) -> float:
    """Penalty from robot/object stability grades: mean of both, robot alone, or zero."""
    if robot is None:
        if obj is not None:
            raise ValueError("object grade without a robot grade")
        return 0.0
    p_robot = cfg.grade_penalties[robot]
    if obj is None:
        return p_robot
    return (p_robot + cfg.grade_penalties[obj]) / 2.0


def stability_score(
    robot: StabilityGrade | None,
    obj: StabilityGrade | None = None,
    cfg: PenaltyConfig = PenaltyConfig(),
) -> float:
    """Normalized stability value implied by the grade penalty map (1 - penalty)."""
    if robot is None:
        raise ValueError("stability score requires at least a robot grade")
    return 1.0 - stability_penalty(robot, obj, cfg)


def task_completion(pss: float, tac: float) -> float:
    """Task completion: mean of plausibility and adherence."""
    return (pss + tac) / 2.0


def visual_quality(
    rss: float,
    ms: float,
    ma: float,
    robot: StabilityGrade | None = None,
    obj: StabilityGrade | None = None,
    cfg: PenaltyConfig = PenaltyConfig(),
) -> float:
    """Weighted stability/smoothness combination, penalized and floored at zero."""
    combined = cfg.stability_weight * rss + cfg.smoothness_weight * ms
    return max(0.0, combined - motion_penalty(ma, cfg) - stability_penalty(robot, obj, cfg))


def sample_total(tc: float, vq: float) -> float:
    """Total score: mean of task completion and visual quality."""
    return (tc + vq) / 2.0


# Leaderboard indicator keys, in published column order: five tasks then four
# embodiments.
TASK_INDICATORS: Mapping[TaskCategory, str] = {
    TaskCategory.COMMON_MANIPULATION: "manipulation",
    TaskCategory.SPATIAL_RELATIONSHIP: "spatial",
    TaskCategory.MULTI_ENTITY_COLLABORATION: "multi_entity",
    TaskCategory.LONG_HORIZON_PLANNING: "long_horizon",
    TaskCategory.VISUAL_REASONING: "reasoning",
}
EMBODIMENT_INDICATORS: Mapping[Embodiment, str] = {
    Embodiment.SINGLE_ARM: "single_arm",
    Embodiment.DUAL_ARM: "dual_arm",
    Embodiment.QUADRUPED: "quadruped",
    Embodiment.HUMANOID: "humanoid",
}
INDICATOR_ORDER: tuple[str, ...] = tuple(TASK_INDICATORS.values()) + tuple(
    EMBODIMENT_INDICATORS.values()
)


class SampleStratum(NamedTuple):
    """Which leaderboard stratum a sample belongs to."""

    task_category: TaskCategory | None
    embodiment: Embodiment


@dataclass(frozen=True)
class LeaderboardEntry:
    model_id: str
    indicators: Mapping[str, float | None]
    avg: float
    rank: int | None = None


def strata_from_manifest(manifest: Iterable[EvaluationSample]) -> dict[str, SampleStratum]:
    return {s.sample_id: SampleStratum(s.task_category, s.embodiment) for s in manifest}


def aggregate_model(
    scores: Iterable[SampleScore],
    strata: Mapping[str, SampleStratum],
    model_id: str | None = None,
) -> LeaderboardEntry:
    """Aggregate one model's sample scores into leaderboard indicator values.

    Replicates of a sample are averaged first, then each indicator is the mean
    total score over its stratum: task indicators over task-split samples and
    embodiment indicators over embodiment-split samples. The overall average
    spans the nine indicators; strata without samples are excluded from the
    denominator with a warning.
    """
    per_sample: dict[str, list[float]] = {}
    for score in scores:
        if model_id is None:
            model_id = score.model_id
        elif score.model_id != model_id:
            raise ValueError(f"mixed model ids: {score.model_id!r} vs {model_id!r}")
        if score.sample_id not in strata:
            raise JoinError(f"score references unknown sample_id {score.sample_id!r}")
        per_sample.setdefault(score.sample_id, []).append(score.ts)
    if model_id is None:
        raise ValueError("no scores given and no model_id to aggregate")

    by_indicator: dict[str, list[float]] = {key: [] for key in INDICATOR_ORDER}
    for sample_id, totals in per_sample.items():
        sample_ts = sum(totals) / len(totals)
        stratum = strata[sample_id]
        if stratum.task_category is not None:
            by_indicator[TASK_INDICATORS[stratum.task_category]].append(sample_ts)
        else:
            by_indicator[EMBODIMENT_INDICATORS[stratum.embodiment]].append(sample_ts)

    indicators: dict[str, float | None] = {}
    present: list[float] = []
    for key in INDICATOR_ORDER:
        values = by_indicator[key]
        if values:
            value = sum(values) / len(values)
            indicators[key] = value
            present.append(value)
        else:
            indicators[key] = None
            logger.warning("model %s has no samples for indicator %s", model_id, key)
    if not present:
        raise ValueError(f"model {model_id!r} has no scorable samples")
    return LeaderboardEntry(model_id=model_id, indicators=indicators, avg=sum(present) / len(present))


def aggregate_models(
    scores: Iterable[SampleScore], strata: Mapping[str, SampleStratum]
) -> list[LeaderboardEntry]:
    """Aggregate and rank every model appearing in the score set."""
    by_model: dict[str, list[SampleScore]] = {}
    for score in scores:
        by_model.setdefault(score.model_id, []).append(score)
    entries = [
        aggregate_model(model_scores, strata, model_id)
        for model_id, model_scores in sorted(by_model.items())
    ]
    return rank_models(entries)


def rank_models(entries: Sequence[LeaderboardEntry]) -> list[LeaderboardEntry]:
    """Order entries by average (descending, ties broken by model id) and assign ranks."""
    ordered = sorted(entries, key=lambda e: (-e.avg, e.model_id))
    return [
        LeaderboardEntry(e.model_id, e.indicators, e.avg, rank=i + 1)
        for i, e in enumerate(ordered)
    ]


def round_display(value: float, digits: int = 3) -> float:
    """Round for report display (Python's round is half-to-even)."""
    return round(value, digits)


def _table_indicators(table: str) -> tuple[str, ...]:
    if table == "main":
        return INDICATOR_ORDER
    if table == "task":
        return tuple(TASK_INDICATORS.values())
    if table == "embodiment":
        return tuple(EMBODIMENT_INDICATORS.values())
    raise ValueError(f"unknown table {table!r}")


def restrict_entries(entries: Sequence[LeaderboardEntry], table: str) -> list[LeaderboardEntry]:
    """Restrict entries to one indicator block, recomputing averages and ranks."""
    keys = _table_indicators(table)
    if table == "main":
        return rank_models(entries)
    restricted = []
    for entry in entries:
        kept = {key: entry.indicators.get(key) for key in keys}
        present = [v for v in kept.values() if v is not None]
        if not present:
            logger.warning("model %s has no indicators for table %s; dropping", entry.model_id, table)
            continue
        restricted.append(LeaderboardEntry(entry.model_id, kept, sum(present) / len(present)))
    return rank_models(restricted)


def leaderboard_csv(entries: Sequence[LeaderboardEntry], table: str, meta_line: str) -> str:
    keys = _table_indicators(table)
    lines = [f"# {meta_line}"]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["model_id", "rank", "avg", *keys])
    for entry in entries:
        row = [entry.model_id, entry.rank, repr(entry.avg)]
        row.extend("" if entry.indicators.get(k) is None else repr(entry.indicators[k]) for k in keys)
        writer.writerow(row)
    lines.append(buffer.getvalue().rstrip("\n"))
    return "\n".join(lines) + "\n"


def leaderboard_json(entries: Sequence[LeaderboardEntry], table: str, meta: Mapping) -> str:
    keys = _table_indicators(table)
    payload = {
        "meta": dict(meta),
        "table": table,
        "entries": [
            {
                "model_id": entry.model_id,
                "rank": entry.rank,
                "avg": entry.avg,
                "indicators": {k: entry.indicators.get(k) for k in keys},
            }
            for entry in entries
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


_TEXT_HEADERS = {
    "manipulation": "Manipulation",
    "spatial": "Spatial",
    "multi_entity": "Multi-entity",
    "long_horizon": "Long-horizon",
    "reasoning": "Reasoning",
    "single_arm": "Single arm",
    "dual_arm": "Dual arm",
    "quadruped": "Quadruped",
    "humanoid": "Humanoid",
}


def leaderboard_text(entries: Sequence[LeaderboardEntry], table: str, meta_line: str) -> str:
    """Plain-text leaderboard with display rounding, columns in published order."""
    keys = _table_indicators(table)
    headers = ["Models", "Rank", "Avg."] + [_TEXT_HEADERS[k] for k in keys]
    rows = []
    for entry in entries:
        cells = [entry.model_id, str(entry.rank), f"{round_display(entry.avg):.3f}"]
        for key in keys:
            value = entry.indicators.get(key)
            cells.append("-" if value is None else f"{round_display(value):.3f}")
        rows.append(cells)
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i]) for i in range(len(headers))]
    lines = [f"# {meta_line}"]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    for cells in rows:
        lines.append("  ".join(cells[i].ljust(widths[i]) for i in range(len(cells))).rstrip())
    return "\n".join(lines) + "\n"
