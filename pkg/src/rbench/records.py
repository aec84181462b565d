"""Benchmark data model: evaluation samples, extracted signals, judge records, scores.

File formats (all UTF-8 JSON):
  manifest        JSONL, one evaluation sample per line, snake_case keys
  signal bundle   one JSON document per (sample, model, replicate); point tracks
                  are ``[frame][point][2]`` float arrays plus ``[frame][point]``
                  boolean visibility arrays
  judge records   JSONL, one record per line
  score rows      JSONL, one row per (sample, model, replicate)

Readers reject records with missing required fields and ignore unknown extra
fields. All parsed types are immutable and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import GradeParseError, RecordParseError, SchemaError


class TaskCategory(str, Enum):
    COMMON_MANIPULATION = "common_manipulation"
    LONG_HORIZON_PLANNING = "long_horizon_planning"
    MULTI_ENTITY_COLLABORATION = "multi_entity_collaboration"
    SPATIAL_RELATIONSHIP = "spatial_relationship"
    VISUAL_REASONING = "visual_reasoning"


class Embodiment(str, Enum):
    SINGLE_ARM = "single_arm"
    DUAL_ARM = "dual_arm"
    HUMANOID = "humanoid"
    QUADRUPED = "quadruped"


class StabilityGrade(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"


class SubMetric(str, Enum):
    """Task-level sub-metric kinds emitted by the judge."""

    AES = "AES"  # action execution
    TCS = "TCS"  # task completion
    OCS = "OCS"  # object consistency
    RCS = "RCS"  # robot consistency
    PSS = "PSS"  # physical-semantic
    ECR = "ECR"  # event completion ratio
    ECS = "ECS"  # entity consistency
    ACS = "ACS"  # action coordination
    SRS = "SRS"  # spatial relation
    MFS = "MFS"  # manipulation feasibility
    VRS = "VRS"  # visual reasoning


VIEWPOINTS = ("first_person", "third_person")

# Expected manifest composition: 5 tasks x 50 plus 4 embodiments x 100.
EXPECTED_SAMPLES_PER_TASK = 50
EXPECTED_SAMPLES_PER_EMBODIMENT = 100


def parse_grade(token: str) -> StabilityGrade:
    """Parse a stability grade token, tolerating whitespace and case.

    Judges emit inconsistent casing, so tokens are trimmed and upper-cased
    before matching. Anything outside A..E raises :class:`GradeParseError`.
    """
    if not isinstance(token, str):
        raise GradeParseError(str(token))
    cleaned = token.strip().upper()
    try:
        return StabilityGrade(cleaned)
    except ValueError:
        raise GradeParseError(token) from None


@dataclass(frozen=True)
class NormalizationRange:
    """Closed raw-score interval mapped onto [0, 1]."""

    s_min: float
    s_max: float

    def __post_init__(self):
        if not (math.isfinite(self.s_min) and math.isfinite(self.s_max)):
            raise ValueError("normalization bounds must be finite")
        if not self.s_max > self.s_min:
            raise ValueError(f"s_max must exceed s_min, got [{self.s_min}, {self.s_max}]")


#: Raw judge scores live on a 0-5 scale; this range makes their normalization concrete.
RAW_SCORE_RANGE = NormalizationRange(0.0, 5.0)


def normalize_score(s: float, score_range: NormalizationRange = RAW_SCORE_RANGE) -> float:
    """Map a raw value onto [0, 1], clipping values outside the range."""
    if not math.isfinite(s):
        raise ValueError(f"cannot normalize non-finite score {s!r}")
    scaled = (s - score_range.s_min) / (score_range.s_max - score_range.s_min)
    return min(1.0, max(0.0, scaled))


def _require(payload: Mapping[str, Any], key: str):
    if key not in payload or payload[key] is None:
        raise SchemaError(f"missing required field {key!r}")
    return payload[key]


def _as_str(value, key: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"field {key!r} must be a non-empty string, got {value!r}")
    return value


def _as_index(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise SchemaError(f"field {key!r} must be a non-negative integer, got {value!r}")
    return value


def _as_unit_score(value, key: str, upper: float = 5.0) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field {key!r} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= upper:
        raise SchemaError(f"field {key!r} must lie in [0, {upper}], got {value!r}")
    return value


@dataclass(frozen=True)
class EvaluationSample:
    """One manifest entry: prompt, reference image, split membership, metadata."""

    sample_id: str
    embodiment: Embodiment
    prompt: str
    reference_image: str
    metadata: Mapping[str, str]
    task_category: TaskCategory | None = None
    event_list: tuple[str, ...] = ()
    question_chain: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.sample_id:
            raise SchemaError("sample_id must be non-empty")
        if "manipulated_object" not in self.metadata:
            raise SchemaError("metadata must carry 'manipulated_object'")
        viewpoint = self.metadata.get("viewpoint")
        if viewpoint not in VIEWPOINTS:
            raise SchemaError(f"metadata viewpoint must be one of {VIEWPOINTS}, got {viewpoint!r}")
        has_events = bool(self.event_list)
        if has_events != (self.task_category is TaskCategory.LONG_HORIZON_PLANNING):
            raise SchemaError("event_list must be non-empty exactly for long-horizon planning samples")
        has_questions = bool(self.question_chain)
        if has_questions != (self.task_category is TaskCategory.VISUAL_REASONING):
            raise SchemaError("question_chain must be non-empty exactly for visual reasoning samples")

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "EvaluationSample":
        task_raw = payload.get("task_category")
        try:
            task = TaskCategory(task_raw) if task_raw is not None else None
        except ValueError:
            raise SchemaError(f"field 'task_category' has unknown value {task_raw!r}") from None
        try:
            embodiment = Embodiment(_require(payload, "embodiment"))
        except ValueError:
            raise SchemaError(
                f"field 'embodiment' has unknown value {payload.get('embodiment')!r}"
            ) from None
        metadata = _require(payload, "metadata")
        if not isinstance(metadata, Mapping):
            raise SchemaError("field 'metadata' must be an object")
        return cls(
            sample_id=_as_str(_require(payload, "sample_id"), "sample_id"),
            task_category=task,
            embodiment=embodiment,
            prompt=_as_str(_require(payload, "prompt"), "prompt"),
            reference_image=_as_str(_require(payload, "reference_image"), "reference_image"),
            metadata=dict(metadata),
            event_list=tuple(payload.get("event_list") or ()),
            question_chain=tuple(payload.get("question_chain") or ()),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "task_category": self.task_category.value if self.task_category else None,
            "embodiment": self.embodiment.value,
            "prompt": self.prompt,
            "reference_image": self.reference_image,
            "metadata": dict(self.metadata),
            "event_list": list(self.event_list),
            "question_chain": list(self.question_chain),
        }


def _freeze_array(values, dtype, key: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(values, dtype=dtype)
    except (TypeError, ValueError):
        raise SchemaError(f"field {key!r} is not a well-formed array") from None
    if arr.ndim != ndim:
        raise SchemaError(f"field {key!r} must have {ndim} dimensions, got {arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrackSet:
    """Point tracks: per-frame 2D positions with per-point visibility flags."""

    positions: np.ndarray  # (frames, points, 2) float
    visibility: np.ndarray  # (frames, points) bool

    def __post_init__(self):
        pos = _freeze_array(self.positions, float, "tracks", 3)
        vis = _freeze_array(self.visibility, bool, "visibility", 2)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "visibility", vis)
        if pos.shape[2] != 2:
            raise SchemaError(f"track positions must be (x, y) pairs, got shape {pos.shape}")
        if pos.shape[1] < 1:
            raise SchemaError("a track set needs at least one tracked point")
        if vis.shape != pos.shape[:2]:
            raise SchemaError(
                f"visibility shape {vis.shape} does not match tracks {pos.shape[:2]}"
            )
        if not np.all(np.isfinite(pos)):
            raise SchemaError("track coordinates must all be finite")

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    @property
    def point_count(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class SignalBundle:
    """Per-video extracted signals: subject/background tracks and quality scores."""

    sample_id: str
    model_id: str
    replicate_index: int
    frame_width: int
    frame_height: int
    subject_tracks: TrackSet
    background_tracks: TrackSet
    quality_scores: np.ndarray  # (T,) floats in [0, 1]

    def __post_init__(self):
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise SchemaError(
                f"frame size must be positive, got {self.frame_width}x{self.frame_height}"
            )
        if self.replicate_index < 0:
            raise SchemaError("replicate_index must be >= 0")
        if self.subject_tracks.frame_count != self.background_tracks.frame_count:
            raise SchemaError(
                "subject and background tracks must share a frame count, got "
                f"{self.subject_tracks.frame_count} vs {self.background_tracks.frame_count}"
            )
        if self.subject_tracks.frame_count < 2:
            raise SchemaError("tracks need at least two frames")
        quality = _freeze_array(self.quality_scores, float, "quality_scores", 1)
        object.__setattr__(self, "quality_scores", quality)
        if quality.shape[0] < 2:
            raise SchemaError("quality_scores needs at least two frames")
        if not np.all(np.isfinite(quality)) or quality.min() < 0.0 or quality.max() > 1.0:
            raise SchemaError("quality scores must all lie in [0, 1]")

    @property
    def frame_count(self) -> int:
        return self.subject_tracks.frame_count

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "SignalBundle":
        return cls(
            sample_id=_as_str(_require(payload, "sample_id"), "sample_id"),
            model_id=_as_str(_require(payload, "model_id"), "model_id"),
            replicate_index=_as_index(_require(payload, "replicate_index"), "replicate_index"),
            frame_width=_as_index(_require(payload, "frame_width"), "frame_width"),
            frame_height=_as_index(_require(payload, "frame_height"), "frame_height"),
            subject_tracks=TrackSet(
                _require(payload, "subject_tracks"), _require(payload, "subject_visibility")
            ),
            background_tracks=TrackSet(
                _require(payload, "background_tracks"), _require(payload, "background_visibility")
            ),
            quality_scores=_require(payload, "quality_scores"),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "model_id": self.model_id,
            "replicate_index": self.replicate_index,
            "frame_width": self.frame_width,
            "frame_height": self.frame_height,
            "subject_tracks": self.subject_tracks.positions.tolist(),
            "subject_visibility": self.subject_tracks.visibility.tolist(),
            "background_tracks": self.background_tracks.positions.tolist(),
            "background_visibility": self.background_tracks.visibility.tolist(),
            "quality_scores": self.quality_scores.tolist(),
        }


def _as_count_pair(payload, completed_key, total_key):
    completed = payload.get(completed_key)
    total = payload.get(total_key)
    if (completed is None) != (total is None):
        raise SchemaError(f"{completed_key} and {total_key} must be present together")
    if completed is None:
        return None, None
    completed = _as_index(completed, completed_key)
    total = _as_index(total, total_key)
    if completed > total:
        raise SchemaError(f"{completed_key} ({completed}) exceeds {total_key} ({total})")
    return completed, total


@dataclass(frozen=True)
class VqaRecordSet:
    """Raw judge outputs for one generated video.

    Grades are optional; an object grade without a robot grade is rejected
    because the stability penalty branches on which grades exist.
    """

    sample_id: str
    model_id: str
    replicate_index: int
    pss_raw: float
    tac_raw: float
    robot_grade: StabilityGrade | None = None
    object_grade: StabilityGrade | None = None
    task_submetrics: Mapping[SubMetric, float] = field(default_factory=dict)
    events_completed: int | None = None
    events_total: int | None = None
    questions_completed: int | None = None
    questions_total: int | None = None

    def __post_init__(self):
        if self.replicate_index < 0:
            raise SchemaError("replicate_index must be >= 0")
        if self.object_grade is not None and self.robot_grade is None:
            raise SchemaError("object grade present without a robot grade")
        for name, value in (("pss_raw", self.pss_raw), ("tac_raw", self.tac_raw)):
            if not math.isfinite(value) or not 0.0 <= value <= 5.0:
                raise SchemaError(f"field {name!r} must lie in [0, 5], got {value!r}")
        for kind, value in self.task_submetrics.items():
            if not math.isfinite(value) or not 0.0 <= value <= 5.0:
                raise SchemaError(f"sub-metric {kind.value} must lie in [0, 5], got {value!r}")
        for completed, total, label in (
            (self.events_completed, self.events_total, "events"),
            (self.questions_completed, self.questions_total, "questions"),
        ):
            if (completed is None) != (total is None):
                raise SchemaError(f"{label} completed/total must be present together")
            if completed is not None and not 0 <= completed <= total:
                raise SchemaError(f"{label} completed must lie in [0, total]")

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "VqaRecordSet":
        submetrics: dict[SubMetric, float] = {}
        raw_sub = payload.get("task_submetrics") or {}
        if not isinstance(raw_sub, Mapping):
            raise SchemaError("field 'task_submetrics' must be an object")
        for key, value in raw_sub.items():
            try:
                kind = SubMetric(key)
            except ValueError:
                raise SchemaError(f"unknown sub-metric kind {key!r}") from None
            submetrics[kind] = _as_unit_score(value, f"task_submetrics.{key}")
        robot = payload.get("robot_grade")
        obj = payload.get("object_grade")
        events_completed, events_total = _as_count_pair(payload, "events_completed", "events_total")
        questions_completed, questions_total = _as_count_pair(
            payload, "questions_completed", "questions_total"
        )
        return cls(
            sample_id=_as_str(_require(payload, "sample_id"), "sample_id"),
            model_id=_as_str(_require(payload, "model_id"), "model_id"),
            replicate_index=_as_index(_require(payload, "replicate_index"), "replicate_index"),
            pss_raw=_as_unit_score(_require(payload, "pss_raw"), "pss_raw"),
            tac_raw=_as_unit_score(_require(payload, "tac_raw"), "tac_raw"),
            robot_grade=parse_grade(robot) if robot is not None else None,
            object_grade=parse_grade(obj) if obj is not None else None,
            task_submetrics=submetrics,
            events_completed=events_completed,
            events_total=events_total,
            questions_completed=questions_completed,
            questions_total=questions_total,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "model_id": self.model_id,
            "replicate_index": self.replicate_index,
            "pss_raw": self.pss_raw,
            "tac_raw": self.tac_raw,
            "robot_grade": self.robot_grade.value if self.robot_grade else None,
            "object_grade": self.object_grade.value if self.object_grade else None,
            "task_submetrics": {k.value: v for k, v in sorted(self.task_submetrics.items())},
            "events_completed": self.events_completed,
            "events_total": self.events_total,
            "questions_completed": self.questions_completed,
            "questions_total": self.questions_total,
        }


_SCORE_FIELDS = ("pss", "tac", "rss", "mss", "mas", "tc", "vq", "ts")


@dataclass(frozen=True)
class SampleScore:
    """Per-video metric vector plus derived task-completion/visual-quality/total."""

    sample_id: str
    model_id: str
    replicate_index: int
    pss: float
    tac: float
    rss: float
    mss: float
    mas: float
    tc: float
    vq: float
    ts: float

    def __post_init__(self):
        for name in _SCORE_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise SchemaError(f"score field {name!r} must be finite, got {value!r}")
            if not 0.0 <= value <= 1.0:
                raise SchemaError(f"score field {name!r} must lie in [0, 1], got {value!r}")
        if abs(self.ts - (self.tc + self.vq) / 2.0) > 1e-12:
            raise SchemaError("ts must equal (tc + vq) / 2")

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "SampleScore":
        kwargs = {name: _as_unit_score(_require(payload, name), name, upper=1.0) for name in _SCORE_FIELDS}
        return cls(
            sample_id=_as_str(_require(payload, "sample_id"), "sample_id"),
            model_id=_as_str(_require(payload, "model_id"), "model_id"),
            replicate_index=_as_index(_require(payload, "replicate_index"), "replicate_index"),
            **kwargs,
        )

    def to_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "sample_id": self.sample_id,
            "model_id": self.model_id,
            "replicate_index": self.replicate_index,
        }
        row.update({name: getattr(self, name) for name in _SCORE_FIELDS})
        return row


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of manifest validation: hard violations plus advisory flags."""

    sample_count: int
    violations: tuple[str, ...]
    flags: tuple[str, ...]
    task_counts: Mapping[TaskCategory, int]
    embodiment_counts: Mapping[Embodiment, int]

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary_lines(self) -> list[str]:
        lines = [f"samples: {self.sample_count}"]
        for task in TaskCategory:
            lines.append(f"task {task.value}: {self.task_counts.get(task, 0)}")
        for emb in Embodiment:
            lines.append(f"embodiment {emb.value}: {self.embodiment_counts.get(emb, 0)}")
        for flag in self.flags:
            lines.append(f"flag: {flag}")
        for violation in self.violations:
            lines.append(f"violation: {violation}")
        return lines


def validate_manifest(
    manifest: Sequence[EvaluationSample],
    *,
    base_dir: Path | None = None,
    check_images: bool = True,
) -> ValidationReport:
    """Validate a parsed manifest.

    Duplicate sample ids and missing reference images are violations; count
    deviations from the expected 250/400 split are flags only, so partial
    benchmarks can still be scored. The report is independent of input order.
    """
    violations: set[str] = set()
    flags: list[str] = []

    seen: dict[str, int] = {}
    for sample in manifest:
        seen[sample.sample_id] = seen.get(sample.sample_id, 0) + 1
    for sample_id, count in seen.items():
        if count > 1:
            violations.add(f"duplicate sample_id {sample_id!r} ({count} occurrences)")

    if check_images:
        for sample in manifest:
            path = Path(sample.reference_image)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.is_file():
                violations.add(f"missing reference image for {sample.sample_id!r}: {path}")

    task_counts: dict[TaskCategory, int] = {}
    embodiment_counts: dict[Embodiment, int] = {}
    for sample in manifest:
        if sample.task_category is not None:
            task_counts[sample.task_category] = task_counts.get(sample.task_category, 0) + 1
        else:
            embodiment_counts[sample.embodiment] = embodiment_counts.get(sample.embodiment, 0) + 1

    if not manifest:
        flags.append("manifest empty")
    for task in TaskCategory:
        count = task_counts.get(task, 0)
        if count != EXPECTED_SAMPLES_PER_TASK:
            flags.append(
                f"task {task.value} has {count} samples (expected {EXPECTED_SAMPLES_PER_TASK})"
            )
    for emb in Embodiment:
        count = embodiment_counts.get(emb, 0)
        if count != EXPECTED_SAMPLES_PER_EMBODIMENT:
            flags.append(
                f"embodiment {emb.value} has {count} samples "
                f"(expected {EXPECTED_SAMPLES_PER_EMBODIMENT})"
            )

    return ValidationReport(
        sample_count=len(manifest),
        violations=tuple(sorted(violations)),
        flags=tuple(flags),
        task_counts=task_counts,
        embodiment_counts=embodiment_counts,
    )


def _iter_jsonl(path: Path) -> Iterable[tuple[int, Any]]:
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                yield line_no, json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"invalid JSON: {exc.msg}", line=line_no) from None


def _parse_jsonl_records(path: Path, from_dict, kind: str) -> list:
    out = []
    for line_no, payload in _iter_jsonl(path):
        if not isinstance(payload, Mapping):
            raise RecordParseError(f"{kind} record must be a JSON object", line=line_no)
        try:
            out.append(from_dict(payload))
        except (SchemaError, GradeParseError) as exc:
            field_name = _guess_field(str(exc))
            raise RecordParseError(f"invalid {kind} record: {exc}", line=line_no, field=field_name) from exc
    return out


def _guess_field(message: str) -> str | None:
    # Error messages quote the field name; surface it for line/field reporting.
    if "'" in message:
        start = message.index("'") + 1
        end = message.find("'", start)
        if end > start:
            return message[start:end]
    return None


def load_manifest(path: str | Path) -> list[EvaluationSample]:
    return _parse_jsonl_records(Path(path), EvaluationSample.from_dict, "manifest")


def dump_manifest(samples: Iterable[EvaluationSample], path: str | Path) -> None:
    _dump_jsonl((s.to_dict() for s in samples), path)


def load_vqa_records(path: str | Path) -> list[VqaRecordSet]:
    return _parse_jsonl_records(Path(path), VqaRecordSet.from_dict, "judge")


def dump_vqa_records(records: Iterable[VqaRecordSet], path: str | Path) -> None:
    _dump_jsonl((r.to_dict() for r in records), path)


def load_signal_bundle(path: str | Path) -> SignalBundle:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise RecordParseError(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno) from None
    if not isinstance(payload, Mapping):
        raise RecordParseError(f"signal bundle {path} must be a JSON object")
    return SignalBundle.from_dict(payload)


def dump_signal_bundle(bundle: SignalBundle, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bundle.to_dict()) + "\n", encoding="utf-8")


def _dump_jsonl(rows: Iterable[Mapping[str, Any]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row) + "\n")
