from __future__ import annotations

import itertools
import json

import pytest

from conftest import make_sample
from rbench.aggregate import (
    GRADE_PENALTIES,
    INDICATOR_ORDER,
    LeaderboardEntry,
    PenaltyConfig,
    SampleStratum,
    aggregate_model,
    aggregate_models,
    leaderboard_csv,
    leaderboard_json,
    leaderboard_text,
    motion_penalty,
    rank_models,
    restrict_entries,
    sample_total,
    stability_penalty,
    stability_score,
    strata_from_manifest,
    task_completion,
    visual_quality,
)
from rbench.errors import JoinError
from rbench.records import Embodiment, SampleScore, StabilityGrade, TaskCategory


def make_score(sample_id, model_id="m", replicate=0, ts=0.5, **overrides):
    fields = dict(pss=ts, tac=ts, rss=ts, mss=ts, mas=ts, tc=ts, vq=ts, ts=ts)
    fields.update(overrides)
    return SampleScore(
        sample_id=sample_id, model_id=model_id, replicate_index=replicate, **fields
    )


class TestMotionPenalty:
    def test_middle_branch(self):
        assert motion_penalty(0.07) == pytest.approx(0.03, abs=1e-15)

    def test_low_branch_adds_extra(self):
        assert motion_penalty(0.03) == pytest.approx(0.17, abs=1e-15)

    def test_zero_above_threshold(self):
        assert motion_penalty(0.25) == 0.0

    def test_continuous_at_threshold(self):
        eps = 1e-9
        assert abs(motion_penalty(0.1 - eps) - motion_penalty(0.1)) < 1e-8

    def test_jump_at_low_threshold_equals_extra(self):
        eps = 1e-12
        jump = motion_penalty(0.05 - eps) - motion_penalty(0.05)
        assert jump == pytest.approx(0.1, abs=1e-9)

    def test_non_increasing(self, rng):
        values = sorted(rng.random(200))
        penalties = [motion_penalty(v) for v in values]
        assert all(b <= a for a, b in zip(penalties, penalties[1:]))

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            PenaltyConfig(low_motion_threshold=0.05, very_low_motion_threshold=0.1)
        with pytest.raises(ValueError):
            PenaltyConfig(stability_weight=0.9, smoothness_weight=0.2)


class TestStabilityPenalty:
    def test_both_grades_average(self):
        assert stability_penalty(StabilityGrade.B, StabilityGrade.D) == pytest.approx(0.4)

    def test_grade_a_zero(self):
        assert stability_penalty(StabilityGrade.A, None) == 0.0

    def test_neither_zero(self):
        assert stability_penalty(None, None) == 0.0

    def test_object_without_robot_rejected(self):
        with pytest.raises(ValueError):
            stability_penalty(None, StabilityGrade.B)

    def test_all_grade_pairs(self):
        for robot, obj in itertools.product(StabilityGrade, repeat=2):
            expected = (GRADE_PENALTIES[robot] + GRADE_PENALTIES[obj]) / 2
            assert stability_penalty(robot, obj) == pytest.approx(expected, abs=1e-15)

    def test_robot_only(self):
        for robot in StabilityGrade:
            assert stability_penalty(robot, None) == GRADE_PENALTIES[robot]

    def test_score_is_one_minus_penalty(self):
        assert stability_score(StabilityGrade.B, StabilityGrade.D) == pytest.approx(0.6)
        assert stability_score(StabilityGrade.A) == 1.0
        with pytest.raises(ValueError):
            stability_score(None)


class TestComposition:
    def test_task_completion_published_row(self):
        assert task_completion(0.638, 0.570) == pytest.approx(0.604, abs=1e-12)

    def test_task_completion_edges(self):
        assert task_completion(0.0, 0.0) == 0.0
        assert task_completion(1.0, 0.5) == 0.75

    def test_sample_total_published_rows(self):
        assert sample_total(0.604, 0.561) == pytest.approx(0.5825, abs=1e-12)
        assert round(sample_total(0.344, 0.475), 3) == 0.409
        assert sample_total(0.0, 0.0) == 0.0

    def test_symmetry_and_lipschitz(self, rng):
        for _ in range(100):
            a, b, shift = rng.random(3)
            assert task_completion(a, b) == task_completion(b, a)
            assert sample_total(a, b) == sample_total(b, a)
            assert abs(task_completion(a + 0, b) - task_completion(min(a + shift, 1.0), b)) <= shift

    def test_visual_quality_grades_penalized(self):
        value = visual_quality(0.8, 1.0, 0.5, StabilityGrade.B, StabilityGrade.D)
        assert value == pytest.approx(0.44, abs=1e-12)

    def test_visual_quality_floor(self):
        assert visual_quality(0.0, 0.0, 0.03, StabilityGrade.E, StabilityGrade.E) == 0.0

    def test_visual_quality_perfect(self):
        assert visual_quality(1.0, 1.0, 1.0, StabilityGrade.A, StabilityGrade.A) == 1.0

    def test_visual_quality_unit_interval(self, rng):
        grades = list(StabilityGrade) + [None]
        for _ in range(2000):
            rss, ms, ma = rng.random(3)
            robot = grades[rng.integers(0, len(grades))]
            obj = grades[rng.integers(0, len(StabilityGrade))] if robot is not None else None
            value = visual_quality(float(rss), float(ms), float(ma), robot, obj)
            assert 0.0 <= value <= 1.0


def _nine_stratum_manifest():
    samples = []
    for task in TaskCategory:
        samples.append(make_sample(f"task-{task.value}", task=task))
    for emb in Embodiment:
        samples.append(make_sample(f"emb-{emb.value}", embodiment=emb))
    return samples


class TestAggregateModel:
    def test_replicates_average_first(self):
        strata = {"s1": SampleStratum(None, Embodiment.SINGLE_ARM)}
        scores = [make_score("s1", replicate=i, ts=v) for i, v in enumerate((0.2, 0.4, 0.6))]
        entry = aggregate_model(scores, strata)
        assert entry.indicators["single_arm"] == pytest.approx(0.4, abs=1e-12)

    def test_constant_scores_propagate(self):
        manifest = _nine_stratum_manifest()
        strata = strata_from_manifest(manifest)
        scores = [make_score(s.sample_id, ts=0.25) for s in manifest]
        entry = aggregate_model(scores, strata)
        assert all(v == pytest.approx(0.25) for v in entry.indicators.values())
        assert entry.avg == pytest.approx(0.25)

    def test_permutation_invariant(self, rng):
        manifest = _nine_stratum_manifest()
        strata = strata_from_manifest(manifest)
        scores = [
            make_score(s.sample_id, replicate=r, ts=float(rng.random()))
            for s in manifest
            for r in range(3)
        ]
        entry_a = aggregate_model(scores, strata)
        shuffled = list(scores)
        rng.shuffle(shuffled)
        entry_b = aggregate_model(shuffled, strata)
        assert entry_a == entry_b

    def test_linear_in_replicate_values(self):
        manifest = _nine_stratum_manifest()
        strata = strata_from_manifest(manifest)
        low = [make_score(s.sample_id, ts=0.2) for s in manifest]
        high = [make_score(s.sample_id, ts=0.6) for s in manifest]
        mid = [make_score(s.sample_id, ts=0.4) for s in manifest]
        avg_of_entries = (aggregate_model(low, strata).avg + aggregate_model(high, strata).avg) / 2
        assert aggregate_model(mid, strata).avg == pytest.approx(avg_of_entries, abs=1e-12)

    def test_unknown_sample_is_join_error(self):
        with pytest.raises(JoinError):
            aggregate_model([make_score("ghost")], {"s1": SampleStratum(None, Embodiment.HUMANOID)})

    def test_missing_stratum_excluded_from_average(self):
        strata = {
            "s1": SampleStratum(TaskCategory.COMMON_MANIPULATION, Embodiment.SINGLE_ARM),
            "s2": SampleStratum(None, Embodiment.HUMANOID),
        }
        entry = aggregate_model([make_score("s1", ts=0.3), make_score("s2", ts=0.5)], strata)
        assert entry.indicators["manipulation"] == pytest.approx(0.3)
        assert entry.indicators["humanoid"] == pytest.approx(0.5)
        assert entry.indicators["reasoning"] is None
        assert entry.avg == pytest.approx(0.4)

    def test_task_samples_do_not_leak_into_embodiment_strata(self):
        # a task-split sample still has an embodiment, but only the task
        # indicator may count it
        strata = {"s1": SampleStratum(TaskCategory.SPATIAL_RELATIONSHIP, Embodiment.DUAL_ARM)}
        entry = aggregate_model([make_score("s1", ts=0.9)], strata)
        assert entry.indicators["spatial"] == pytest.approx(0.9)
        assert entry.indicators["dual_arm"] is None


class TestRankModels:
    def test_ties_broken_by_model_id(self):
        entries = [
            LeaderboardEntry("b", {}, 0.5),
            LeaderboardEntry("a", {}, 0.6),
            LeaderboardEntry("c", {}, 0.5),
        ]
        ranked = rank_models(entries)
        assert [(e.model_id, e.rank) for e in ranked] == [("a", 1), ("b", 2), ("c", 3)]

    def test_single_model(self):
        ranked = rank_models([LeaderboardEntry("only", {}, 0.1)])
        assert ranked[0].rank == 1

    def test_order_consistent_with_avg(self, rng):
        entries = [LeaderboardEntry(f"m{i}", {}, float(rng.random())) for i in range(20)]
        ranked = rank_models(entries)
        for first, second in zip(ranked, ranked[1:]):
            assert first.avg >= second.avg
            assert first.rank + 1 == second.rank


class TestWriters:
    def _entries(self):
        manifest = _nine_stratum_manifest()
        strata = strata_from_manifest(manifest)
        scores = [
            make_score(s.sample_id, model_id=m, ts=round(0.1 + 0.05 * i + (0.3 if m == "m2" else 0), 3))
            for m in ("m1", "m2")
            for i, s in enumerate(manifest)
        ]
        return aggregate_models(scores, strata)

    def test_csv_and_json_numeric_content_identical(self):
        entries = self._entries()
        csv_text = leaderboard_csv(entries, "main", "meta")
        json_payload = json.loads(leaderboard_json(entries, "main", {}))
        csv_rows = [line.split(",") for line in csv_text.splitlines()[2:]]
        for csv_row, json_entry in zip(csv_rows, json_payload["entries"]):
            assert csv_row[0] == json_entry["model_id"]
            assert int(csv_row[1]) == json_entry["rank"]
            assert float(csv_row[2]) == json_entry["avg"]
            for offset, key in enumerate(INDICATOR_ORDER):
                assert float(csv_rows[0][3 + offset]) == json_payload["entries"][0]["indicators"][key]

    def test_text_table_column_order(self):
        text = leaderboard_text(self._entries(), "main", "meta")
        header = text.splitlines()[1]
        assert header.split()[:3] == ["Models", "Rank", "Avg."]
        assert "Manipulation" in header and "Humanoid" in header
        assert header.index("Manipulation") < header.index("Spatial") < header.index("Humanoid")

    def test_restrict_to_task_table(self):
        entries = self._entries()
        task_entries = restrict_entries(entries, "task")
        keys = set(task_entries[0].indicators)
        assert keys == {"manipulation", "spatial", "multi_entity", "long_horizon", "reasoning"}
        expected = sum(v for v in task_entries[0].indicators.values()) / 5
        assert task_entries[0].avg == pytest.approx(expected)
