from __future__ import annotations

import numpy as np
import pytest

from rbench.records import (
    Embodiment,
    EvaluationSample,
    SignalBundle,
    SubMetric,
    TaskCategory,
    TrackSet,
    VqaRecordSet,
)


def make_sample(
    sample_id: str,
    *,
    task: TaskCategory | None = None,
    embodiment: Embodiment = Embodiment.SINGLE_ARM,
    reference_image: str = "ref.png",
    events: tuple[str, ...] = (),
    questions: tuple[str, ...] = (),
) -> EvaluationSample:
    if task is TaskCategory.LONG_HORIZON_PLANNING and not events:
        events = ("open the door", "take out the box", "close the door")
    if task is TaskCategory.VISUAL_REASONING and not questions:
        questions = ("does the robot grasp the blue book?", "is the book placed in the basket?")
    return EvaluationSample(
        sample_id=sample_id,
        task_category=task,
        embodiment=embodiment,
        prompt=f"prompt for {sample_id}",
        reference_image=reference_image,
        metadata={"manipulated_object": "box", "viewpoint": "third_person"},
        event_list=events,
        question_chain=questions,
    )


def make_tracks(positions, visibility=None) -> TrackSet:
    positions = np.asarray(positions, dtype=float)
    if visibility is None:
        visibility = np.ones(positions.shape[:2], dtype=bool)
    return TrackSet(positions=positions, visibility=np.asarray(visibility, dtype=bool))


def make_bundle(
    *,
    sample_id: str = "s-001",
    model_id: str = "model-a",
    replicate_index: int = 0,
    width: int = 300,
    height: int = 400,
    subject=None,
    background=None,
    quality=(0.5, 0.5),
) -> SignalBundle:
    if subject is None:
        subject = make_tracks([[[0.0, 0.0]], [[3.0, 4.0]]])
    if background is None:
        frames = subject.frame_count
        background = make_tracks([[[10.0, 10.0]]] * frames)
    return SignalBundle(
        sample_id=sample_id,
        model_id=model_id,
        replicate_index=replicate_index,
        frame_width=width,
        frame_height=height,
        subject_tracks=subject,
        background_tracks=background,
        quality_scores=np.asarray(quality, dtype=float),
    )


def make_vqa_record(
    *,
    sample_id: str = "s-001",
    model_id: str = "model-a",
    replicate_index: int = 0,
    pss_raw: float = 4.0,
    tac_raw: float = 3.0,
    robot_grade="A",
    object_grade="A",
    **extra,
) -> VqaRecordSet:
    from rbench.records import parse_grade

    return VqaRecordSet(
        sample_id=sample_id,
        model_id=model_id,
        replicate_index=replicate_index,
        pss_raw=pss_raw,
        tac_raw=tac_raw,
        robot_grade=parse_grade(robot_grade) if robot_grade else None,
        object_grade=parse_grade(object_grade) if object_grade else None,
        **extra,
    )


def random_bundle(rng: np.random.Generator, max_frames: int = 6, max_points: int = 4) -> SignalBundle:
    """Small random signal bundle for oracle comparisons."""
    frames = int(rng.integers(2, max_frames + 1))
    k_subject = int(rng.integers(1, max_points + 1))
    k_background = int(rng.integers(1, max_points + 1))
    width = int(rng.integers(10, 800))
    height = int(rng.integers(10, 800))
    subject = make_tracks(
        rng.uniform(0, max(width, height), size=(frames, k_subject, 2)),
        rng.random((frames, k_subject)) > 0.25,
    )
    background = make_tracks(
        rng.uniform(0, max(width, height), size=(frames, k_background, 2)),
        rng.random((frames, k_background)) > 0.25,
    )
    quality = rng.random(int(rng.integers(2, 9)))
    return make_bundle(
        width=width, height=height, subject=subject, background=background, quality=quality
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)


def build_pipeline_fixture(root, models=("model-a", "model-b"), replicates=2):
    """Manifest + signal + judge files for end-to-end CLI runs.

    Deterministic contents: tracks and judge values are derived from a fixed
    seed so repeated builds are byte-identical.
    """
    from rbench.records import dump_manifest, dump_signal_bundle, dump_vqa_records

    root.mkdir(parents=True, exist_ok=True)
    image = root / "ref.png"
    image.write_bytes(b"\x89PNG fixture")
    samples = [
        make_sample("s-manip", task=TaskCategory.COMMON_MANIPULATION, reference_image=str(image)),
        make_sample("s-plan", task=TaskCategory.LONG_HORIZON_PLANNING, reference_image=str(image)),
        make_sample("s-dual", embodiment=Embodiment.DUAL_ARM, reference_image=str(image)),
        make_sample("s-quad", embodiment=Embodiment.QUADRUPED, reference_image=str(image)),
    ]
    manifest_path = root / "manifest.jsonl"
    dump_manifest(samples, manifest_path)

    signals_dir = root / "signals"
    vqa_dir = root / "vqa"
    signals_dir.mkdir(exist_ok=True)
    vqa_dir.mkdir(exist_ok=True)

    fixture_rng = np.random.default_rng(7)
    grades = ["A", "B", "C", "A", "B"]
    vqa_records = []
    for model in models:
        for sample in samples:
            for replicate in range(replicates):
                frames = 4
                start = fixture_rng.uniform(20, 200, size=(1, 3, 2))
                steps = fixture_rng.uniform(-40, 40, size=(frames - 1, 3, 2))
                subject = make_tracks(np.concatenate([start, start + steps.cumsum(axis=0)]))
                background = make_tracks(
                    np.tile(fixture_rng.uniform(0, 50, size=(1, 2, 2)), (frames, 1, 1))
                    + fixture_rng.uniform(-1, 1, size=(frames, 2, 2))
                )
                bundle = make_bundle(
                    sample_id=sample.sample_id,
                    model_id=model,
                    replicate_index=replicate,
                    width=640,
                    height=480,
                    subject=subject,
                    background=background,
                    quality=np.round(fixture_rng.uniform(0.4, 0.9, size=5), 3),
                )
                dump_signal_bundle(
                    bundle, signals_dir / f"{model}__{sample.sample_id}__r{replicate}.json"
                )
                extra = {}
                if sample.task_category is TaskCategory.LONG_HORIZON_PLANNING:
                    extra = {
                        "events_completed": int(fixture_rng.integers(0, 4)),
                        "events_total": 3,
                        "task_submetrics": {SubMetric.AES: float(fixture_rng.integers(0, 11)) / 2},
                    }
                vqa_records.append(
                    make_vqa_record(
                        sample_id=sample.sample_id,
                        model_id=model,
                        replicate_index=replicate,
                        pss_raw=float(fixture_rng.integers(0, 11)) / 2,
                        tac_raw=float(fixture_rng.integers(0, 11)) / 2,
                        robot_grade=grades[int(fixture_rng.integers(0, len(grades)))],
                        object_grade=grades[int(fixture_rng.integers(0, len(grades)))],
                        **extra,
                    )
                )
    dump_vqa_records(vqa_records, vqa_dir / "judged.jsonl")
    return {
        "manifest": manifest_path,
        "signals_dir": signals_dir,
        "vqa_dir": vqa_dir,
        "samples": samples,
    }
