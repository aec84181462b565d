"""Synthetic backend: seeded signal and judge-record generation.

Outputs are pure functions of the job identity and the configured seed, so
repeated runs produce identical files without touching any model or network.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .jobs import ExtractorJob
from .manifest import ManifestEntry


def _job_rng(job: ExtractorJob, purpose: str) -> np.random.Generator:
    material = f"{purpose}|{job.sample_id}|{job.model_id}|{job.replicate_index}|{job.stub.seed}"
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def synthesize_signal_payload(job: ExtractorJob) -> dict:
    """Build a signal-bundle document from a seeded pseudorandom walk."""
    cfg = job.stub
    rng = _job_rng(job, "signals")
    frames = cfg.frame_count

    def walk(points: int, step_scale: float) -> np.ndarray:
        start = rng.uniform(
            [0.2 * cfg.frame_width, 0.2 * cfg.frame_height],
            [0.8 * cfg.frame_width, 0.8 * cfg.frame_height],
            size=(1, points, 2),
        )
        if cfg.motion_profile == "static" or step_scale == 0.0:
            return np.repeat(start, frames, axis=0)
        steps = rng.normal(0.0, step_scale, size=(frames - 1, points, 2))
        positions = np.concatenate([start, start + np.cumsum(steps, axis=0)])
        return np.clip(positions, 0.0, [cfg.frame_width - 1.0, cfg.frame_height - 1.0])

    subject = walk(cfg.subject_points, step_scale=6.0)
    background = walk(cfg.background_points, step_scale=1.5)
    subject_visibility = rng.random((frames, cfg.subject_points)) > 0.05
    subject_visibility[:, 0] = True  # keep one always-visible point per frame
    background_visibility = rng.random((frames, cfg.background_points)) > 0.05
    background_visibility[:, 0] = True
    quality = np.clip(0.72 + rng.normal(0.0, 0.004, size=frames), 0.0, 1.0)

    return {
        "sample_id": job.sample_id,
        "model_id": job.model_id,
        "replicate_index": job.replicate_index,
        "frame_width": cfg.frame_width,
        "frame_height": cfg.frame_height,
        "subject_tracks": np.round(subject, 4).tolist(),
        "subject_visibility": subject_visibility.tolist(),
        "background_tracks": np.round(background, 4).tolist(),
        "background_visibility": background_visibility.tolist(),
        "quality_scores": np.round(quality, 4).tolist(),
    }


# Fixed mid-scale judge outputs for the stub backend.
STUB_RAW_SCORE = 2.5
STUB_GRADE = "A"


def synthesize_vqa_payload(job: ExtractorJob, sample: ManifestEntry) -> dict:
    """Build a judge record with the stub's fixed mid-scale outputs."""
    payload: dict = {
        "sample_id": job.sample_id,
        "model_id": job.model_id,
        "replicate_index": job.replicate_index,
        "pss_raw": STUB_RAW_SCORE,
        "tac_raw": STUB_RAW_SCORE,
        "robot_grade": STUB_GRADE,
        "object_grade": STUB_GRADE,
        "task_submetrics": {},
        "events_completed": None,
        "events_total": None,
        "questions_completed": None,
        "questions_total": None,
    }
    if sample.task_category in ("long_horizon_planning", "visual_reasoning"):
        payload["task_submetrics"] = {"AES": STUB_RAW_SCORE}
    if sample.event_list:
        payload["events_total"] = len(sample.event_list)
        payload["events_completed"] = len(sample.event_list) // 2
    if sample.question_chain:
        payload["questions_total"] = len(sample.question_chain)
        payload["questions_completed"] = len(sample.question_chain) // 2
    return payload
