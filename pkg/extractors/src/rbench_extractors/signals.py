"""Signal extraction: point tracks and per-frame quality scores per video."""

from __future__ import annotations

import math
from pathlib import Path

import requests

from .jobs import Backend, ExtractorJob, JobError
from .storage import atomic_write_json
from .stub import synthesize_signal_payload


def validate_signal_payload(payload: dict) -> None:
    """Check the engine's signal-bundle shape contract before writing.

    Mirrors the file-format rules independently so a violation is caught on
    the producing side, never by the consumer.
    """
    for key in ("sample_id", "model_id"):
        if not isinstance(payload.get(key), str) or not payload[key]:
            raise JobError(f"signal payload field {key!r} missing or empty")
    if not isinstance(payload.get("replicate_index"), int) or payload["replicate_index"] < 0:
        raise JobError("replicate_index must be a non-negative integer")
    width, height = payload.get("frame_width"), payload.get("frame_height")
    if not (isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0):
        raise JobError(f"bad frame size {width!r}x{height!r}")

    def check_tracks(tracks_key, visibility_key):
        tracks = payload.get(tracks_key)
        visibility = payload.get(visibility_key)
        if not tracks or not isinstance(tracks, list):
            raise JobError(f"{tracks_key} missing or empty")
        frame_count = len(tracks)
        point_count = len(tracks[0])
        if point_count < 1:
            raise JobError(f"{tracks_key} needs at least one point")
        for frame in tracks:
            if len(frame) != point_count:
                raise JobError(f"{tracks_key} has a ragged frame")
            for point in frame:
                if len(point) != 2 or not all(math.isfinite(float(c)) for c in point):
                    raise JobError(f"{tracks_key} holds a non-finite or non-2D point")
        if len(visibility) != frame_count or any(len(f) != point_count for f in visibility):
            raise JobError(f"{visibility_key} shape does not match {tracks_key}")
        return frame_count

    subject_frames = check_tracks("subject_tracks", "subject_visibility")
    background_frames = check_tracks("background_tracks", "background_visibility")
    if subject_frames != background_frames:
        raise JobError("subject and background track frame counts differ")
    if subject_frames < 2:
        raise JobError("tracks need at least two frames")
    quality = payload.get("quality_scores")
    if not isinstance(quality, list) or len(quality) < 2:
        raise JobError("quality_scores needs at least two frames")
    if any(not 0.0 <= float(q) <= 1.0 for q in quality):
        raise JobError("quality scores must lie in [0, 1]")


def _fetch_live_signals(job: ExtractorJob) -> dict:
    endpoints = job.endpoints
    try:
        health = requests.get(f"{endpoints.signal_url}/health", timeout=endpoints.timeout_s)
    except requests.RequestException as exc:
        raise JobError(f"signal service unavailable: {exc}") from exc
    if health.status_code != 200:
        raise JobError(f"signal service unhealthy: HTTP {health.status_code}")
    if not Path(job.video_path).is_file():
        raise JobError(f"video not readable: {job.video_path}")
    try:
        response = requests.post(
            f"{endpoints.signal_url}/extract",
            json={"video_path": str(job.video_path)},
            timeout=endpoints.timeout_s,
        )
        response.raise_for_status()
        signals = response.json()
    except (requests.RequestException, ValueError) as exc:
        raise JobError(f"signal extraction failed: {exc}") from exc
    signals.update(
        {
            "sample_id": job.sample_id,
            "model_id": job.model_id,
            "replicate_index": job.replicate_index,
        }
    )
    return signals


def extract_signals(job: ExtractorJob) -> Path:
    """Produce one schema-valid signal-bundle file for the job."""
    if job.backend is Backend.STUB:
        payload = synthesize_signal_payload(job)
    else:
        payload = _fetch_live_signals(job)
    validate_signal_payload(payload)
    return atomic_write_json(Path(job.output_dir) / "signals" / f"{job.stem}.json", payload)
