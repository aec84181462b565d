"""Judge-record extraction: prompt construction, judge calls, transcript parsing.

Raw judge transcripts are persisted next to the parsed records so parsing can
be re-run offline. An unparsable reply produces an error record (with the raw
reply attached) instead of a judge record; the engine then skips that row.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .frames import GRID_FRAME_COUNT, compose_grid, read_video_frames, uniform_frame_indices
from .jobs import Backend, ExtractorJob, JobError
from .judge import JudgeClient, JudgeResponseError, encode_grid, parse_judge_response
from .manifest import ManifestEntry
from .storage import atomic_write_json
from .stub import synthesize_vqa_payload

_EMBODIMENT_NAMES = {
    "single_arm": "single-arm robot",
    "dual_arm": "dual-arm robot",
    "humanoid": "humanoid robot",
    "quadruped": "quadruped robot",
}


def load_template(name: str) -> str:
    return resources.files("rbench_extractors.templates").joinpath(f"{name}.txt").read_text(
        encoding="utf-8"
    )


def build_question_chain_prompt(sample: ManifestEntry) -> str:
    return load_template("visual_reasoning_question_chain").format(prompt=sample.prompt)


def build_assessment_prompt(sample: ManifestEntry, question_chain: tuple[str, ...]) -> str:
    numbered = "\n".join(f"{i + 1}. {q}" for i, q in enumerate(question_chain)) or "(none)"
    return load_template("visual_reasoning_assessment").format(
        view_perspective=sample.viewpoint.replace("_", " "),
        content_summary=sample.prompt,
        manipulator=_EMBODIMENT_NAMES.get(sample.embodiment, sample.embodiment),
        manipulated_object=sample.manipulated_object,
        question_chain=numbered,
    )


def record_payload_from_reply(job: ExtractorJob, reply: str) -> dict:
    """Parse a judge reply into a full judge-record row for this job."""
    fields = parse_judge_response(reply)
    return {
        "sample_id": job.sample_id,
        "model_id": job.model_id,
        "replicate_index": job.replicate_index,
        **fields,
    }


def reparse_transcript(transcript_path: Path) -> dict:
    """Re-run parsing over a persisted transcript (no judge call)."""
    saved = json.loads(Path(transcript_path).read_text(encoding="utf-8"))
    fields = parse_judge_response(saved["reply"])
    return {
        "sample_id": saved["sample_id"],
        "model_id": saved["model_id"],
        "replicate_index": saved["replicate_index"],
        **fields,
    }


def _query_live_judge(job: ExtractorJob, sample: ManifestEntry) -> str:
    client = JudgeClient(job.endpoints)
    if not client.available():
        raise JobError(f"judge endpoint {job.endpoints.judge_url} failed its health check")
    indices = uniform_frame_indices(_probe_frame_count(job), GRID_FRAME_COUNT)
    grid = compose_grid(read_video_frames(job.video_path, indices))
    prompt = build_assessment_prompt(sample, sample.question_chain)
    return client.evaluate(prompt, images=[encode_grid(grid)])


def _probe_frame_count(job: ExtractorJob) -> int:
    import cv2  # deferred: only the live backend needs video decoding

    capture = cv2.VideoCapture(str(job.video_path))
    try:
        count = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
    finally:
        capture.release()
    if count < 1:
        raise JobError(f"video has no frames: {job.video_path}")
    return count


def extract_vqa(job: ExtractorJob, sample: ManifestEntry) -> Path | None:
    """Produce one judge-record file; returns None when the reply is unparsable.

    The stub backend synthesizes its fixed record. The live backend persists
    the raw transcript first, then parses it; parse failures leave an
    ``.error.json`` audit record and no judge record.
    """
    if sample.sample_id != job.sample_id:
        raise JobError(f"sample {sample.sample_id!r} does not match job {job.sample_id!r}")
    vqa_dir = Path(job.output_dir) / "vqa"
    if job.backend is Backend.STUB:
        payload = synthesize_vqa_payload(job, sample)
        return atomic_write_json(vqa_dir / f"{job.stem}.jsonl", payload)

    reply = _query_live_judge(job, sample)
    transcript = {
        "sample_id": job.sample_id,
        "model_id": job.model_id,
        "replicate_index": job.replicate_index,
        "reply": reply,
    }
    atomic_write_json(vqa_dir / f"{job.stem}.transcript.json", transcript)
    try:
        payload = record_payload_from_reply(job, reply)
    except JudgeResponseError as exc:
        atomic_write_json(
            vqa_dir / f"{job.stem}.error.json",
            {**transcript, "error": str(exc), "raw": exc.raw},
        )
        return None
    return atomic_write_json(vqa_dir / f"{job.stem}.jsonl", payload)
