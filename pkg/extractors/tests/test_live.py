from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

import rbench_extractors.vqa as vqa_module
from rbench_extractors.jobs import Backend, ExtractorJob, JobError, LiveEndpoints
from rbench_extractors.signals import extract_signals
from rbench_extractors.stub import synthesize_signal_payload
from rbench_extractors.vqa import extract_vqa
from test_judge import CANNED_VR_REPLY


def live_job(tmp_path, server, video_path):
    return ExtractorJob(
        sample_id="vr-000",
        model_id="live-model",
        replicate_index=0,
        video_path=video_path,
        backend=Backend.LIVE,
        output_dir=tmp_path / "out",
        endpoints=LiveEndpoints(
            judge_url=server.url,
            signal_url=server.url,
            retries=1,
            backoff_s=0.01,
            timeout_s=5.0,
        ),
    )


@pytest.fixture
def fake_video(tmp_path, monkeypatch):
    path = tmp_path / "clip.mp4"
    path.write_bytes(b"fake video bytes")
    frames = [np.full((8, 6, 3), i, dtype=np.uint8) for i in range(6)]
    monkeypatch.setattr(vqa_module, "read_video_frames", lambda p, idx: frames[: len(idx)])
    monkeypatch.setattr(vqa_module, "_probe_frame_count", lambda job: 30)
    return path


class TestLiveJobValidation:
    def test_live_job_requires_endpoints(self, tmp_path):
        with pytest.raises(ValueError):
            ExtractorJob(
                sample_id="s",
                model_id="m",
                replicate_index=0,
                video_path=tmp_path / "v.mp4",
                backend=Backend.LIVE,
                output_dir=tmp_path,
            )

    def test_unavailable_judge_fails_before_querying(self, tmp_path, judge_server, fake_video, sample_entry):
        judge_server.configure(healthy=False)
        with pytest.raises(JobError, match="health check"):
            extract_vqa(live_job(tmp_path, judge_server, fake_video), sample_entry)


class TestLiveSignals:
    def test_signal_service_payload_written(self, tmp_path, judge_server, fake_video):
        stub_payload = synthesize_signal_payload(
            ExtractorJob(
                sample_id="vr-000",
                model_id="live-model",
                replicate_index=0,
                video_path=None,
                backend=Backend.STUB,
                output_dir=tmp_path,
            )
        )
        service_fields = {
            k: v
            for k, v in stub_payload.items()
            if k not in ("sample_id", "model_id", "replicate_index")
        }
        judge_server.configure(signal_payload=service_fields)
        path = extract_signals(live_job(tmp_path, judge_server, fake_video))
        written = json.loads(Path(path).read_text())
        assert written["sample_id"] == "vr-000"
        assert written["subject_tracks"] == service_fields["subject_tracks"]

    def test_malformed_service_payload_rejected_before_write(self, tmp_path, judge_server, fake_video):
        judge_server.configure(signal_payload={"frame_width": 0})
        job = live_job(tmp_path, judge_server, fake_video)
        with pytest.raises(JobError):
            extract_signals(job)
        assert not (job.output_dir / "signals").exists()

    def test_missing_video_rejected(self, tmp_path, judge_server):
        job = live_job(tmp_path, judge_server, tmp_path / "absent.mp4")
        judge_server.configure(signal_payload={})
        with pytest.raises(JobError, match="not readable"):
            extract_signals(job)


class TestLiveVqa:
    def test_transcript_persisted_and_record_parsed(self, tmp_path, judge_server, fake_video, sample_entry):
        judge_server.configure(reply=CANNED_VR_REPLY)
        job = live_job(tmp_path, judge_server, fake_video)
        record_path = extract_vqa(job, sample_entry)
        record = json.loads(Path(record_path).read_text())
        assert record["questions_completed"] == 4
        transcript_path = job.output_dir / "vqa" / f"{job.stem}.transcript.json"
        transcript = json.loads(transcript_path.read_text())
        assert transcript["reply"] == CANNED_VR_REPLY
        request = [r for r in judge_server.requests if r["path"] == "/evaluate"][-1]
        assert "blue book" in request["body"]["prompt"]
        assert len(request["body"]["images"]) == 1

    def test_unparsable_reply_leaves_error_record(self, tmp_path, judge_server, fake_video, sample_entry):
        judge_server.configure(reply="I would rate this video quite highly overall.")
        job = live_job(tmp_path, judge_server, fake_video)
        assert extract_vqa(job, sample_entry) is None
        vqa_dir = job.output_dir / "vqa"
        assert not (vqa_dir / f"{job.stem}.jsonl").exists()
        error_record = json.loads((vqa_dir / f"{job.stem}.error.json").read_text())
        assert "quite highly" in error_record["raw"]
        assert error_record["error"]
        # the transcript is still there for re-parsing after a prompt fix
        assert (vqa_dir / f"{job.stem}.transcript.json").exists()
