"""Bounded-parallelism job execution."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .jobs import ExtractorJob, JobError
from .manifest import ManifestEntry
from .signals import extract_signals
from .vqa import extract_vqa


@dataclass(frozen=True)
class JobResult:
    job: ExtractorJob
    signal_path: str | None
    vqa_path: str | None
    error: str | None = None


def run_jobs(
    jobs: list[tuple[ExtractorJob, ManifestEntry]], workers: int = 4
) -> list[JobResult]:
    """Run extraction jobs on a bounded worker pool.

    Jobs are independent; outputs are written atomically so a result file is
    either complete or absent. Results come back in submission order.
    """

    def run_one(item: tuple[ExtractorJob, ManifestEntry]) -> JobResult:
        job, sample = item
        try:
            signal_path = extract_signals(job)
            vqa_path = extract_vqa(job, sample)
        except JobError as exc:
            return JobResult(job=job, signal_path=None, vqa_path=None, error=str(exc))
        return JobResult(
            job=job,
            signal_path=str(signal_path),
            vqa_path=str(vqa_path) if vqa_path else None,
        )

    if workers <= 1:
        return [run_one(item) for item in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_one, jobs))
