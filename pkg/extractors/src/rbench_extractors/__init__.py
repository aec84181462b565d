"""Adapters that turn videos into the scoring engine's input files.

A deterministic stub backend synthesizes signal bundles and judge records for
offline end-to-end runs; the live backend drives the configured perception and
judge services over HTTP.
"""

from .jobs import Backend, ExtractorJob, JobError, LiveEndpoints, StubConfig
from .judge import JudgeClient, JudgeResponseError, parse_judge_response
from .runner import JobResult, run_jobs
from .signals import extract_signals
from .vqa import extract_vqa, reparse_transcript

__version__ = "0.1.0"
