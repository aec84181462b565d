"""Extraction job descriptions and backend configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class Backend(str, Enum):
    STUB = "stub"
    LIVE = "live"


class JobError(Exception):
    """An extraction job failed; carries backend diagnostics."""


@dataclass(frozen=True)
class StubConfig:
    """Settings for the synthetic backend (no network, no model weights)."""

    seed: int = 0
    motion_profile: str = "walk"  # "walk" or "static"
    frame_count: int = 16
    subject_points: int = 12
    background_points: int = 8
    frame_width: int = 640
    frame_height: int = 480

    def __post_init__(self):
        if self.motion_profile not in ("walk", "static"):
            raise ValueError(f"unknown motion profile {self.motion_profile!r}")
        if self.frame_count < 2:
            raise ValueError("stub videos need at least two frames")


@dataclass(frozen=True)
class LiveEndpoints:
    """Locations of the perception and judge services.

    Model choices live behind these endpoints; the toolkit only speaks their
    HTTP contract. API keys come from the named environment variables, never
    from configuration values.
    """

    judge_url: str
    signal_url: str
    judge_api_key_env: str = "RBENCH_JUDGE_API_KEY"
    timeout_s: float = 60.0
    retries: int = 2
    backoff_s: float = 0.5
    temperature: float = 0.0

    def judge_api_key(self) -> str | None:
        return os.environ.get(self.judge_api_key_env)


@dataclass(frozen=True)
class ExtractorJob:
    """One (sample, model, replicate) extraction task."""

    sample_id: str
    model_id: str
    replicate_index: int
    video_path: Path | None
    backend: Backend
    output_dir: Path
    stub: StubConfig = field(default_factory=StubConfig)
    endpoints: LiveEndpoints | None = None

    def __post_init__(self):
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")
        if self.backend is Backend.LIVE:
            if self.endpoints is None:
                raise ValueError("live jobs need endpoint configuration")
            if self.video_path is None:
                raise ValueError("live jobs need a video path")

    @property
    def stem(self) -> str:
        return f"{self.model_id}__{self.sample_id}__r{self.replicate_index}"
