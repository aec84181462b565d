"""Motion metrics computed from point tracks and per-frame quality scores.

Motion amplitude averages the clipped, camera-compensated, diagonal-normalized
subject displacement over frame transitions. Motion smoothness flags quality
fluctuations above a motion-adaptive threshold and counts unflagged frames.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .records import SignalBundle, TrackSet

logger = logging.getLogger(__name__)

# (upper bound on motion amplitude, fluctuation threshold); the last row is open-ended.
DEFAULT_THRESHOLD_TABLE: tuple[tuple[float, float], ...] = (
    (0.1, 0.01),
    (0.3, 0.015),
    (0.5, 0.025),
    (math.inf, 0.03),
)


@dataclass(frozen=True)
class MotionConfig:
    """Tunables for the motion metrics."""

    clip_ceiling: float = 1.0
    threshold_table: tuple[tuple[float, float], ...] = DEFAULT_THRESHOLD_TABLE

    def __post_init__(self):
        if not self.clip_ceiling > 0:
            raise ValueError("clip_ceiling must be positive")
        if not self.threshold_table:
            raise ValueError("threshold_table must not be empty")
        bounds = [bound for bound, _ in self.threshold_table]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValueError("threshold_table bounds must be strictly increasing")
        if any(tau <= 0 for _, tau in self.threshold_table):
            raise ValueError("threshold_table thresholds must be positive")
        if not math.isinf(bounds[-1]):
            raise ValueError("threshold_table must end with an open upper bound")


def mean_displacement(tracks: TrackSet, t: int) -> float:
    """Mean displacement (pixels) of points visible in both frames of transition ``t``.

    ``t`` is the 1-based index of the transition's later frame, so valid values
    are 2..frame_count. When no point is visible in both frames the transition
    contributes zero motion rather than poisoning the mean.
    """
    if not 2 <= t <= tracks.frame_count:
        raise IndexError(f"transition index {t} outside [2, {tracks.frame_count}]")
    prev, curr = tracks.positions[t - 2], tracks.positions[t - 1]
    both_visible = tracks.visibility[t - 2] & tracks.visibility[t - 1]
    if not both_visible.any():
        logger.warning("no points visible across transition %d; treating motion as zero", t)
        return 0.0
    deltas = curr[both_visible] - prev[both_visible]
    return float(np.linalg.norm(deltas, axis=1).mean())


def motion_amplitude(bundle: SignalBundle, cfg: MotionConfig = MotionConfig()) -> float:
    """Motion amplitude of the subject, camera-compensated and clipped to [0, 1].

    Per transition, subject and background displacements are normalized by the
    video diagonal; the background value is subtracted only when the subject
    moves more than the background (soft-zero), so tracking noise on a static
    subject is retained rather than forced to zero. Each compensated value is
    clipped at ``cfg.clip_ceiling`` before averaging over the transitions.
    """
    diagonal = math.hypot(bundle.frame_width, bundle.frame_height)
    compensated = []
    for t in range(2, bundle.frame_count + 1):
        subject = mean_displacement(bundle.subject_tracks, t) / diagonal
        background = mean_displacement(bundle.background_tracks, t) / diagonal
        value = subject - background if subject > background else subject
        compensated.append(min(value, cfg.clip_ceiling))
    return float(np.mean(compensated))


def adaptive_threshold(m: float, cfg: MotionConfig = MotionConfig()) -> float:
    """Quality-fluctuation threshold for a video with motion amplitude ``m``.

    Low-motion videos get a stricter threshold; boundaries belong to the upper
    branch (m = 0.1 maps to the second row).
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"motion amplitude must lie in [0, 1], got {m!r}")
    for upper_bound, tau in cfg.threshold_table:
        if m < upper_bound:
            return tau
    return cfg.threshold_table[-1][1]  # unreachable: last bound is infinite


def motion_smoothness(quality, m: float, cfg: MotionConfig = MotionConfig()) -> float:
    """Fraction of frames not flagged by quality-fluctuation anomaly detection.

    A transition ``t`` (1-based, 2..T) is anomalous when |Q_t - Q_{t-1}| exceeds
    the adaptive threshold for motion amplitude ``m``; both neighbouring
    transition indices of an anomaly are flagged too (clamped to [2, T],
    deduplicated). The score is 1 - flagged/T with T the frame count.
    """
    q = np.asarray(quality, dtype=float)
    if q.ndim != 1 or q.shape[0] < 2:
        raise ValueError("quality sequence needs at least two frames")
    if not np.all(np.isfinite(q)) or q.min() < 0.0 or q.max() > 1.0:
        raise ValueError("quality scores must all lie in [0, 1]")
    tau = adaptive_threshold(m, cfg)
    fluctuation = np.abs(np.diff(q))
    total = q.shape[0]
    anomalies = {t for t in range(2, total + 1) if fluctuation[t - 2] > tau}
    flagged = set(anomalies)
    for t in anomalies:
        if t - 1 >= 2:
            flagged.add(t - 1)
        if t + 1 <= total:
            flagged.add(t + 1)
    return 1.0 - len(flagged) / total
