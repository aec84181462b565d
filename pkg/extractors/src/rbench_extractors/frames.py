"""Frame sampling and grid composition for judge inputs."""

from __future__ import annotations

import numpy as np

GRID_ROWS = 3
GRID_COLS = 2
GRID_FRAME_COUNT = GRID_ROWS * GRID_COLS


def uniform_frame_indices(total_frames: int, count: int = GRID_FRAME_COUNT) -> list[int]:
    """Uniformly spaced frame indices in temporal order.

    Short clips repeat trailing frames so the grid always has ``count`` panels.
    """
    if total_frames < 1:
        raise ValueError("video has no frames")
    if count == 1:
        return [0]
    positions = np.linspace(0, total_frames - 1, count)
    return [int(round(p)) for p in positions]


def compose_grid(frames: list[np.ndarray], rows: int = GRID_ROWS, cols: int = GRID_COLS) -> np.ndarray:
    """Tile frames row-major into a rows x cols grid image."""
    if len(frames) != rows * cols:
        raise ValueError(f"need {rows * cols} frames, got {len(frames)}")
    shapes = {frame.shape for frame in frames}
    if len(shapes) != 1:
        raise ValueError(f"frames must share a shape, got {sorted(shapes)}")
    grid_rows = [np.concatenate(frames[r * cols : (r + 1) * cols], axis=1) for r in range(rows)]
    return np.concatenate(grid_rows, axis=0)


def read_video_frames(path, indices: list[int]) -> list[np.ndarray]:
    """Decode the requested frames from a video file (live backend only)."""
    import cv2  # deferred: only the live backend needs video decoding

    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise OSError(f"cannot open video {path}")
    try:
        frames = []
        for index in indices:
            capture.set(cv2.CAP_PROP_POS_FRAMES, index)
            ok, frame = capture.read()
            if not ok:
                raise OSError(f"cannot decode frame {index} of {path}")
            frames.append(frame[:, :, ::-1])  # BGR -> RGB
        return frames
    finally:
        capture.release()
