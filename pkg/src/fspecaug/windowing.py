"""Context windows around each frame, and mini-batches of windows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import DataError
from .feature_store import FeatureMatrix


@dataclass(eq=False)
class ContextWindow:
    """tau x D copy of the frames around ``source_frame``; row ``center_index`` is that frame."""

    values: np.ndarray
    center_index: int
    source_utterance: str = ""
    source_frame: int = 0

    @property
    def tau(self) -> int:
        return self.values.shape[0]

    @property
    def num_dims(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "ContextWindow":
        return ContextWindow(values, self.center_index, self.source_utterance, self.source_frame)

    def record_id(self) -> str:
        return f"{self.source_utterance}#{self.source_frame}"


@dataclass(eq=False)
class WindowBatch:
    windows: List[ContextWindow]
    batch_index: int = 0

    def __post_init__(self):
        if not self.windows:
            raise DataError("a window batch must be nonempty")
        shapes = {w.values.shape for w in self.windows}
        if len(shapes) != 1:
            raise DataError(f"inhomogeneous window shapes in batch: {sorted(shapes)}")

    def __len__(self):
        return len(self.windows)

    @property
    def shape(self):
        return self.windows[0].values.shape

    def stack(self) -> np.ndarray:
        """(B, tau, D) float32 copy of the batch."""
        return np.stack([w.values for w in self.windows]).astype(np.float32, copy=False)

    def with_stack(self, values: np.ndarray) -> "WindowBatch":
        return WindowBatch(
            [w.with_values(v) for w, v in zip(self.windows, values)], self.batch_index
        )


def window_indices(num_frames: int, left: int, right: int) -> np.ndarray:
    """(T, tau) source frame index of every window row, edges replicated."""
    if num_frames < 1:
        raise DataError("num_frames must be >= 1")
    if left < 0 or right < 0:
        raise DataError("context sizes must be >= 0")
    offsets = np.arange(-left, right + 1)
    idx = np.arange(num_frames)[:, None] + offsets[None, :]
    return np.clip(idx, 0, num_frames - 1)


def extract_window_array(matrix: FeatureMatrix, left: int, right: int) -> np.ndarray:
    return matrix.values[window_indices(matrix.num_frames, left, right)]


def extract_windows(matrix: FeatureMatrix, left: int, right: int) -> List[ContextWindow]:
    stacked = extract_window_array(matrix, left, right)
    return [
        ContextWindow(stacked[t], left, matrix.utterance_id, t)
        for t in range(matrix.num_frames)
    ]


def batch_windows(windows: Sequence[ContextWindow], batch_size: int) -> List[WindowBatch]:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    windows = list(windows)
    return [
        WindowBatch(windows[start:start + batch_size], i)
        for i, start in enumerate(range(0, len(windows), batch_size))
    ]
