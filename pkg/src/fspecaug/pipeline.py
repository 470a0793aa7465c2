"""Corpus-scale batch augmentation.

The corpus is flattened into one frame array and every window becomes a row
of global frame indices, so a batch is gathered with a single ``np.take``.
Frequency masks of an unwarped batch are applied to the few hundred source
frames the batch spans *before* the gather (they act identically on every
row, so the result is bit-identical to gather-then-mask, without a strided
write over the whole batch). Time masks are window-relative and are written
into the gathered batch. Warped batches are gathered, warped, then masked.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .augment import (
    SampledTransform,
    apply_transform_array,
    freq_mask_array,
    sample_transform,
    time_mask_array,
    utterance_specaugment,
)
from .errors import DataError, PolicyError
from .feature_store import FeatureMatrix
from .policy import FRAME, AugmentPolicy, validate_policy
from .rng import batch_rng
from .windowing import extract_window_array, window_indices


@dataclass(eq=False)
class WindowIndex:
    frames: np.ndarray         # (N, D) float32, all utterances concatenated
    rows: np.ndarray           # (num_windows, tau) global frame index per window row
    record_ids: List[str]      # "<utt>#<frame>"
    left: int
    right: int

    @classmethod
    def from_corpus(cls, corpus: Sequence[FeatureMatrix], left: int, right: int) -> "WindowIndex":
        corpus = list(corpus)
        if not corpus:
            raise DataError("empty corpus")
        dims = {m.num_dims for m in corpus}
        if len(dims) != 1:
            raise DataError(f"mixed feature dimensions in corpus: {sorted(dims)}")
        frames = np.concatenate([m.values for m in corpus], axis=0)
        frames.flags.writeable = False
        rows, ids, offset = [], [], 0
        for m in corpus:
            rows.append(window_indices(m.num_frames, left, right) + offset)
            ids.extend(f"{m.utterance_id}#{t}" for t in range(m.num_frames))
            offset += m.num_frames
        return cls(frames, np.concatenate(rows, axis=0), ids, left, right)

    @property
    def tau(self) -> int:
        return self.left + 1 + self.right

    @property
    def num_dims(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def batch_slices(self, batch_size: int) -> List[slice]:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        n = len(self)
        return [slice(s, min(s + batch_size, n)) for s in range(0, n, batch_size)]


def gather_transform(
    frames: np.ndarray,
    rows: np.ndarray,
    sampled: SampledTransform,
    policy: AugmentPolicy,
    out: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Gather windows ``frames[rows]`` with ``sampled`` applied; (B, tau, D) float32."""
    B, tau = rows.shape
    D = frames.shape[1]
    if out is None:
        out = np.empty((B, tau, D), dtype=np.float32)
    if sampled.warp is not None:
        np.take(frames, rows, axis=0, out=out)
        return apply_transform_array(out, sampled, policy, inplace=True)

    lo = int(rows.min())
    hi = int(rows.max()) + 1
    staging = frames[lo:hi].copy()
    for f0, f in sampled.freq_masks:
        freq_mask_array(staging, f0, f, policy.mask_value)
    np.take(staging, rows - lo, axis=0, out=out)
    for t0, t in sampled.time_masks:
        time_mask_array(out, t0, t, policy.mask_value)
    return out


def augment_rows(
    frames: np.ndarray,
    rows: np.ndarray,
    policy: AugmentPolicy,
    master_seed: int,
    batch_index: int,
    out: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, SampledTransform]:
    """Frame-level batch augmentation; same output as ``augment_batch`` on these windows."""
    tau = rows.shape[1]
    D = frames.shape[1]
    sampled = sample_transform(policy, batch_rng(master_seed, batch_index), tau, D)
    return gather_transform(frames, rows, sampled, policy, out), sampled


def augment_frame_level(
    index: WindowIndex,
    policy: AugmentPolicy,
    master_seed: int,
    batch_size: int = 256,
    workers: int = 1,
    order: Optional[Sequence[int]] = None,
) -> List[np.ndarray]:
    """Augment every batch of ``index``; returns the batches in batch order.

    ``workers`` > 1 runs batches on a thread pool; ``order`` forces a
    particular processing order. Neither changes the output, since each
    batch's stream depends only on ``(master_seed, batch_index)``.
    """
    if policy.level != FRAME:
        raise PolicyError("frame-level augmentation needs a frame-level policy")
    validate_policy(policy, index.tau, index.num_dims)
    slices = index.batch_slices(batch_size)

    def run(i: int) -> np.ndarray:
        return augment_rows(index.frames, index.rows[slices[i]], policy, master_seed, i)[0]

    todo = list(range(len(slices))) if order is None else [int(i) for i in order]
    if sorted(todo) != list(range(len(slices))):
        raise ValueError("order must be a permutation of the batch indices")
    results = [None] * len(slices)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, arr in zip(todo, pool.map(run, todo)):
                results[i] = arr
    else:
        for i in todo:
            results[i] = run(i)
    return results


def augment_utterance_level(
    corpus: Sequence[FeatureMatrix],
    policy: AugmentPolicy,
    master_seed: int,
    left: int,
    right: int,
) -> Iterator[Tuple[str, np.ndarray]]:
    """Mask each utterance (stream ``batch_rng(seed, utterance_index)``), then window it."""
    for i, m in enumerate(corpus):
        masked = utterance_specaugment(m, policy, batch_rng(master_seed, i))
        windows = extract_window_array(masked, left, right)
        for t in range(m.num_frames):
            yield f"{m.utterance_id}#{t}", windows[t]


def iter_augmented_windows(
    corpus: Sequence[FeatureMatrix],
    policy: AugmentPolicy,
    master_seed: int,
    left: int = 20,
    right: int = 20,
    batch_size: int = 256,
    workers: int = 1,
) -> Iterator[Tuple[str, np.ndarray]]:
    """``(record_id, window)`` for every frame of the corpus, in corpus order."""
    if policy.level == FRAME:
        index = WindowIndex.from_corpus(corpus, left, right)
        batches = augment_frame_level(index, policy, master_seed, batch_size, workers)
        ids = iter(index.record_ids)
        for batch in batches:
            for window in batch:
                yield next(ids), window
    else:
        yield from augment_utterance_level(corpus, policy, master_seed, left, right)
