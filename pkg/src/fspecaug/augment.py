"""Frame-level SpecAugment: sampling, masking, time warping, batch application.

Every window of a mini-batch gets the same sampled transform. Transforms run
in the order warp, frequency masks, time masks, so masked cells always hold
exactly ``mask_value``.

The array functions (``*_array``) work on any ``(..., tau, D)`` stack and are
what the batch path uses; the ContextWindow functions wrap them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .errors import DataError, PolicyError
from .feature_store import FeatureMatrix
from .policy import FRAME, UTTERANCE, AugmentPolicy, validate_policy
from .rng import Rng, batch_rng
from .warp_math import warp_plan
from .windowing import ContextWindow, WindowBatch


@dataclass(frozen=True)
class SampledTransform:
    warp: Optional[Tuple[int, int]] = None             # (w0, w)
    freq_masks: Tuple[Tuple[int, int], ...] = ()       # (f0, f)
    time_masks: Tuple[Tuple[int, int], ...] = ()       # (t0, t)

    @property
    def is_identity(self) -> bool:
        return (
            self.warp is None
            and all(f == 0 for _, f in self.freq_masks)
            and all(t == 0 for _, t in self.time_masks)
        )


def warp_start_candidates(tau: int, W: int) -> List[int]:
    """Admissible warp anchor rows: ``[W, c-W]`` and ``(c+W, tau-W]``, ``c = tau // 2``.

    Clipped to the valid rows ``[0, tau-1]``; either side may be empty.
    """
    c = tau // 2
    left = range(W, c - W + 1)
    right = range(c + W + 1, tau - W + 1)
    return sorted({r for r in (*left, *right) if 0 <= r < tau})


def sample_transform(policy: AugmentPolicy, rng: Rng, tau: int, D: int) -> SampledTransform:
    """Draw one transform. Draw order: w0, w, then (f, f0) per mask, then (t, t0) per mask.

    Nothing is drawn for a disabled transform, nor for the warp when there
    are no admissible anchors. A drawn ``w == 0`` leaves ``warp`` unset.
    """
    warp = None
    if policy.enable_warp and policy.warp_W > 0:
        candidates = warp_start_candidates(tau, policy.warp_W)
        if candidates:
            w0 = candidates[rng.uniform_int(0, len(candidates) - 1)]
            w = rng.uniform_int(-policy.warp_W, policy.warp_W)
            if w != 0:
                warp = (w0, w)
    freq = []
    if policy.enable_freq:
        for _ in range(policy.n_freq_masks):
            f = rng.uniform_int(0, policy.freq_F)
            freq.append((rng.uniform_int(0, D - f), f))
    time = []
    if policy.enable_time:
        for _ in range(policy.n_time_masks):
            t = rng.uniform_int(0, policy.time_T)
            time.append((rng.uniform_int(0, tau - t), t))
    return SampledTransform(warp, tuple(freq), tuple(time))


# --------------------------------------------------------------------------
# masks


def freq_mask_array(values: np.ndarray, f0: int, f: int, value: float = 0.0) -> np.ndarray:
    """Set feature dims ``[f0, f0+f)`` to ``value`` in place; returns ``values``."""
    D = values.shape[-1]
    if f0 < 0 or f < 0 or f0 + f > D:
        raise DataError(f"frequency mask [{f0}, {f0 + f}) out of bounds for D={D}")
    values[..., f0:f0 + f] = value
    return values


def time_mask_array(values: np.ndarray, t0: int, t: int, value: float = 0.0) -> np.ndarray:
    """Set frames ``[t0, t0+t)`` to ``value`` in place; returns ``values``."""
    tau = values.shape[-2]
    if t0 < 0 or t < 0 or t0 + t > tau:
        raise DataError(f"time mask [{t0}, {t0 + t}) out of bounds for tau={tau}")
    values[..., t0:t0 + t, :] = value
    return values


def apply_freq_mask(window: ContextWindow, f0: int, f: int, value: float = 0.0) -> ContextWindow:
    return window.with_values(freq_mask_array(window.values.copy(), f0, f, value))


def apply_time_mask(window: ContextWindow, t0: int, t: int, value: float = 0.0) -> ContextWindow:
    return window.with_values(time_mask_array(window.values.copy(), t0, t, value))


# --------------------------------------------------------------------------
# time warp


def warp_destination(tau: int, w0: int, w: int, fix_corners: bool = False) -> int:
    """Row that anchor ``w0`` moves to: ``w0 + w`` kept on ``w0``'s side of the center.

    The destination is clamped into the grid, and never onto or across the
    center row. With ``fix_corners`` it also stays off the first/last row.
    """
    c = tau // 2
    if not 0 <= w0 < tau or w0 == c:
        raise DataError(f"warp anchor {w0} invalid for tau={tau} (center {c})")
    first, last = (1, tau - 2) if fix_corners else (0, tau - 1)
    lo, hi = (first, c - 1) if w0 < c else (c + 1, last)
    return min(max(w0 + w, lo), hi)


def _control_points(tau: int, w0: int, dest: int, fix_corners: bool):
    c = tau // 2
    src = [(w0, 0), (w0, 1), (c, 0), (c, 1)]
    dst = [(dest, 0), (dest, 1), (c, 0), (c, 1)]
    if fix_corners:
        corners = [(0, 0), (0, 1), (tau - 1, 0), (tau - 1, 1)]
        src += corners
        dst += corners
    return src, dst


@lru_cache(maxsize=4096)
def _time_warp_plan(tau: int, w0: int, w: int, fix_corners: bool):
    dest = warp_destination(tau, w0, w, fix_corners)
    if dest == w0:
        return None
    src, dst = _control_points(tau, w0, dest, fix_corners)
    return warp_plan(src, dst, tau, 2)


def time_warp_array(values: np.ndarray, w0: int, w: int, fix_corners: bool = False) -> np.ndarray:
    """Warp a (..., tau, D) stack along time; returns a new float32 array.

    Each frame is split into its two halves to form a tau x 2 image with D/2
    channels; the anchor columns ``(w0, 0)`` and ``(w0, 1)`` move together
    while the center row stays pinned.
    """
    tau, D = values.shape[-2:]
    if D % 2:
        raise DataError(f"time warping needs an even D, got {D}")
    if tau < 3:
        raise DataError(f"time warping needs tau >= 3, got {tau}")
    plan = _time_warp_plan(tau, int(w0), int(w), bool(fix_corners))
    if plan is None:
        return np.array(values, dtype=np.float32)
    image = values.reshape(*values.shape[:-1], 2, D // 2)
    return plan.apply(image).reshape(values.shape).astype(np.float32)


def apply_time_warp(window: ContextWindow, w0: int, w: int, fix_corners: bool = False) -> ContextWindow:
    return window.with_values(time_warp_array(window.values, w0, w, fix_corners))


# --------------------------------------------------------------------------
# composition


def apply_transform_array(
    values: np.ndarray,
    sampled: SampledTransform,
    policy: AugmentPolicy,
    inplace: bool = False,
) -> np.ndarray:
    """Apply ``sampled`` to a (..., tau, D) stack.

    With ``inplace`` a mask-only transform writes into ``values`` (which must
    then be a writable float32 array); otherwise the input is left untouched.
    """
    if sampled.warp is not None:
        out = time_warp_array(values, *sampled.warp, fix_corners=policy.fix_corners)
    elif inplace:
        out = values
    else:
        out = np.array(values, dtype=np.float32)
    for f0, f in sampled.freq_masks:
        freq_mask_array(out, f0, f, policy.mask_value)
    for t0, t in sampled.time_masks:
        time_mask_array(out, t0, t, policy.mask_value)
    return out


def apply_transform(window: ContextWindow, sampled: SampledTransform, policy: AugmentPolicy) -> ContextWindow:
    return window.with_values(apply_transform_array(window.values, sampled, policy))


def augment_array(
    values: np.ndarray,
    policy: AugmentPolicy,
    master_seed: int,
    batch_index: int,
    inplace: bool = False,
):
    """Batch path on a (B, tau, D) stack. Returns ``(augmented, sampled)``."""
    tau, D = values.shape[-2:]
    if policy.level != FRAME:
        raise PolicyError("augment_batch needs a frame-level policy")
    validate_policy(policy, tau, D)
    sampled = sample_transform(policy, batch_rng(master_seed, batch_index), tau, D)
    return apply_transform_array(values, sampled, policy, inplace=inplace), sampled


def augment_batch(batch: WindowBatch, policy: AugmentPolicy, master_seed: int) -> WindowBatch:
    """Augment every window of ``batch`` with one transform drawn from the batch's own stream."""
    out, _ = augment_array(batch.stack(), policy, master_seed, batch.batch_index, inplace=True)
    return batch.with_stack(out)


def utterance_specaugment(matrix: FeatureMatrix, policy: AugmentPolicy, rng: Rng) -> FeatureMatrix:
    """Mask a whole utterance once, before any windowing.

    Mask caps are limited to the utterance size, so utterances shorter than
    ``time_T`` frames can still be masked.
    """
    if policy.level != UTTERANCE:
        raise PolicyError("utterance_specaugment needs a policy with level='utterance'")
    if policy.enable_warp:
        raise PolicyError("time warping is not allowed at utterance level")
    T, D = matrix.num_frames, matrix.num_dims
    effective = _capped(policy, T, D)
    validate_policy(effective, T, D)
    sampled = sample_transform(effective, rng, T, D)
    out = apply_transform_array(matrix.values, sampled, effective)
    return FeatureMatrix(matrix.utterance_id, out, matrix.frame_shift_ms, matrix.window_ms)


def sample_utterance_transform(matrix: FeatureMatrix, policy: AugmentPolicy, rng: Rng) -> SampledTransform:
    """The transform ``utterance_specaugment`` would draw from the same ``rng`` state."""
    T, D = matrix.num_frames, matrix.num_dims
    return sample_transform(_capped(policy, T, D), rng.copy(), T, D)


def _capped(policy: AugmentPolicy, T: int, D: int) -> AugmentPolicy:
    return policy.replace(freq_F=min(policy.freq_F, D), time_T=min(policy.time_T, T))
