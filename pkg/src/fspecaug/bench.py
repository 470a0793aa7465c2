"""Throughput benchmark: copy-only vs masking vs masking + time warp.

All three pipelines run the same gather-and-transform code over the same
windows; they differ only in the policy (identity, masks, masks + warp).
Pipelines are interleaved batch by batch so drift in machine load affects
all three alike.
"""

from __future__ import annotations

import hashlib
import statistics
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DataError
from .feature_store import FeatureMatrix, gen_synthetic
from .pipeline import WindowIndex, augment_rows
from .policy import AugmentPolicy, validate_policy

PIPELINES = ("copy", "mask", "warp")


@dataclass
class PipelineTiming:
    """Timings of one pipeline. ``batch_times[r][i]``: repetition r, batch i."""

    name: str
    windows: int
    batch_times: List[List[float]]
    digest: str = ""

    @property
    def times(self) -> List[float]:
        """Total seconds per repetition."""
        return [sum(rep) for rep in self.batch_times]

    @property
    def median(self) -> float:
        """Sum over batches of each batch's median time across repetitions.

        A stall during one batch of one repetition (interrupt, page fault)
        then shifts nothing, unlike the median of whole-pass totals.
        """
        return sum(statistics.median(col) for col in zip(*self.batch_times))

    @property
    def windows_per_sec(self) -> float:
        return self.windows / self.median


@dataclass
class BenchReport:
    windows: int
    batch_size: int
    seed: int
    timings: Dict[str, PipelineTiming] = field(default_factory=dict)

    def ratio(self, name: str) -> float:
        """Median time of ``name`` over median copy-only time."""
        return self.timings[name].median / self.timings["copy"].median

    def machine_lines(self) -> List[str]:
        lines = []
        for name in PIPELINES:
            t = self.timings[name]
            lines.append(f"bench,{name},{t.windows},{t.median:.6f},{t.windows_per_sec:.1f}")
        for name in PIPELINES[1:]:
            lines.append(f"ratio,{name}/copy,{self.ratio(name):.4f}")
        for name in PIPELINES:
            lines.append(f"digest,{name},{self.timings[name].digest}")
        return lines

    def text(self) -> str:
        out = [
            f"{self.windows} windows, batch size {self.batch_size}, "
            f"{len(self.timings['copy'].times)} repetitions, seed {self.seed}",
            f"{'pipeline':<10}{'median s':>12}{'windows/s':>14}{'x copy':>10}",
        ]
        for name in PIPELINES:
            t = self.timings[name]
            out.append(f"{name:<10}{t.median:>12.4f}{t.windows_per_sec:>14.0f}{self.ratio(name):>10.3f}")
        return "\n".join(out + self.machine_lines()) + "\n"


def bench_policies(policy: AugmentPolicy) -> Dict[str, AugmentPolicy]:
    return {
        "copy": AugmentPolicy.identity(),
        "mask": policy.replace(enable_warp=False, enable_freq=True, enable_time=True),
        "warp": policy.replace(enable_warp=True, enable_freq=True, enable_time=True),
    }


def bench_corpus(num_windows: int, dims: int, seed: int) -> List[FeatureMatrix]:
    """Synthetic corpus with at least ``num_windows`` frames."""
    lo, hi = 200, 400
    return gen_synthetic(num_windows // lo + 1, (lo, hi), dims, seed)


def _timed_pass(index: WindowIndex, rows_batches, policies, seed, rep: int) -> Dict[str, List[float]]:
    """One repetition of every pipeline, round-robin per batch; per-batch seconds.

    The pipeline order rotates from batch to batch, so no pipeline is
    systematically the one that finds the source frames already in cache.
    """
    times = {name: [] for name in PIPELINES}
    bufs = {
        name: np.empty((rows_batches[0].shape[0], index.tau, index.num_dims), dtype=np.float32)
        for name in PIPELINES
    }
    clock = time.perf_counter
    for i, rows in enumerate(rows_batches):
        k = (i + rep) % len(PIPELINES)
        for name in PIPELINES[k:] + PIPELINES[:k]:
            buf = bufs[name] if rows.shape[0] == bufs[name].shape[0] else None
            start = clock()
            augment_rows(index.frames, rows, policies[name], seed, i, out=buf)
            times[name].append(clock() - start)
    return times


def _digest(index: WindowIndex, rows_batches, policy, seed) -> str:
    h = hashlib.sha256()
    for i, rows in enumerate(rows_batches):
        h.update(augment_rows(index.frames, rows, policy, seed, i)[0].tobytes())
    return h.hexdigest()


def run_bench(
    corpus: Optional[Sequence[FeatureMatrix]] = None,
    num_windows: int = 10_000,
    reps: int = 5,
    warmup: int = 1,
    batch_size: int = 256,
    seed: int = 0,
    left: int = 20,
    right: int = 20,
    dims: int = 80,
    policy: Optional[AugmentPolicy] = None,
) -> BenchReport:
    if reps < 1:
        raise ValueError("reps must be >= 1")
    policy = policy or AugmentPolicy()
    if corpus is None:
        corpus = bench_corpus(num_windows, dims, seed)
    index = WindowIndex.from_corpus(corpus, left, right)
    if len(index) < num_windows:
        raise DataError(f"corpus has {len(index)} windows, {num_windows} requested")
    policies = bench_policies(policy)
    for p in policies.values():
        validate_policy(p, index.tau, index.num_dims)
    rows = index.rows[:num_windows]
    rows_batches = [rows[s:s + batch_size] for s in range(0, num_windows, batch_size)]

    for rep in range(warmup):
        _timed_pass(index, rows_batches, policies, seed, rep)
    times = {name: [] for name in PIPELINES}
    for rep in range(reps):
        for name, per_batch in _timed_pass(index, rows_batches, policies, seed, rep).items():
            times[name].append(per_batch)

    report = BenchReport(num_windows, batch_size, seed)
    for name in PIPELINES:
        digest = _digest(index, rows_batches, policies[name], seed)
        report.timings[name] = PipelineTiming(name, num_windows, times[name], digest)
    return report
