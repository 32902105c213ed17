"""Monte-Carlo configuration and the batched mean/standard-error reducer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class McConfig:
    """Seed, sample count, and batching policy for Monte-Carlo estimators."""

    seed: int
    samples: int = 1_000_000
    batch: int = 65_536

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if not 1 <= self.batch <= self.samples:
            raise ValueError(
                f"batch must satisfy 1 <= batch <= samples, got batch={self.batch} "
                f"samples={self.samples}"
            )


@dataclass(frozen=True)
class McEstimate:
    """A Monte-Carlo mean with its standard error and provenance."""

    value: float
    stderr: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0.0:
            raise ValueError("stderr must be nonnegative")


def mc_mean(stat_block: Callable[[int, int], np.ndarray], mc: McConfig) -> McEstimate:
    """Mean and standard error of a per-sample statistic.

    ``stat_block(start, count)`` must return the statistic for samples
    ``start .. start+count`` as a 1-D array, as a pure function of the sample
    indices.  Per-batch partials use numpy's pairwise summation and are
    combined with exact float summation, so the result does not depend on how
    batches are scheduled across workers.
    """
    n = mc.samples
    sums, sumsqs = [], []
    start = 0
    while start < n:
        count = min(mc.batch, n - start)
        s = np.asarray(stat_block(start, count), dtype=float)
        if s.shape != (count,):
            raise ValueError(f"stat_block returned shape {s.shape}, expected ({count},)")
        sums.append(float(np.sum(s)))
        sumsqs.append(float(np.sum(s * s)))
        start += count
    total = math.fsum(sums)
    total_sq = math.fsum(sumsqs)
    mean = total / n
    if n > 1:
        var = max(0.0, (total_sq - n * mean * mean) / (n - 1))
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    return McEstimate(value=mean, stderr=stderr, samples=n, seed=mc.seed)
