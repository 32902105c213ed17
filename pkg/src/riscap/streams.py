"""Counter-based random streams for reproducible Monte-Carlo estimation.

Every Monte-Carlo sample owns a fixed, 4-aligned block of Philox draws, so
the value of sample ``i`` is a pure function of ``(key, i)``.  Batch size and
worker count therefore cannot change a simulation result, only the order in
which partial sums are formed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Philox emits 4 64-bit words per counter increment; Generator.random()
# consumes one word per double, so offsets must stay 4-aligned.
_PHILOX_BLOCK = 4

# Guard against u == 0.0 (probability 2**-53 per draw), which ndtri maps to -inf.
_U_FLOOR = 2.0 ** -55


def draws_per_sample(n_draws: int) -> int:
    """Width of the per-sample draw block, rounded up to the Philox granularity."""
    return _PHILOX_BLOCK * ((n_draws + _PHILOX_BLOCK - 1) // _PHILOX_BLOCK)


def stream_key(seed: int, tag: int = 0) -> tuple[int, int]:
    """Two-word Philox key identifying an independent logical stream."""
    return (int(seed) & 0xFFFFFFFFFFFFFFFF, int(tag) & 0xFFFFFFFFFFFFFFFF)


def uniform_block(key, start: int, count: int, width: int) -> np.ndarray:
    """Uniform draws for samples ``start .. start+count``, ``width`` per sample.

    ``width`` must be a multiple of 4 (see :func:`draws_per_sample`).  Returns
    an array of shape ``(count, width)`` that is independent of how the sample
    range is split across calls.
    """
    if width % _PHILOX_BLOCK:
        raise ValueError(f"width must be a multiple of {_PHILOX_BLOCK}, got {width}")
    if isinstance(key, int):
        key = stream_key(key)
    bg = np.random.Philox(key=key)
    bg.advance(start * (width // _PHILOX_BLOCK))
    u = np.random.Generator(bg).random(count * width)
    return u.reshape(count, width)


def normal_block(key, start: int, count: int, n_cols: int) -> np.ndarray:
    """Standard-normal draws of shape ``(count, n_cols)`` via inverse CDF.

    Inverse-CDF conversion keeps the draw consumption fixed per sample, which
    rejection samplers would not.
    """
    width = draws_per_sample(n_cols)
    u = uniform_block(key, start, count, width)[:, :n_cols]
    return ndtri(np.maximum(u, _U_FLOOR))


def generator_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Normals from an ordinary Generator, via the same inverse-CDF path."""
    return ndtri(np.maximum(rng.random(shape), _U_FLOOR))
