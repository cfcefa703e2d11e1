"""Deterministic counter-based Monte Carlo sampling.

Every stochastic estimate in the package draws from a Philox stream keyed by
(seed, stream id) and partitioned into fixed-size chunks.  Chunk c of a stream
is generated from an independently jumped generator state, so an estimate is a
pure function of (seed, stream, sample count): it does not depend on
evaluation order, chunking of the outer loop, or worker count.
"""
from __future__ import annotations

from typing import Iterator

import numpy as np

CHUNK = 1 << 16

_MASK64 = (1 << 64) - 1


def chunk_generator(seed: int, stream: int, chunk_index: int) -> np.random.Generator:
    """Generator positioned at the start of chunk `chunk_index` of a stream."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    bitgen = np.random.Philox(key=key)
    if chunk_index:
        bitgen = bitgen.jumped(chunk_index)
    return np.random.Generator(bitgen)


def iter_chunks(total: int) -> Iterator[tuple[int, int]]:
    """Yield (chunk_index, size) pairs covering `total` samples."""
    index = 0
    remaining = int(total)
    while remaining > 0:
        size = min(CHUNK, remaining)
        yield index, size
        index += 1
        remaining -= size


def uniform_box(gen: np.random.Generator, size: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    u = gen.random((size, lo.shape[0]))
    return lo + u * (hi - lo)


def uniform_ball(gen: np.random.Generator, size: int, center: np.ndarray, radius: float) -> np.ndarray:
    """Uniform samples from the closed euclidean ball."""
    dim = center.shape[0]
    z = gen.standard_normal((size, dim))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    # a zero draw has probability 0; guard anyway
    norms[norms == 0.0] = 1.0
    r = gen.random((size, 1)) ** (1.0 / dim)
    return center + radius * r * (z / norms)


def ball_volume(dim: int, radius: float) -> float:
    from scipy.special import gammaln

    return float(np.exp(0.5 * dim * np.log(np.pi) - gammaln(0.5 * dim + 1.0) + dim * np.log(radius)))
