"""Counter-based random streams keyed by simulation indices.

Every random draw in a simulation is addressed by a fixed-width key
``(seed, stream, run_id, frame_index)`` plus a ray index. The key selects a
Philox bit generator; the ray index selects a fixed offset into its counter
space. Draws for one ray therefore never depend on how many other rays,
frames or runs were evaluated before it, or in which order.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = [
    "STREAM_REFERENCE",
    "STREAM_RUN",
    "DRAWS_PER_RAY",
    "key_words",
    "ray_uniforms",
    "ray_normals_and_uniforms",
]

STREAM_REFERENCE = 0
STREAM_RUN = 1

# one Gaussian (SNR perturbation) + one uniform (Bernoulli) per ray
DRAWS_PER_RAY = 2

_MASK32 = 0xFFFFFFFF


def key_words(seed: int, stream: int, run_id: int, frame_index: int) -> list[int]:
    """Encode a key as a fixed-length list of 32-bit words.

    The seed is split into two words so keys of different magnitude never
    collide through variable-length encoding.
    """
    for name, value in (("seed", seed), ("stream", stream), ("run_id", run_id), ("frame_index", frame_index)):
        if value < 0:
            raise ValueError(f"{name} must be non-negative, got {value}")
    if seed >= 1 << 64:
        raise ValueError("seed must fit in 64 bits")
    if max(stream, run_id, frame_index) > _MASK32:
        raise ValueError("stream, run_id and frame_index must fit in 32 bits")
    return [seed & _MASK32, (seed >> 32) & _MASK32, stream, run_id, frame_index]


def _generator(seed: int, stream: int, run_id: int, frame_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(key_words(seed, stream, run_id, frame_index))
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def ray_uniforms(
    seed: int, stream: int, run_id: int, frame_index: int, ray_index: np.ndarray
) -> np.ndarray:
    """Uniform draws in the open interval (0, 1), shape ``(len(ray_index), DRAWS_PER_RAY)``.

    Row ``j`` depends only on the key and ``ray_index[j]``.
    """
    ray_index = np.asarray(ray_index, dtype=np.int64)
    if ray_index.size == 0:
        return np.empty((0, DRAWS_PER_RAY))
    if ray_index.min() < 0:
        raise ValueError("ray indices must be non-negative")
    n_rows = int(ray_index.max()) + 1
    gen = _generator(seed, stream, run_id, frame_index)
    # Generator.random yields k * 2**-53; the half-step shift excludes 0 and 1
    block = gen.random((n_rows, DRAWS_PER_RAY)) + 2.0**-54
    return block[ray_index]


def ray_normals_and_uniforms(
    seed: int, stream: int, run_id: int, frame_index: int, ray_index: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Standard normal and uniform draw per ray (normal via inverse CDF)."""
    u = ray_uniforms(seed, stream, run_id, frame_index, ray_index)
    return ndtri(u[:, 0]), u[:, 1]
