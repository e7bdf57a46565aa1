"""Counter-based random streams: (seed, stream, index) -> independent generator."""

from __future__ import annotations

import numpy as np

SHOT_BLOCK = 1 << 14


def block_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream) and positioned at counter ``index``.

    The index occupies the third counter word, so each index owns 2**128 draws.
    """
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    counter = np.array([0, 0, int(index), 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def shot_blocks(shots: int, block: int = SHOT_BLOCK):
    """Fixed-size shot blocks (start, stop, block index); independent of any sharding."""
    for b, start in enumerate(range(0, shots, block)):
        yield start, min(start + block, shots), b
