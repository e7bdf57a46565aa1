"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set SYNLEARN_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("SYNLEARN_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def xor_events(sig, shot_idx, err_idx, n_shots: int) -> np.ndarray:
    return _impl.xor_events(
        np.ascontiguousarray(sig, dtype=np.uint64),
        np.ascontiguousarray(shot_idx, dtype=np.int64),
        np.ascontiguousarray(err_idx, dtype=np.int64),
        int(n_shots),
    )


def masked_parity_counts(bits, masks) -> np.ndarray:
    return _impl.masked_parity_counts(
        np.ascontiguousarray(bits, dtype=np.uint64), np.ascontiguousarray(masks, dtype=np.uint64)
    )


def pack_rows(ints, n_bits: int) -> np.ndarray:
    """Python-int bitsets -> (len, W) uint64 array, bit i of row r at word i // 64."""
    W = max(1, (n_bits + 63) // 64)
    out = np.zeros((len(ints), W), dtype=np.uint64)
    for r, v in enumerate(ints):
        for w in range(W):
            out[r, w] = (v >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return out


def unpack_bits(packed: np.ndarray, n_bits: int) -> np.ndarray:
    """(N, W) uint64 -> (N, n_bits) uint8 0/1 matrix."""
    b = np.unpackbits(np.ascontiguousarray(packed).view(np.uint8), axis=1, bitorder="little")
    return b[:, :n_bits]
