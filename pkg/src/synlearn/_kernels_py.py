"""Pure numpy versions of the compiled kernels; used when the extension is missing."""

from __future__ import annotations

import numpy as np


def xor_events(sig: np.ndarray, shot_idx: np.ndarray, err_idx: np.ndarray, n_shots: int) -> np.ndarray:
    out = np.zeros((n_shots, sig.shape[1]), dtype=np.uint64)
    if shot_idx.size:
        np.bitwise_xor.at(out, shot_idx, sig[err_idx])
    return out


def masked_parity_counts(bits: np.ndarray, masks: np.ndarray) -> np.ndarray:
    if bits.shape[0] == 0 or masks.shape[0] == 0:
        return np.zeros(masks.shape[0], dtype=np.int64)
    # unpack to a 0/1 matrix, then parities by integer matmul mod 2
    b = np.unpackbits(bits.view(np.uint8), axis=1, bitorder="little").astype(np.int32)
    m = np.unpackbits(masks.view(np.uint8), axis=1, bitorder="little").astype(np.int32)
    par = (b @ m.T) & 1
    return par.sum(axis=0).astype(np.int64)
