import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synlearn import _kernels_py, kernels


@given(st.integers(1, 130), st.integers(1, 40), st.integers(0, 300), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_backends_agree(width, shots, events, seed):
    rng = np.random.default_rng(seed)
    W = (width + 63) // 64
    sig = kernels.pack_rows([int(rng.integers(0, 2**62)) << int(rng.integers(0, max(1, width - 62))) & ((1 << width) - 1) for _ in range(7)], width)
    shot_idx = rng.integers(0, shots, events)
    err_idx = rng.integers(0, 7, events)
    a = _kernels_py.xor_events(sig, shot_idx.astype(np.int64), err_idx.astype(np.int64), shots)
    b = kernels.xor_events(sig, shot_idx, err_idx, shots)
    assert np.array_equal(a, b) and a.shape == (shots, W)
    masks = kernels.pack_rows([int(v) for v in rng.integers(0, 2**min(width, 62), 5)], width)
    assert np.array_equal(_kernels_py.masked_parity_counts(a, masks), kernels.masked_parity_counts(a, masks))


def test_pack_unpack_roundtrip():
    ints = [0, 1, (1 << 70) | 5, (1 << 129) - 1]
    packed = kernels.pack_rows(ints, 130)
    bits = kernels.unpack_bits(packed, 130)
    back = [sum(int(b) << i for i, b in enumerate(row)) for row in bits]
    assert back == ints


def test_xor_events_oracle():
    sig = kernels.pack_rows([0b011, 0b110, 0b101], 3)
    out = kernels.xor_events(sig, np.array([0, 0, 1, 2, 2, 2]), np.array([0, 1, 2, 0, 1, 2]), 4)
    assert kernels.unpack_bits(out, 3).tolist() == [[1, 0, 1], [1, 0, 1], [0, 0, 0], [0, 0, 0]]


def test_compiled_backend_present():
    pytest.importorskip("synlearn._kernels")
    assert kernels.BACKEND in ("cython", "python")
