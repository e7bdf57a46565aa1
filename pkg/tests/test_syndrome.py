import itertools
import json

import numpy as np
import pytest

from synlearn.codes import rotated_surface, steane
from synlearn.noise import LocalChannel, NoiseModel, gaussian_single_qubit_model, preset_probs, total_eigenvalue
from synlearn.pauli import PauliOperator, embed, product
from synlearn.syndrome import (
    MembershipError,
    SyndromeDataset,
    error_patterns,
    exact_expectations,
    sample_syndromes,
)


def convolution_oracle(gens, model):
    """Exact syndrome distribution by convolving each channel's syndrome distribution."""
    m = len(gens)
    dist = np.zeros(1 << m)
    dist[0] = 1.0
    for ch in model.channels:
        local = np.zeros(1 << m)
        for r, p in enumerate(ch.probs):
            e = embed(r, ch.support, model.n)
            s = sum(1 << i for i, g in enumerate(gens) if ((e.x & g.z) ^ (e.z & g.x)).bit_count() & 1)
            local[s] += p
        new = np.zeros_like(dist)
        for s, p in enumerate(local):
            if p:
                new += p * dist[np.arange(1 << m) ^ s]
        dist = new
    return dist


def correlated_model(n):
    chans = [LocalChannel((q,), preset_probs("depolarizing", 1, 0.03)) for q in range(n)]
    chans += [LocalChannel((q, q + 1), preset_probs("depolarizing", 2, 0.02)) for q in range(0, n - 1, 2)]
    return NoiseModel(n, chans)


def test_convolution_oracle_tvd_at_one_million_shots():
    code = steane()
    model = correlated_model(7)
    exact = convolution_oracle(code.measured_gens, model)
    N = 1_000_000
    ds = sample_syndromes(code.measured_gens, model, N, seed=4)
    bits = ds.bit_matrix()
    keys = bits @ (1 << np.arange(bits.shape[1]))
    emp = np.bincount(keys, minlength=len(exact)) / N
    tvd = 0.5 * np.abs(emp - exact).sum()
    assert tvd <= 5e-3


def test_exact_expectations_match_product_over_channels():
    code = rotated_surface(3)
    model = correlated_model(9)
    g = code.measured_gens
    ops = [g[0], product([g[0], g[1]], 9), product(g[2:5], 9)]
    lam = exact_expectations(g, model, ops)
    assert np.allclose(lam, [total_eigenvalue(model, O) for O in ops])


def test_exact_expectation_is_mean_sign_over_enumerated_errors():
    model = NoiseModel(2, [LocalChannel((0,), [0.9, 0.05, 0.03, 0.02]), LocalChannel((0, 1), preset_probs("depolarizing", 2, 0.1))])
    O = PauliOperator.from_label("XZ")
    total = 0.0
    for r1, r2 in itertools.product(range(4), range(16)):
        e1, e2 = embed(r1, (0,), 2), embed(r2, (0, 1), 2)
        x, z = e1.x ^ e2.x, e1.z ^ e2.z
        sign = -1 if ((x & O.z) ^ (z & O.x)).bit_count() & 1 else 1
        total += model.channels[0].probs[r1] * model.channels[1].probs[r2] * sign
    assert total_eigenvalue(model, O) == pytest.approx(total, abs=1e-14)


def test_sampled_expectations_within_binomial_error():
    code = rotated_surface(3)
    model = gaussian_single_qubit_model(9, 5e-3, 1e-3, 1)
    ds = sample_syndromes(code.measured_gens, model, 200_000, seed=9)
    exact = exact_expectations(code.measured_gens, model, code.measured_gens)
    sigma = np.sqrt((1 - exact**2) / ds.shots)
    assert np.all(np.abs(ds.expectations() - exact) < 5 * sigma)


def test_products_streamed_equal_products_from_bits():
    code = rotated_surface(3)
    model = gaussian_single_qubit_model(9, 1e-2, 1e-3, 1)
    masks = [3, 5, 0b1111, 0b10000001]
    a = sample_syndromes(code.measured_gens, model, 5000, seed=2, products=masks)
    b = sample_syndromes(code.measured_gens, model, 5000, seed=2)
    assert np.array_equal(a.product_expectations(masks), b.product_expectations(masks))
    bits = b.bit_matrix()
    direct = [1 - 2 * np.mean(bits[:, [i for i in range(8) if (m >> i) & 1]].sum(axis=1) % 2) for m in masks]
    assert np.allclose(b.product_expectations(masks), direct)


def test_thread_count_does_not_change_output():
    code = rotated_surface(3)
    model = gaussian_single_qubit_model(9, 1e-2, 1e-3, 1)
    a = sample_syndromes(code.measured_gens, model, 70_000, seed=3, threads=1)
    b = sample_syndromes(code.measured_gens, model, 70_000, seed=3, threads=4)
    assert np.array_equal(a.bits, b.bits)


def test_streaming_mode_drops_bits():
    code = steane()
    model = gaussian_single_qubit_model(7, 1e-2, 1e-3, 1)
    ds = sample_syndromes(code.measured_gens, model, 1000, seed=0, keep_bits=False, products=[3])
    assert ds.bits is None
    ds.product_expectations([3])
    with pytest.raises(ValueError):
        ds.product_expectations([5])


def test_membership_and_empty_dataset_errors():
    code = steane()
    model = gaussian_single_qubit_model(7, 1e-2, 1e-3, 1)
    with pytest.raises(MembershipError):
        sample_syndromes(code.measured_gens, model, 10, tracked=[PauliOperator.from_label("X1", 7)])
    ds = sample_syndromes(code.measured_gens, model, 0)
    with pytest.raises(ValueError):
        ds.expectations()


def test_dataset_json_and_csv():
    code = steane()
    model = gaussian_single_qubit_model(7, 1e-2, 1e-3, 1)
    ds = sample_syndromes(code.measured_gens, model, 100, seed=1)
    back = SyndromeDataset.from_dict(json.loads(ds.dumps()))
    assert np.array_equal(back.flip_counts, ds.flip_counts)
    assert back.tracked == ds.tracked
    lines = ds.to_csv().strip().splitlines()
    assert len(lines) == 101


def test_error_patterns_compose_by_xor():
    code = rotated_surface(3)
    model = correlated_model(9)
    pats = error_patterns(model, code.measured_gens)
    errs = model.error_paulis()
    rng = np.random.default_rng(0)
    for _ in range(50):
        i, j = rng.integers(len(errs), size=2)
        e = product([errs[i], errs[j]], 9)
        s = sum(1 << k for k, g in enumerate(code.measured_gens) if ((e.x & g.z) ^ (e.z & g.x)).bit_count() & 1)
        assert s == pats[i] ^ pats[j]
