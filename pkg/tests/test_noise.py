import numpy as np
import pytest

from synlearn.noise import (
    AssumptionViolation,
    LocalChannel,
    NoiseModel,
    approximate_rates,
    channel_probs_from_log_mu,
    gaussian_single_qubit_model,
    local_eigenvalues,
    mu_matrix,
    preset_probs,
    sample_error,
    sample_events,
    total_eigenvalue,
    transformed_eigenvalues_mu,
    v_matrix,
)
from synlearn.pauli import PauliOperator, embed, scalar_commutator


def test_eigenvalues_are_commutator_weighted_sums():
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(16)) * 0.1
    probs[0] += 0.9
    ch = LocalChannel((0, 1), probs)
    lam = local_eigenvalues(ch)
    for a in range(16):
        Pa = embed(a, [0, 1], 2)
        direct = sum(p * scalar_commutator(Pa, embed(e, [0, 1], 2)) for e, p in enumerate(probs))
        assert lam[a] == pytest.approx(direct, abs=1e-14)


def test_mu_and_v_are_inverse():
    for k in (1, 2):
        assert np.allclose(mu_matrix(k) @ v_matrix(k), np.eye(4**k - 1))


def test_mu_roundtrip_recovers_channel():
    rng = np.random.default_rng(1)
    for k in (1, 2):
        p = rng.uniform(1e-5, 1e-3, 4**k - 1)
        probs = np.concatenate([[1 - p.sum()], p])
        m = NoiseModel(k, [LocalChannel(tuple(range(k)), probs)])
        log_mu = transformed_eigenvalues_mu(m, log=True)
        assert np.allclose(channel_probs_from_log_mu(log_mu, k), probs, atol=1e-14)
        # -log(mu)/2 is a first-order rate estimate
        assert np.max(np.abs(approximate_rates(m) - p)) < 4 * p.sum() ** 2


def test_total_eigenvalue_is_product_over_channels():
    m = gaussian_single_qubit_model(3, 5e-3, 1e-3, 0)
    O = PauliOperator.from_label("XZY")
    expected = np.prod([local_eigenvalues(ch)[i] for ch, i in zip(m.channels, (1, 3, 2))])
    assert total_eigenvalue(m, O) == pytest.approx(expected)


def test_channel_validation():
    with pytest.raises(ValueError):
        LocalChannel((0,), [0.5, 0.5, 0.1, -0.1])
    with pytest.raises(ValueError):
        LocalChannel((0, 0), np.full(16, 1 / 16))
    with pytest.raises(AssumptionViolation):
        LocalChannel((0,), [0.4, 0.2, 0.2, 0.2]).validate()


def test_presets():
    assert np.allclose(preset_probs("depolarizing", 1, 0.03), [0.97, 0.01, 0.01, 0.01])
    b = preset_probs("biased", 1, 0.11, eta=10)
    assert b[3] == pytest.approx(0.1)
    s = preset_probs("single_error", 2, 0.01, pauli="ZZ")
    assert s[15] == pytest.approx(0.01) and s[1:15].sum() == 0


def test_with_rates_preserves_skeleton():
    m = gaussian_single_qubit_model(4, 5e-3, 1e-3, 0)
    p = np.linspace(1e-3, 2e-3, m.num_errors)
    m2 = m.with_rates(p)
    assert np.allclose(m2.error_rates(), p)
    assert [c.support for c in m2.channels] == [c.support for c in m.channels]
    with pytest.raises(ValueError):
        m.with_rates(p[:-1])


def test_sampler_marginals_match_rates():
    m = NoiseModel(3, [LocalChannel((q,), preset_probs("depolarizing", 1, 0.06)) for q in range(3)] + [LocalChannel((0, 2), preset_probs("depolarizing", 2, 0.15))])
    N = 200_000
    shots, errs = sample_events(m, N, np.random.default_rng(3))
    counts = np.bincount(errs, minlength=m.num_errors) / N
    p = m.error_rates()
    assert np.all(np.abs(counts - p) < 5 * np.sqrt(p / N) + 1e-9)
    # at most one event per (shot, channel)
    off = m.channel_offsets()
    chan = np.searchsorted(off, errs, side="right") - 1
    assert len(set(zip(shots.tolist(), chan.tolist()))) == len(shots)


def test_sample_error_is_deterministic():
    m = gaussian_single_qubit_model(5, 0.05, 0.01, 0)
    assert sample_error(m, 7, 3) == sample_error(m, 7, 3)
    assert len({sample_error(m, 7, s) for s in range(50)}) > 1


def test_json_roundtrip():
    m = gaussian_single_qubit_model(4, 5e-3, 1e-3, 2)
    back = NoiseModel.from_dict(m.to_dict())
    assert np.array_equal(back.error_rates(), m.error_rates())
