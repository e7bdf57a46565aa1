import itertools

import numpy as np
import pytest

from conftest import four_two_two
from synlearn.circuit import build_parity_structure, simulate_shot
from synlearn.circuit_library import steane_ghz
from synlearn.codes import five_qubit, rotated_surface, steane
from synlearn.experiments import spacetime_setup
from synlearn.learner import build_problem, empirical_log_expectations, optimize, recursive_solve, split_log_nu
from synlearn.logical import (
    BudgetExceeded,
    LookupMLE,
    MinWeight,
    TrivialDecoder,
    check_fault_tolerance,
    estimate_p_fail,
    expectation_factor,
    fixed_logical_combinations,
    logical_class_probabilities,
    logical_fidelity,
    signature_of,
    wilson_interval,
)
from synlearn.noise import NoiseModel, gaussian_single_qubit_model
from synlearn.pauli import PauliOperator, embed, multiply
from synlearn.spacetime import NoiseSpec, standard_noise
from synlearn.syndrome import sample_syndromes


def setup(code, mean=5e-3, sigma=1e-3, seed=0):
    return code.measured_gens, code.logical_x + code.logical_z, gaussian_single_qubit_model(code.n, mean, sigma, seed)


def brute_distribution(gens, logicals, model):
    """P(s, l) by enumerating every combination of channel outcomes."""
    m = len(gens)
    out = {}
    for choice in itertools.product(*[range(4**ch.k) for ch in model.channels]):
        p = 1.0
        e = PauliOperator.identity(model.n)
        for ch, r in zip(model.channels, choice):
            p *= ch.probs[r]
            if r:
                e = multiply(e, embed(r, ch.support, model.n))
        sig = signature_of(e, gens, logicals)
        key = sig.s | (sig.l << m)
        out[key] = out.get(key, 0.0) + p
    return out


def test_exhaustive_matches_brute_force_enumeration():
    g, L, m = setup(five_qubit(), mean=0.02, sigma=0.005)
    exact = logical_class_probabilities(m, g, L)
    brute = brute_distribution(g, L, m)
    assert set(exact.probs) == set(brute)
    for k, v in brute.items():
        assert exact.probs[k] == pytest.approx(v, rel=1e-9, abs=1e-15)
    assert len(exact.probs) == 64


def test_noiseless_and_zero_rates():
    g, L, m = setup(steane())
    zero = m.with_rates(np.zeros(m.num_errors))
    d = logical_class_probabilities(zero, g, L)
    assert d.probs == {0: 1.0}
    rep = estimate_p_fail(zero, g, L, LookupMLE.from_model(m, g, L))
    assert rep.p_fail[0] == 1.0
    assert logical_fidelity([(rep.p_fail, 1, 1.0)], 1) == 1.0


def test_signature_composition_is_xor():
    g, L, _ = setup(rotated_surface(3))
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = PauliOperator(9, int(rng.integers(512)), int(rng.integers(512)))
        b = PauliOperator(9, int(rng.integers(512)), int(rng.integers(512)))
        assert signature_of(multiply(a, b), g, L) == signature_of(a, g, L) ^ signature_of(b, g, L)
    assert signature_of(PauliOperator.identity(9), g, L).s == 0


def test_weight_capped_enumeration_bounds_missing_mass():
    g, L, m = setup(rotated_surface(3), mean=2e-3, sigma=5e-4)
    full = logical_class_probabilities(m, g, L)
    capped = logical_class_probabilities(m, g, L, weight_cap=3)
    assert 0 < capped.missing < 1e-6
    diff = sum(abs(full.probs.get(k, 0) - capped.probs.get(k, 0)) for k in set(full.probs) | set(capped.probs))
    assert diff <= capped.missing + 1e-12


def test_budget_errors():
    g, L, m = setup(rotated_surface(5))
    with pytest.raises(BudgetExceeded):
        logical_class_probabilities(m, g, L)


def test_mc_within_three_sigma_of_exhaustive_on_five_qubit():
    g, L, m = setup(five_qubit())
    dec = LookupMLE.from_model(m, g, L)
    exact = estimate_p_fail(m, g, L, dec)
    mc = estimate_p_fail(m, g, L, dec, method="mc", N_mc=1_000_000, seed=3)
    assert sum(exact.p_fail.values()) == pytest.approx(1.0, abs=1e-9)
    for f, p in exact.p_fail.items():
        sigma = np.sqrt(p * (1 - p) / 1_000_000)
        assert abs(mc.p_fail[f] - p) <= 3 * sigma + 1e-12
        lo, hi = mc.ci[f]
        assert lo <= mc.p_fail[f] <= hi


def test_lookup_decoder_never_worse_than_trivial():
    for code, seed in ((five_qubit(), 0), (steane(), 1), (rotated_surface(3), 2)):
        g, L, m = setup(code, mean=3e-3, seed=seed)
        lookup = estimate_p_fail(m, g, L, LookupMLE.from_model(m, g, L))
        trivial = estimate_p_fail(m, g, L, TrivialDecoder())
        assert lookup.failure_probability() <= trivial.failure_probability() + 1e-15
        assert LookupMLE.from_model(m, g, L).decode(0) == 0


def test_min_weight_decoder_corrects_single_faults():
    g, L, m = setup(rotated_surface(3))
    dec = MinWeight.from_model(m, g, L, weight_cap=2)
    for e in m.error_paulis():
        sig = signature_of(e, g, L)
        assert dec.decode(sig.s) == sig.l


def test_fault_tolerance_check():
    g, L, m = setup(rotated_surface(3))
    assert check_fault_tolerance(m, g, L).tolerant
    assert check_fault_tolerance(NoiseModel(9, []), g, L).tolerant
    c = four_two_two()
    g4, L4, m4 = setup(c)
    res = check_fault_tolerance(m4, g4, L4)
    assert not res.tolerant and len(res.witness) == 2
    e1, e2 = (m4.error_pauli(i) for i in res.witness)
    prod = multiply(e1, e2)
    assert signature_of(prod, g4, L4).s == 0 and signature_of(prod, g4, L4).l != 0
    rep = estimate_p_fail(m4, g4, L4, LookupMLE.from_model(m4, g4, L4))
    assert rep.to_dict()["identifiability"] is False


def test_p_fail_invariant_across_equivalent_rate_vectors():
    # two rate vectors with equal exact expectations give the same failure distribution
    g, L, m = setup(rotated_surface(3), seed=4)
    prob = build_problem(g, m, "analytic")
    log_nu = recursive_solve(prob.exact_log_expectations(m), prob.partition, prob.masks)
    dec = LookupMLE.from_model(m, g, L)
    outs = []
    for r in (np.ones(m.num_errors), np.linspace(1, 3, m.num_errors)):
        _, p = split_log_nu(log_nu, prob.partition, m, r)
        outs.append(estimate_p_fail(m.with_rates(p), g, L, dec).p_fail)
    for f in outs[0]:
        assert outs[0][f] == pytest.approx(outs[1][f], abs=1e-9)


def test_fidelity_formulas():
    assert logical_fidelity([({0: 0.9, 1: 0.1}, 1, 1.0)], 1) == pytest.approx(0.9)
    assert expectation_factor({0: 0.7, 1: 0.1, 2: 0.15, 3: 0.05}, 3) == pytest.approx(0.7 - 0.1 - 0.15 + 0.05)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05


def test_ghz_learned_fidelity_matches_direct_simulation():
    spec = NoiseSpec(rates={"idle": 5e-3, "1q": 1e-2, "2q": 3e-2, "measure": 1e-2}, relative_sigma=0.3)
    nominal = NoiseSpec(rates=spec.rates, relative_sigma=0.0)
    learned_terms, direct_q, N_direct = [], [], 3000
    for basis in "XYZ":
        circ = steane_ghz(basis)
        ps = build_parity_structure(circ)
        st = spacetime_setup(circ)
        g, L = st.measured_gens, st.measured_logicals
        model = standard_noise(circ, spec, seed=7)
        dec = LookupMLE.from_model(standard_noise(circ, nominal), g, L)
        ((alpha, ideal),) = fixed_logical_combinations(circ, ps)
        ds = sample_syndromes(g, model, 100_000, seed=3)
        prob = build_problem(g, model, "analytic")
        y, _ = empirical_log_expectations(prob, ds)
        lr = optimize(prob, y, "linear_lsq")
        learned_terms.append((estimate_p_fail(model.with_rates(lr.p_hat), g, L, dec).p_fail, alpha, 1.0))
        bad = 0
        for shot in range(N_direct):
            out = simulate_shot(circ, model, 11, shot)
            s = sum(int(b) << i for i, b in enumerate(ps.check_values(out)))
            l = sum(int(b) << i for i, b in enumerate(ps.logical_values(out)))
            bad += (bin((l ^ dec.decode(s)) & alpha).count("1") & 1) ^ ideal
        direct_q.append(bad / N_direct)
    F_learned = logical_fidelity(learned_terms, 2)
    F_direct = 1 - 0.5 * sum(direct_q)
    sigma = 0.5 * np.sqrt(sum(q * (1 - q) / N_direct for q in direct_q))
    assert abs(F_learned - F_direct) < 3 * sigma
    assert 0.9 < F_learned < 1.0
