"""End-to-end scenarios shared by the command line and the acceptance tests.

Every scenario takes a plain config dict and returns ``(rows, summary)``: rows
become a CSV table and the summary is JSON with a ``checks`` map of named
threshold results.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import build_parity_structure
from .circuit_library import repetition_memory, surface_memory
from .codes import named_code
from .learner import (
    build_problem,
    empirical_log_expectations,
    layer_averages,
    optimize,
    relative_class_error,
    strengths,
)
from .logical import LookupMLE, estimate_p_fail
from .noise import NoiseModel, gaussian_single_qubit_model
from .pauli import local_label
from .spacetime import NoiseSpec, build_spacetime_code, localize_generator_basis, standard_noise
from .syndrome import sample_syndromes

Rows = List[Dict[str, object]]


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


def _require(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing field {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"field {key!r} must be {kind.__name__ if isinstance(kind, type) else kind}")
    return val


def _positive_ints(cfg: dict, key: str, default: Sequence[int]) -> List[int]:
    vals = cfg.get(key, list(default))
    if not isinstance(vals, list) or not vals or any(not isinstance(v, int) or v <= 0 for v in vals):
        raise ConfigError(f"field {key!r} must be a nonempty list of positive integers")
    return vals


def code_capacity_model(n: int, mean: float, sigma: float, seed: int) -> NoiseModel:
    return gaussian_single_qubit_model(n, mean, sigma, seed)


def memory_circuit(cfg: dict):
    kind = cfg.get("circuit", "surface_memory")
    rounds = int(cfg.get("rounds", 2))
    if kind == "surface_memory":
        return surface_memory(int(cfg.get("d", 3)), rounds)
    if kind == "repetition_memory":
        return repetition_memory(rounds)
    raise ConfigError(f"field 'circuit' must be surface_memory or repetition_memory, got {kind!r}")


def spacetime_setup(circuit, strategy: Optional[str] = None):
    ps = build_parity_structure(circuit)
    if strategy:
        ps = localize_generator_basis(ps, strategy, circuit)
    return build_spacetime_code(circuit, ps)


def _noise_spec(cfg: dict) -> NoiseSpec:
    spec = NoiseSpec()
    if "rates" in cfg:
        spec.rates = {**spec.rates, **{k: float(v) for k, v in cfg["rates"].items()}}
    spec.relative_sigma = float(cfg.get("relative_sigma", 0.2))
    if "drift" in cfg:
        spec.drift = {k: float(v) for k, v in cfg["drift"].items()}
    return spec


# -- scenarios ------------------------------------------------------------------------------------

def static_code(cfg: dict) -> Tuple[Rows, dict]:
    """Per-error truth vs learned rates on a code-capacity model (exact or sampled inputs)."""
    code = named_code(_require(cfg, "code", str), cfg.get("params", []))
    mean = float(cfg.get("mean", 5e-3))
    sigma = float(cfg.get("sigma", 1e-3))
    seed = int(cfg.get("seed", 0))
    model = code_capacity_model(code.n, mean, sigma, seed)
    prob = build_problem(code.measured_gens, model, cfg.get("stabilizer_set", "analytic"))
    N = cfg.get("N", "exact")
    if N == "exact":
        y = prob.exact_log_expectations(model)
    else:
        if not isinstance(N, int) or N <= 0:
            raise ConfigError("field 'N' must be 'exact' or a positive integer")
        ds = sample_syndromes(code.measured_gens, model, N, seed=seed + 1)
        y, _ = empirical_log_expectations(prob, ds)
    lr = optimize(prob, y, cfg.get("solver", "recursive"))
    truth = model.error_rates()
    rows = []
    for e, (c, r) in enumerate(model.errors):
        rows.append({"qubit": model.channels[c].support[0], "pauli": local_label(r, 1), "true": truth[e], "learned": lr.p_hat[e]})
    dev = float(np.max(np.abs(lr.p_hat - truth)))
    thr = float(cfg.get("max_abs_error", 1e-8 if N == "exact" else 1.0))
    summary = {
        "scenario": "static_code",
        "code": code.name,
        "classes": prob.partition.num_classes,
        "max_abs_error": dev,
        "relative_class_error": relative_class_error(lr.p_hat, truth, prob.partition),
        "checks": {"max_abs_error": dev < thr},
    }
    return rows, summary


def scaling_sweep(cfg: dict) -> Tuple[Rows, dict]:
    """Average relative class error against N for surface codes of several distances.

    Fits eta = a N^{-1/2} per distance and reports the N reaching ``target``.
    """
    ds_ = _positive_ints(cfg, "d", [3, 5, 7])
    Ns = _positive_ints(cfg, "N", [3000, 10000, 30000, 100000])
    reps = int(cfg.get("replicas", 10))
    mean = float(cfg.get("mean", 5e-3 / 3))
    sigma = float(cfg.get("sigma", 1e-3 / 3))
    target = float(cfg.get("target", 0.1))
    seed = int(cfg.get("seed", 0))
    rows: Rows = []
    fitted = {}
    slopes = {}
    for d in ds_:
        code = named_code("rotated_surface", [d])
        model = code_capacity_model(code.n, mean, sigma, seed + d)
        prob = build_problem(code.measured_gens, model, "analytic")
        truth = model.error_rates()
        etas = []
        for N in Ns:
            errs = []
            for k in range(reps):
                ds = sample_syndromes(code.measured_gens, model, N, seed=seed * 7919 + 1000 * d + k, stream=N)
                y, _ = empirical_log_expectations(prob, ds)
                lr = optimize(prob, y, "linear_lsq")
                errs.append(relative_class_error(lr.p_hat, truth, prob.partition))
            eta = float(np.mean(errs))
            etas.append(eta)
            rows.append({"d": d, "N": N, "replicas": reps, "mean_relative_error": eta, "std": float(np.std(errs))})
        logN, loge = np.log(Ns), np.log(etas)
        slopes[d] = float(np.polyfit(logN, loge, 1)[0])
        a = float(np.exp(np.mean(loge + 0.5 * logN)))
        fitted[d] = (a / target) ** 2
    ratio = max(fitted.values()) / min(fitted.values())
    summary = {
        "scenario": "scaling_sweep",
        "target_relative_error": target,
        "fitted_N": {str(d): v for d, v in fitted.items()},
        "slopes": {str(d): v for d, v in slopes.items()},
        "N_ratio": ratio,
        "checks": {
            "N_ratio_below_2": ratio < 2.0,
            "slopes_near_half": all(abs(s + 0.5) < 0.15 for s in slopes.values()),
        },
    }
    return rows, summary


def ec_circuit(cfg: dict) -> Tuple[Rows, dict]:
    """Class sums learned from detector samples of a memory circuit, against truth."""
    circuit = memory_circuit(cfg)
    st = spacetime_setup(circuit, cfg.get("localize"))
    seed = int(cfg.get("seed", 0))
    model = standard_noise(circuit, _noise_spec(cfg), seed)
    prob = build_problem(st.measured_gens, model, cfg.get("stabilizer_set", "analytic"))
    N = int(cfg.get("N", 100_000))
    if N <= 0:
        raise ConfigError("field 'N' must be positive")
    ds = sample_syndromes(st.measured_gens, model, N, seed=seed + 1, products=prob.masks, threads=int(cfg.get("threads", 1)))
    y, _ = empirical_log_expectations(prob, ds)
    r = strengths(model, cfg.get("constraints", "uniform"))
    lr = optimize(prob, y, cfg.get("solver", "linear_lsq"), r=r)
    truth = prob.partition.class_sums(model.error_rates())
    learned = lr.class_sums()
    rows = [
        {"class": i, "pattern": int(pat), "size": len(mem), "true": truth[i], "learned": learned[i]}
        for i, (pat, mem) in enumerate(zip(prob.partition.patterns, prob.partition.members))
    ]
    rel = float(np.mean(np.abs(learned - truth) / truth))
    summary = {
        "scenario": "ec_circuit",
        "generators": len(st.measured_gens),
        "errors": model.num_errors,
        "classes": prob.partition.num_classes,
        "relative_class_error": rel,
        "checks": {"relative_class_error": rel < float(cfg.get("max_relative_error", 0.5))},
    }
    return rows, summary


def logical_eval(cfg: dict) -> Tuple[Rows, dict]:
    """Logical failure rates from learned vs true code-capacity rates, same decoder for both."""
    code = named_code(cfg.get("code", "rotated_surface"), cfg.get("params", [3]))
    mean = float(cfg.get("mean", 1e-3))
    sigma = float(cfg.get("sigma", mean / 5))
    N = int(cfg.get("N", 3000))
    seed = int(cfg.get("seed", 0))
    cap = cfg.get("weight_cap")
    gens = code.measured_gens
    logicals = code.logical_x + code.logical_z
    model = code_capacity_model(code.n, mean, sigma, seed)
    decoder = LookupMLE.from_model(code_capacity_model(code.n, mean, 0.0, 0), gens, logicals, weight_cap=cap)
    truth = estimate_p_fail(model, gens, logicals, decoder, weight_cap=cap)
    ds = sample_syndromes(gens, model, N, seed=seed + 1)
    prob = build_problem(gens, model, "analytic")
    y, _ = empirical_log_expectations(prob, ds)
    lr = optimize(prob, y, cfg.get("solver", "linear_lsq"))
    learned = estimate_p_fail(model.with_rates(lr.p_hat), gens, logicals, decoder, weight_cap=cap)
    rows = [{"f": format(f, f"0{len(logicals)}b"), "true": truth.p_fail[f], "learned": learned.p_fail.get(f, 0.0)} for f in sorted(truth.p_fail)]
    pt, pl = truth.failure_probability(), learned.failure_probability()
    rel = abs(pl - pt) / pt if pt > 0 else float(pl > 0)
    summary = {
        "scenario": "logical_eval",
        "code": code.name,
        "N": N,
        "p_fail_true": pt,
        "p_fail_learned": pl,
        "relative_error": rel,
        "expected_direct_failures": pt * N,
        "identifiability": truth.identifiable,
        "unenumerated_mass": truth.missing,
        "checks": {"relative_error_below_1": rel < 1.0},
    }
    return rows, summary


def drift_demo(cfg: dict) -> Tuple[Rows, dict]:
    """Per-layer 1Q/2Q average rates under random-walk drift, truth vs learned."""
    cfg = {"drift": {"theta": 1.0, "sigma": 0.1}, "relative_sigma": 0.0, **cfg}
    circuit = memory_circuit(cfg)
    st = spacetime_setup(circuit, cfg.get("localize"))
    seed = int(cfg.get("seed", 0))
    model = standard_noise(circuit, _noise_spec(cfg), seed)
    prob = build_problem(st.measured_gens, model, "analytic")
    N = int(cfg.get("N", 10_000))
    ds = sample_syndromes(st.measured_gens, model, N, seed=seed + 1, products=prob.masks)
    y, _ = empirical_log_expectations(prob, ds)
    lr = optimize(prob, y, cfg.get("solver", "linear_lsq"), r=strengths(model, cfg.get("constraints", "uniform")))
    true_avg = layer_averages(model.error_rates(), model)
    learned_avg = layer_averages(lr.p_hat, model)
    rows = [{"layer": k[0], "kind": k[1], "true": v, "learned": learned_avg[k]} for k, v in true_avg.items()]
    two = [(r["true"], r["learned"]) for r in rows if r["kind"] == "2q"]
    corr = float(np.corrcoef(*zip(*two))[0, 1]) if len(two) > 2 else float("nan")
    summary = {
        "scenario": "drift_demo",
        "layers": len(circuit.layers),
        "two_qubit_correlation": corr,
        "checks": {"two_qubit_tracking": bool(corr > float(cfg.get("min_correlation", 0.5)))},
    }
    return rows, summary


SCENARIOS: Dict[str, Callable[[dict], Tuple[Rows, dict]]] = {
    "static_code": static_code,
    "ec_circuit": ec_circuit,
    "logical_eval": logical_eval,
    "scaling_sweep": scaling_sweep,
    "drift_demo": drift_demo,
}


def run_scenario(cfg: dict) -> Tuple[Rows, dict]:
    name = _require(cfg, "scenario", str)
    if name not in SCENARIOS:
        raise ConfigError(f"field 'scenario' must be one of {sorted(SCENARIOS)}, got {name!r}")
    return SCENARIOS[name](cfg)
