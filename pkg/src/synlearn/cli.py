"""Command-line driver: ``synlearn <subcommand>``.

Exit codes: 0 success, 2 an acceptance threshold failed, 3 invalid input.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import sys
from typing import Optional

import click
import numpy as np

from . import __version__
from .circuit import CircuitError, build_parity_structure, load_circuit
from .circuit_library import repetition_memory, steane_ghz, surface_memory
from .codes import CodeError, load_code, named_code, pure_distance
from .experiments import ConfigError, run_scenario, spacetime_setup
from .learner import LearningError, build_problem, empirical_log_expectations, layer_averages, optimize, strengths
from .logical import (
    LookupMLE,
    MinWeight,
    TrivialDecoder,
    check_fault_tolerance,
    estimate_p_fail,
    fixed_logical_combinations,
    logical_fidelity,
)
from .noise import NoiseModel, gaussian_single_qubit_model, load_noise
from .spacetime import NoiseSpec, SpacetimeError, localize_generator_basis, standard_noise
from .syndrome import MembershipError, SyndromeDataset, sample_syndromes

EXIT_THRESHOLD = 2
EXIT_INVALID = 3

log = logging.getLogger("synlearn")


class Invalid(click.ClickException):
    exit_code = EXIT_INVALID


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise Invalid(f"{what}: file {path} does not exist")
    except json.JSONDecodeError as exc:
        raise Invalid(f"{what}: {path} is not valid JSON ({exc})")


def _code(spec: str):
    """``name`` or ``name:p1,p2`` for a named code, otherwise a JSON file path."""
    try:
        if os.path.exists(spec):
            return load_code(spec)
        name, _, params = spec.partition(":")
        return named_code(name, [int(v) for v in params.split(",") if v])
    except (CodeError, ValueError, KeyError) as exc:
        raise Invalid(f"--code {spec}: {exc}")


def _circuit(spec: str):
    """A circuit JSON file, or ``surface:d,rounds`` / ``repetition:rounds`` / ``ghz:basis``."""
    try:
        if os.path.exists(spec):
            return load_circuit(spec)
        name, _, params = spec.partition(":")
        if name == "surface":
            d, rounds = (int(v) for v in params.split(","))
            return surface_memory(d, rounds)
        if name == "repetition":
            return repetition_memory(int(params))
        if name == "ghz":
            return steane_ghz(params or "Z")
    except (CircuitError, ValueError, KeyError) as exc:
        raise Invalid(f"--circuit {spec}: {exc}")
    raise Invalid(f"--circuit {spec}: no such file or builder")


def _target(code: Optional[str], circuit: Optional[str], localize: Optional[str] = None):
    """(generators, logicals, circuit or None) for a code or a circuit."""
    if bool(code) == bool(circuit):
        raise Invalid("give exactly one of --code and --circuit")
    if code:
        c = _code(code)
        return c.measured_gens, c.logical_x + c.logical_z, None
    circ = _circuit(circuit)
    try:
        st = spacetime_setup(circ, localize)
    except (CircuitError, SpacetimeError) as exc:
        raise Invalid(str(exc))
    return st.measured_gens, st.measured_logicals, circ


def _noise(path: str, n: int) -> NoiseModel:
    try:
        model = NoiseModel.from_dict(_load_json(path, "--noise"))
    except (KeyError, ValueError) as exc:
        raise Invalid(f"--noise {path}: {exc}")
    if model.n != n:
        raise Invalid(f"--noise {path}: model acts on {model.n} qubits, target needs {n}")
    return model


@click.group()
@click.version_option(__version__)
@click.option("--log-level", default=lambda: os.environ.get("SYNLEARN_LOG", "WARNING"), show_default="WARNING")
def main(log_level: str) -> None:
    """Learn Pauli error rates from syndrome data and evaluate logical performance."""
    logging.basicConfig(level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s")


# -- codes / noise / circuit -----------------------------------------------------------------------

@main.group()
def codes() -> None:
    """Code constructions."""


@codes.command("show")
@click.argument("code")
@click.option("--distance/--no-distance", default=False, help="Brute-force the pure distance.")
@click.option("--out", type=click.Path())
def codes_show(code: str, distance: bool, out: Optional[str]) -> None:
    """Print a code as JSON (CODE is name[:params] or a file)."""
    c = _code(code)
    data = c.to_dict()
    data["k"] = c.k
    if distance:
        data["pure_distance"] = pure_distance(c)
    _write(_json(data), out)


@main.group()
def noise() -> None:
    """Noise models."""


@noise.command("gen")
@click.option("--code")
@click.option("--circuit")
@click.option("--mean", type=float, default=5e-3, show_default=True, help="Per-component mean (code capacity).")
@click.option("--sigma", type=float, default=1e-3, show_default=True)
@click.option("--rates", help="Circuit rates as kind=value,... for idle, 1q, 2q, measure, prep.")
@click.option("--relative-sigma", type=float, default=0.2, show_default=True)
@click.option("--drift", help="theta,sigma of a random walk on circuit rates.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path())
def noise_gen(code, circuit, mean, sigma, rates, relative_sigma, drift, seed, out) -> None:
    """Random single-qubit noise for a code, or standard circuit noise for a circuit."""
    if bool(code) == bool(circuit):
        raise Invalid("give exactly one of --code and --circuit")
    if code:
        model = gaussian_single_qubit_model(_code(code).n, mean, sigma, seed)
    else:
        spec = NoiseSpec(relative_sigma=relative_sigma)
        try:
            if rates:
                spec.rates = {**spec.rates, **{k: float(v) for k, v in (kv.split("=") for kv in rates.split(","))}}
            if drift:
                theta, s = (float(v) for v in drift.split(","))
                spec.drift = {"theta": theta, "sigma": s}
        except ValueError:
            raise Invalid("--rates takes kind=value pairs and --drift takes theta,sigma")
        model = standard_noise(_circuit(circuit), spec, seed)
    _write(_json(model.to_dict()), out)


@main.group("circuit")
def circuit_group() -> None:
    """Circuit builders."""


@circuit_group.command("build")
@click.argument("kind", type=click.Choice(["surface", "repetition", "ghz"]))
@click.option("--d", type=int, default=3, show_default=True)
@click.option("--rounds", type=int, default=1, show_default=True)
@click.option("--basis", default="Z", show_default=True)
@click.option("--out", type=click.Path())
def circuit_build(kind, d, rounds, basis, out) -> None:
    """Write a memory or GHZ circuit as JSON."""
    try:
        circ = {"surface": lambda: surface_memory(d, rounds), "repetition": lambda: repetition_memory(rounds), "ghz": lambda: steane_ghz(basis)}[kind]()
    except CircuitError as exc:
        raise Invalid(str(exc))
    _write(circ.dumps() + "\n", out)


@main.group()
def spacetime() -> None:
    """Spacetime codes of circuits."""


@spacetime.command("map")
@click.option("--circuit", required=True)
@click.option("--localize", type=click.Choice(["none", "greedy_window", "surface_pairing"]), default="none", show_default=True)
@click.option("--out", type=click.Path())
def spacetime_map(circuit, localize, out) -> None:
    """Spacetime generators and logicals of a circuit as JSON."""
    circ = _circuit(circuit)
    try:
        ps = build_parity_structure(circ)
        if localize != "none":
            ps = localize_generator_basis(ps, localize, circ)
        from .spacetime import build_spacetime_code

        st = build_spacetime_code(circ, ps)
    except (CircuitError, SpacetimeError) as exc:
        raise Invalid(str(exc))
    _write(st.dumps() + "\n", out)


# -- sample / learn / eval -------------------------------------------------------------------------

def _threads(threads: Optional[int]) -> int:
    return threads if threads else (os.cpu_count() or 1)


@main.command()
@click.option("--code")
@click.option("--circuit")
@click.option("--localize", type=click.Choice(["greedy_window", "surface_pairing"]))
@click.option("--noise", "noise_path", required=True)
@click.option("-N", "--shots", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, help="Worker threads (default: all cores); output does not depend on it.")
@click.option("--csv", "csv_path", type=click.Path(), help="Also write per-shot bits as CSV.")
@click.option("--out", type=click.Path())
def sample(code, circuit, localize, noise_path, shots, seed, threads, csv_path, out) -> None:
    """Sample syndromes and write the dataset JSON."""
    gens, _, _ = _target(code, circuit, localize)
    model = _noise(noise_path, gens[0].n)
    if shots <= 0:
        raise Invalid("-N must be positive")
    prob = build_problem(gens, model, "analytic")
    ds = sample_syndromes(gens, model, shots, seed=seed, products=prob.masks, threads=_threads(threads), keep_bits=bool(csv_path))
    data = ds.to_dict()
    data["products"] = {str(m): c for m, c in sorted(ds.product_counts.items())}
    _write(_json(data), out)
    if csv_path:
        _write(ds.to_csv(), csv_path)


def _dataset(path: str, gens) -> SyndromeDataset:
    data = _load_json(path, "--dataset")
    try:
        ds = SyndromeDataset.from_dict(data)
    except (KeyError, ValueError) as exc:
        raise Invalid(f"--dataset {path}: {exc}")
    if [g.to_sparse() for g in ds.tracked] != [g.to_sparse() for g in gens]:
        raise Invalid(f"--dataset {path}: tracked operators differ from the target's generators")
    ds.product_counts = {int(k): int(v) for k, v in data.get("products", {}).items()}
    return ds


@main.command()
@click.option("--code")
@click.option("--circuit")
@click.option("--localize", type=click.Choice(["greedy_window", "surface_pairing"]))
@click.option("--noise", "noise_path", required=True, help="Noise model; only its channel supports are used unless --exact.")
@click.option("--dataset", "dataset_path")
@click.option("--exact", is_flag=True, help="Use exact expectations of --noise instead of a dataset.")
@click.option("--solver", type=click.Choice(["recursive", "linear_lsq", "nonlinear"]), default="linear_lsq", show_default=True)
@click.option("--constraints", default="uniform", show_default=True, help="uniform, typed:<a,b,c,d> or a JSON file with a strength list.")
@click.option("--stabilizer-set", default="analytic", show_default=True, help="analytic, minimal, or a JSON file with masks.")
@click.option("--early-stop", default=None, help="auto (calibrated) or an iteration count for the nonlinear solver.")
@click.option("--out", type=click.Path())
def learn(code, circuit, localize, noise_path, dataset_path, exact, solver, constraints, stabilizer_set, early_stop, out) -> None:
    """Learn class eigenvalues and per-error rates."""
    gens, _, _ = _target(code, circuit, localize)
    model = _noise(noise_path, gens[0].n)
    if exact == bool(dataset_path):
        raise Invalid("give exactly one of --dataset and --exact")
    sset = stabilizer_set if stabilizer_set in ("analytic", "minimal") else _load_json(stabilizer_set, "--stabilizer-set")
    try:
        r = strengths(model, _load_json(constraints, "--constraints") if os.path.exists(constraints) else constraints)
        prob = build_problem(gens, model, sset)
        if exact:
            y = prob.exact_log_expectations(model)
            ds = None
        else:
            ds = _dataset(dataset_path, gens)
            y, _ = empirical_log_expectations(prob, ds)
        kw = {}
        if early_stop and solver == "nonlinear":
            if early_stop == "auto":
                from .learner import calibrate_early_stop

                kw["max_iter"] = calibrate_early_stop(prob, model, ds.shots if ds else 10_000)
            else:
                kw["max_iter"] = int(early_stop)
        lr = optimize(prob, y, solver, r=r, **kw)
    except (LearningError, MembershipError, ValueError) as exc:
        raise Invalid(str(exc))
    report = lr.to_dict()
    report["layer_averages"] = {f"{L}:{k}": v for (L, k), v in layer_averages(lr.p_hat, model).items()}
    report["noise"] = model.with_rates(lr.p_hat).to_dict()
    _write(_json(report), out)


def _decoder(name: str, model: NoiseModel, gens, logicals, cap):
    if name == "trivial":
        return TrivialDecoder()
    if name == "min_weight":
        return MinWeight.from_model(model, gens, logicals, weight_cap=cap or 3)
    return LookupMLE.from_model(model, gens, logicals, weight_cap=cap)


@main.command("eval-logical")
@click.option("--code")
@click.option("--circuit")
@click.option("--localize", type=click.Choice(["greedy_window", "surface_pairing"]))
@click.option("--learned", "learned_path", required=True, help="Report from `learn` (its noise field is used).")
@click.option("--decoder", type=click.Choice(["lookup_mle", "min_weight", "trivial"]), default="lookup_mle", show_default=True)
@click.option("--decoder-noise", help="Noise model the decoder is built from (default: the learned one).")
@click.option("--method", default="exhaustive", show_default=True, help="exhaustive or mc:<N>.")
@click.option("--weight-cap", type=int, help="Fault-set size cap for exhaustive enumeration.")
@click.option("--target", type=click.Choice(["zero"]), help="Also report the fidelity with the circuit's fixed logical outcomes.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path())
def eval_logical(code, circuit, localize, learned_path, decoder, decoder_noise, method, weight_cap, target, seed, out) -> None:
    """Logical failure distribution from learned rates."""
    gens, logicals, circ = _target(code, circuit, localize)
    rep = _load_json(learned_path, "--learned")
    if "noise" not in rep:
        raise Invalid(f"--learned {learned_path}: report has no 'noise' field")
    model = NoiseModel.from_dict(rep["noise"])
    dec_model = _noise(decoder_noise, model.n) if decoder_noise else model
    dec = _decoder(decoder, dec_model, gens, logicals, weight_cap)
    try:
        if method == "exhaustive":
            res = estimate_p_fail(model, gens, logicals, dec, weight_cap=weight_cap)
        elif method.startswith("mc:"):
            res = estimate_p_fail(model, gens, logicals, dec, method="mc", N_mc=int(method[3:]), seed=seed)
        else:
            raise Invalid("--method must be exhaustive or mc:<N>")
    except ValueError as exc:
        raise Invalid(str(exc))
    data = res.to_dict()
    data["decoder"] = decoder
    ft = check_fault_tolerance(model, gens, logicals)
    data["fault_tolerance_witness"] = list(ft.witness) if ft.witness else None
    if target:
        if circ is None:
            raise Invalid("--target needs --circuit")
        terms = [(res.p_fail, alpha, 1.0) for alpha, _ in fixed_logical_combinations(circ, build_parity_structure(circ))]
        data["fidelity_terms"] = len(terms)
        data["fidelity_partial"] = logical_fidelity(terms, len(logicals))
    _write(_json(data), out)


@main.command()
@click.argument("config", type=click.Path())
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
@click.option("--threads", type=int, help="Worker threads (default: all cores).")
def run(config: str, out_dir: str, threads: Optional[int]) -> None:
    """Run a scenario config; writes <scenario>.csv and <scenario>_summary.json."""
    cfg = _load_json(config, "config")
    if not isinstance(cfg, dict):
        raise Invalid(f"{config}: top level must be an object")
    cfg.setdefault("threads", _threads(threads))
    try:
        rows, summary = run_scenario(cfg)
    except ConfigError as exc:
        raise Invalid(f"{config}: {exc}")
    except (CodeError, CircuitError, LearningError, SpacetimeError) as exc:
        raise Invalid(f"{config}: {exc}")
    os.makedirs(out_dir, exist_ok=True)
    name = cfg["scenario"]
    summary["passed"] = all(summary.get("checks", {}).values())
    _write(_csv(rows), os.path.join(out_dir, f"{name}.csv"))
    _write(_json(summary), os.path.join(out_dir, f"{name}_summary.json"))
    click.echo(f"{name}: {'pass' if summary['passed'] else 'FAIL'}")
    if not summary["passed"]:
        sys.exit(EXIT_THRESHOLD)


if __name__ == "__main__":
    main()
