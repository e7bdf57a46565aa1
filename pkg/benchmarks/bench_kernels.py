"""Compare the compiled and pure-Python sampling kernels on a circuit-level workload.

Usage: python benchmarks/bench_kernels.py [--shots N] [--repeat R]
"""

import argparse
import time

import numpy as np

from synlearn import _kernels_py, kernels
from synlearn.circuit_library import surface_memory
from synlearn.experiments import spacetime_setup
from synlearn.learner import build_problem
from synlearn.noise import sample_events
from synlearn.spacetime import NoiseSpec, standard_noise
from synlearn.syndrome import signature_table


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=1 << 14)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    circuit = surface_memory(3, 9)
    st = spacetime_setup(circuit, "surface_pairing")
    model = standard_noise(circuit, NoiseSpec(relative_sigma=0.2), seed=0)
    sig = signature_table(model, st.measured_gens)
    shot_idx, err_idx = sample_events(model, args.shots, np.random.default_rng(1))
    masks = kernels.pack_rows(build_problem(st.measured_gens, model, "analytic").masks, len(st.measured_gens))
    print(f"backend in use: {kernels.BACKEND}; {args.shots} shots, {len(err_idx)} fault events, {masks.shape[0]} product masks")
    if kernels.BACKEND != "cython":
        print("compiled extension not built; only the fallback can be timed")

    compiled = {"xor_events": kernels.xor_events, "masked_parity_counts": kernels.masked_parity_counts}
    fallback = {"xor_events": _kernels_py.xor_events, "masked_parity_counts": _kernels_py.masked_parity_counts}
    t_py, bits_py = best_of(lambda: fallback["xor_events"](sig, shot_idx, err_idx, args.shots), args.repeat)
    t_c, bits_c = best_of(lambda: compiled["xor_events"](sig, shot_idx, err_idx, args.shots), args.repeat)
    assert np.array_equal(bits_py, bits_c)
    print(f"xor_events            python {t_py * 1e3:8.2f} ms   {kernels.BACKEND} {t_c * 1e3:8.2f} ms   x{t_py / t_c:5.1f}")
    t_py, c_py = best_of(lambda: fallback["masked_parity_counts"](bits_py, masks), args.repeat)
    t_c, c_c = best_of(lambda: compiled["masked_parity_counts"](bits_py, masks), args.repeat)
    assert np.array_equal(c_py, c_c)
    print(f"masked_parity_counts  python {t_py * 1e3:8.2f} ms   {kernels.BACKEND} {t_c * 1e3:8.2f} ms   x{t_py / t_c:5.1f}")


if __name__ == "__main__":
    main()
