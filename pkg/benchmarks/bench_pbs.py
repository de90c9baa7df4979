#!/usr/bin/env python3
"""Benchmark the compiled particle kernel against the NumPy fallback.

Both kernels consume identical pre-drawn random arrays and must produce
bit-identical trajectories; this script asserts that equivalence and reports
the throughput of each backend on the reference workload (524 molecules,
20 ms at dt = 1e-6, i.e. the 1e7-channel configuration).

    python benchmarks/bench_pbs.py [--trials 5] [--dt 1e-6]
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

import ionmod.pbs.core as core
from ionmod.pbs import PbsConfig, _pykernel, run
from ionmod.physio import default_spec

try:
    from ionmod.pbs import _ckernel
except ImportError:
    _ckernel = None


def time_backend(kernel, spec, cfg) -> tuple[float, object]:
    original = core.step_chunk
    core.step_chunk = kernel
    try:
        start = time.perf_counter()
        est = run(spec, cfg)
        elapsed = time.perf_counter() - start
    finally:
        core.step_chunk = original
    return elapsed, est


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--dt", type=float, default=1e-6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = default_spec(N=10**7)
    cfg = PbsConfig(
        dt=args.dt,
        n_trials=args.trials,
        bin_width=5e-4,
        kill_radius=10 * spec.r_m,
        base_seed=args.seed,
    )
    n_steps = round(spec.T1 / args.dt)
    work = cfg.n_trials * n_steps * 524

    backends = [("python", _pykernel.step_chunk)]
    if _ckernel is not None:
        backends.insert(0, ("compiled", _ckernel.step_chunk))
    else:
        print("compiled kernel not built; benchmarking the fallback alone")

    results = {}
    for name, kernel in backends:
        elapsed, est = time_backend(kernel, spec, cfg)
        results[name] = (elapsed, est)
        rate = work / elapsed
        print(f"{name:>9}: {elapsed:8.2f} s   {rate:.3g} particle-steps/s")

    if len(results) == 2:
        (t_c, est_c), (t_p, est_p) = results["compiled"], results["python"]
        same = (
            np.array_equal(est_c.w_hat.value, est_p.w_hat.value)
            and np.array_equal(est_c.M_hat.value, est_p.M_hat.value)
            and np.array_equal(est_c.ci_halfwidth.value, est_p.ci_halfwidth.value)
        )
        print(f"bit-identical outputs: {same}")
        print(f"speedup: {t_p / t_c:.2f}x")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
