#!/usr/bin/env python3
"""Benchmark: compiled filter kernel vs the pure-NumPy fallback.

Times the raw kernel on realistic system shapes (the filter is the inner
loop of every likelihood evaluation), then times one full spillover
analysis end to end under each backend via subprocesses.

Usage: python benchmarks/bench_kalman.py [--quick]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from sportscausal._core import _kalman_py
from sportscausal.timeseries import StateSpaceSpec, _build_system, _diffuse_prior

try:
    from sportscausal._core import _kalman_cy
except ImportError:
    _kalman_cy = None


CASES = [
    ("local level", StateSpaceSpec(), 60),
    ("local level", StateSpaceSpec(), 480),
    ("linear trend", StateSpaceSpec(trend="local_linear_trend"), 240),
    ("trend + weekly seasonal",
     StateSpaceSpec(trend="local_linear_trend", seasonal_period=7), 240),
]


def time_kernel(kernel, args, repeats):
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeats):
            kernel(*args)
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def kernel_benchmark(repeats):
    rng = np.random.default_rng(0)
    print(f"{'system':<28} {'n':>5} {'dim':>4} {'numpy':>12} {'cython':>12} {'speedup':>8}")
    for name, spec, n in CASES:
        variances = {k: 0.5 for k in spec.variance_names}
        trans, obs_vec, qdiag, obs_var = _build_system(spec, variances)
        y = rng.normal(100, 2, n)
        a0, p0 = _diffuse_prior(y, spec.state_dim)
        args = (trans, obs_vec, qdiag, obs_var, a0, p0, y, False)

        t_py = time_kernel(_kalman_py.kalman_filter, args, repeats)
        if _kalman_cy is not None:
            t_cy = time_kernel(_kalman_cy.kalman_filter, args, repeats)
            ll_py = _kalman_py.kalman_filter(*args)[0]
            ll_cy = _kalman_cy.kalman_filter(*args)[0]
            assert abs(ll_py - ll_cy) < 1e-8 * abs(ll_py), "backends disagree"
            ratio = f"{t_py / t_cy:7.1f}x"
            cy_col = f"{t_cy * 1e6:10.1f}us"
        else:
            ratio, cy_col = "    n/a", "  not built"
        print(f"{name:<28} {n:>5} {spec.state_dim:>4} {t_py * 1e6:10.1f}us "
              f"{cy_col} {ratio}")


def end_to_end_benchmark():
    code = (
        "import time; import numpy as np;"
        "from sportscausal.simulate import SimConfig, gen_experiment;"
        "from sportscausal.estimators import sports_causal;"
        "from sportscausal.timeseries import StateSpaceSpec;"
        "from sportscausal import backend_name;"
        "panel, _ = gen_experiment(SimConfig(m=100, n=100, t0=60, t_post=30,"
        " spillover_effect=-5.0, seed=0));"
        "spec = StateSpaceSpec(use_regression=True);"
        "start = time.perf_counter();"
        "r = sports_causal(panel, spec, ar_max_order=5, B=1, seed=0);"
        "print(f'{backend_name()}: {time.perf_counter() - start:.3f}s "
        "(corrected effect {r.corrected.estimate.effect:.3f})')"
    )
    print("\none full spillover-corrected analysis (m=n=100, t0=60, T=30):",
          flush=True)
    for backend in ("cython", "python"):
        subprocess.run([sys.executable, "-c", code],
                       env={**os.environ, "SPORTSCAUSAL_BACKEND": backend})


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats")
    args = parser.parse_args()
    repeats = 50 if args.quick else 400

    if _kalman_cy is None:
        print("note: compiled kernel not built; showing fallback timings only\n")
    kernel_benchmark(repeats)
    end_to_end_benchmark()


if __name__ == "__main__":
    main()
