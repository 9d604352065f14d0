"""Compare the compiled and pure-Python transition kernels.

    python benchmarks/bench_kernels.py --cycles 5000 --sizes 15 30 60
"""
import argparse
import time

import numpy as np

from subscriber_ca.automaton import SimParams, available_backends, run


def time_run(params, backend, repeat):
    best = float("inf")
    series = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        series = run(params, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, series


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cycles", type=int, default=5000)
    ap.add_argument("--sizes", type=int, nargs="+", default=[15, 30, 60])
    ap.add_argument("--lambda", dest="lam", type=float, default=0.07)
    ap.add_argument("--mu", type=float, default=0.03)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}; cycles={args.cycles}")
    print(f"{'size':>6} {'backend':>8} {'seconds':>9} {'cell-steps/s':>13} {'speedup':>8}")
    for side in args.sizes:
        params = SimParams(args.lam, args.mu, width=side, height=side, cycles=args.cycles, seed=1)
        results = {b: time_run(params, b, args.repeat) for b in backends}
        base = results["python"][0]
        for b, (sec, series) in results.items():
            rate = side * side * args.cycles / sec
            print(f"{side:>4}^2 {b:>8} {sec:9.4f} {rate:13.3e} {base / sec:7.1f}x")
        if len(results) > 1:
            assert np.array_equal(results["cython"][1], results["python"][1]), "backends disagree"


if __name__ == "__main__":
    main()
