"""Time the envelope scan on each available backend.

    python benchmarks/bench_envelope.py [--points N] [--rmax R] [--repeat K]
"""

import argparse
import time

import numpy as np

from margulis import kernels
from margulis.cf_engine import parse_angle
from margulis.region import envelope_w2


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--angle", default="pre:[];per:[1]")
    parser.add_argument("--points", type=int, default=10_000)
    parser.add_argument("--rmax", type=float, default=1e8)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    angle = parse_angle(args.angle)
    radii = np.geomspace(1e-3, args.rmax, args.points)
    envelope_w2(angle, radii)  # warm the coefficient cache

    results = {}
    previous = kernels.backend()
    for name in sorted(kernels.BACKENDS):
        kernels.use_backend(name)
        best = float("inf")
        for _ in range(args.repeat):
            start = time.perf_counter()
            out = envelope_w2(angle, radii)
            best = min(best, time.perf_counter() - start)
        results[name] = (best, out)
        print(f"{name:>9}: {best * 1e3:9.2f} ms  ({args.points} radii up to {args.rmax:g})")
    kernels.use_backend(previous)

    if len(results) == 2:
        (tp, (wp, kp)), (tc, (wc, kc)) = results["python"], results["compiled"]
        same = np.array_equal(wp, wc) and np.array_equal(kp, kc)
        print(f"  speedup: {tp / tc:.1f}x   identical output: {same}")


if __name__ == "__main__":
    main()
