"""Time the numba and numpy backends of the hot kernels on the same inputs.

Usage: python3 benchmarks/bench_accel.py [--size 2000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from ballinterp import _accel
from ballinterp.geometry import uniform_ball


def cases(size, rng):
    Z = uniform_ball(rng, size, 2)
    W = uniform_ball(rng, size // 4, 2)
    vals = rng.standard_normal((len(W), 2)) + 0j
    a = uniform_ball(rng, 1, 2, 0.9)[0]
    exps = rng.integers(0, 9, (45, 2))
    coefs = rng.standard_normal(45) + 0j
    dist = rng.uniform(0, 2, (size // 4, 200))
    masses = rng.uniform(0, 1, 200)
    t = np.geomspace(1e-3, 2, 60)
    return {
        "moebius": lambda be: be.moebius(a, Z),
        "kernel_block": lambda be: be.kernel_block(Z, W, vals, 2.5),
        "gleason_block": lambda be: be.gleason_block(Z, W, vals, 4.0),
        "poly_eval": lambda be: be.poly_eval(Z, exps, coefs),
        "window_counts": lambda be: be.window_counts(dist, masses, t),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _accel.NUMBA is None:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<15}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call in cases(args.size, rng).items():
        call(_accel.NUMBA)    # compile outside the timing
        t_np = min(timeit.repeat(lambda: call(_accel.NUMPY), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: call(_accel.NUMBA), number=1, repeat=args.repeat))
        print(f"{name:<15}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
