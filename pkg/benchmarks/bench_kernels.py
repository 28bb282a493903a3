"""Time the numba and numpy kernels on the same random inputs.

    python benchmarks/bench_kernels.py [--size 1000000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from ppcm import _kernels as K


def inputs(size, seed=0):
    rng = np.random.default_rng(seed)
    ti = rng.uniform(0, np.pi, size)
    tf = rng.uniform(0, np.pi, size)
    eps = rng.uniform(-np.pi, np.pi, size)
    g = 10.0 ** rng.uniform(-12, -0.3, size)
    n = 10.0 ** rng.uniform(0, 15, size)
    kappa = rng.choice([1.0, 2.0], size)
    return ti, tf, eps, g, n, kappa


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args(argv)
    args = inputs(a.size)
    if not K.HAVE_NUMBA:
        print("numba not installed; numpy only")
    print(f"size={a.size}  default backend={K.BACKEND}")
    cases = [("reduce_phase", K.reduce_phase_numpy, K.reduce_phase_numba, args[4:5] + (np.sin(args[3]),)),
             ("ppcm", K.ppcm_numpy, K.ppcm_numba, args)]
    for name, np_fn, nb_fn, xs in cases:
        t_np = best_of(np_fn, xs, a.repeat)
        line = f"{name:13s} numpy {t_np * 1e3:8.2f} ms"
        if K.HAVE_NUMBA:
            nb_fn(*(x[:10] for x in xs))  # compile outside the timing
            t_nb = best_of(nb_fn, xs, a.repeat)
            diff = max(float(np.nanmax(np.abs(u - v) / np.maximum(np.abs(u), 1e-300)))
                       for u, v in zip(np.atleast_2d(np_fn(*xs)), np.atleast_2d(nb_fn(*xs)))
                       if np.all(np.isfinite(u)))
            line += f"   numba {t_nb * 1e3:8.2f} ms   speedup {t_np / t_nb:5.2f}x   max rel diff {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
