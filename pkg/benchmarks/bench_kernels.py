"""Time every kernel under both backends.

Usage::

    python benchmarks/bench_kernels.py [--sizes 4096 65536] [--repeat 7]

Both variants are taken from ``ccfoe.kernels.IMPLEMENTATIONS``, so the
environment flag does not matter here. Numba variants are called once
before timing so compilation is excluded.
"""

import argparse
import timeit

import numpy as np

from ccfoe import kernels


def _cases(n, rng):
    x = (np.arange(n) - n / 2 + 0.5) / n
    y = np.cumsum(np.where(np.abs(x - 0.1) < 0.2, 10.0, 1.0)) / n + rng.normal(0, 1e-3, n)
    m = rng.standard_normal((4, 4))
    return {
        "lfsr": (15, 14, 1, n),
        "primitives": (x, y),
        "breakpoint_normal_eq": (x, y),
        "slope_normal_eq": (x, y, -0.1, 0.3),
        "solve4": (m @ m.T + np.eye(4), rng.standard_normal(4)),
    }


def bench(sizes, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        cases = _cases(n, rng)
        for name, args in cases.items():
            times = {}
            for backend, impl in kernels.IMPLEMENTATIONS.items():
                fn = impl[name]
                fn(*args)
                number = max(1, int(2e5 // n))
                times[backend] = min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number
            rows.append((name, n, times))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[2**12, 2**16])
    p.add_argument("--repeat", type=int, default=7)
    args = p.parse_args(argv)
    backends = list(kernels.IMPLEMENTATIONS)
    print(f"{'kernel':<22}{'n':>8}" + "".join(f"{b + ' us':>14}" for b in backends) + f"{'speedup':>10}")
    for name, n, times in bench(args.sizes, args.repeat):
        cols = "".join(f"{times[b] * 1e6:>14.2f}" for b in backends)
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{name:<22}{n:>8}{cols}{speed:>10.1f}")


if __name__ == "__main__":
    main()
