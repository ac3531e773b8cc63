"""Compare the compiled and pure-numpy kernel backends (and the FFT route).

    python3 benchmarks/bench_kernels.py [--sizes 128,512,2048] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from tracerdeconv import kernels
from tracerdeconv.signals import TimeGrid, TimeSeries
from tracerdeconv.spectral import convolve_fft


def best_of(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="128,512,2048")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = kernels.implementations()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(sorted(impls))}")
    header = f"{'kernel':<22}{'n':>6}" + "".join(f"{name:>14}" for name in sorted(impls)) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(0)
    for n in (int(s) for s in args.sizes.split(",")):
        a, b = rng.normal(size=n), rng.normal(size=n)
        cases = {
            "convolve_direct": lambda m: (lambda: m.convolve_direct(a, b, 0.05)),
            "cumulative_trapezoid": lambda m: (lambda: m.cumulative_trapezoid(a, 0.05)),
            "gradient2": lambda m: (lambda: m.gradient2(a, 0.05)),
        }
        for label, make in cases.items():
            times = {name: best_of(make(mod), args.repeat) for name, mod in sorted(impls.items())}
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            cells = "".join(f"{times[name] * 1e6:>12.1f}us" for name in sorted(times))
            print(f"{label:<22}{n:>6}{cells}{speed:>9.1f}x")
        g = TimeGrid(0.0, 0.05, n)
        ta, tb = TimeSeries(g, a), TimeSeries(g, b)
        t_fft = best_of(lambda: convolve_fft(ta, tb), args.repeat)
        print(f"{'convolve_fft (numpy)':<22}{n:>6}{t_fft * 1e6:>12.1f}us")


if __name__ == "__main__":
    main()
