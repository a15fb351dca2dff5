"""Timing comparison of the compiled and interpreted kernel backends.

Runs every kernel with identical inputs on both backends, checks that the
outputs agree bit for bit, and reports the best-of-repeats wall time plus
the speedup of the compiled extension.

Usage: python3 benchmarks/bench_backends.py [--trials N] [--repeats R]
"""

import argparse
import timeit

import numpy as np

from fewpatch._backend import load_backend


def benchmark_cases(trials: int) -> list[tuple[str, str, tuple]]:
    """(label, kernel name, positional args) for each timed call."""
    n = 50
    center = np.zeros(n)
    cluster = np.r_[2.0, np.zeros(n - 1)]
    return [
        ("ball n=50", "ball_sample", (7, 9, 0, trials, n, center, 1.0, 0.0, 0)),
        ("sphere n=50", "sphere_sample", (7, 9, 0, trials, n)),
        ("uniform", "uniform_sample", (7, 9, 0, 4 * trials)),
        (
            "quasi-orth n=50 k=10",
            "quasi_orth_run",
            (7, 9, trials, n, 10, center, 1.0, 0.0, 0.5, 0.1),
        ),
        (
            "centering n=50 k=10",
            "centering_run",
            (7, 9, trials, n, 10, center, 1.0, 0.0),
        ),
        (
            "learn-few n=20 k=5",
            "learn_few_run",
            (7, 9, trials // 10, 20, 5, 100, 1.0, 0.0, 0.0),
        ),
        (
            "learn-from-few n=50 k=5",
            "learn_from_few_run",
            (7, 9, trials // 10, n, 5, 100, 100, cluster, 1.0, 0.0, 0.0, 0.6633, 0.6),
        ),
    ]


def same_output(a, b) -> bool:
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return len(a) == len(b) and all(
        np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b)
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=2000, help="trials per call")
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats")
    args = parser.parse_args()

    compiled = load_backend("cython")
    interpreted = load_backend("pure-python")

    header = "%-24s %12s %12s %9s" % ("kernel", "cython", "pure-python", "speedup")
    print(header)
    print("-" * len(header))
    for label, name, call_args in benchmark_cases(args.trials):
        fast = getattr(compiled, name)
        slow = getattr(interpreted, name)
        if not same_output(fast(*call_args), slow(*call_args)):
            raise SystemExit("backends disagree on %s" % name)
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeats))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeats))
        print(
            "%-24s %11.4fs %11.4fs %8.1fx" % (label, t_fast, t_slow, t_slow / t_fast)
        )


if __name__ == "__main__":
    main()
