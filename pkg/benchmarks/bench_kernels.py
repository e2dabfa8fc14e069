"""Compare the compiled and numpy SINR kernels.

Times ``eta_batch`` and ``eta_grad_batch`` for both backends over a few
batch shapes, checks that they agree, and prints a table of median times.

    python benchmarks/bench_kernels.py --repeats 20
"""

import argparse
import timeit

import numpy as np

from majam.kernels import available_backends, get_backend

SHAPES = [(1, 8, 3), (200, 8, 3), (100, 8, 6), (100, 12, 3), (100, 16, 6)]


def _inputs(batch, n, k, rng):
    pos = np.sort(rng.uniform(0, 7, (batch, n)), axis=1)
    c0 = rng.uniform(-1, 1, batch)
    cj = rng.uniform(-1, 1, (batch, k))
    return pos, c0, cj, 0.1


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = available_backends()
    if len(backends) < 2:
        print("compiled backend not built; only timing the numpy fallback")
    rng = np.random.default_rng(args.seed)
    header = f"{'kernel':<14}{'B':>5}{'N':>4}{'K':>4}" + "".join(f"{b + ' ms':>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for fn in ("eta_batch", "eta_grad_batch"):
        for batch, n, k in SHAPES:
            data = _inputs(batch, n, k, rng)
            times, outs = [], []
            for name in backends:
                kernel = getattr(get_backend(name), fn)
                outs.append(kernel(*data))
                t = timeit.repeat(lambda: kernel(*data), number=1, repeat=args.repeats)
                times.append(np.median(t) * 1e3)
            if len(outs) == 2:
                a, b = (np.atleast_1d(o[0] if isinstance(o, tuple) else o) for o in outs)
                np.testing.assert_allclose(a, b, rtol=1e-9)
            line = f"{fn:<14}{batch:>5}{n:>4}{k:>4}" + "".join(f"{t:>12.4f}" for t in times)
            if len(times) == 2:
                line += f"{times[0] / times[1]:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
