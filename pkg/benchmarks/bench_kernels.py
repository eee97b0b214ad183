"""Time the numba and numpy CRF kernels on the same random batches.

    python3 benchmarks/bench_kernels.py [--batch 256] [--length 40] [--repeat 5]

Both backends are imported directly, so the PHRASEBREAK_NUMBA flag does
not matter here.  The first numba call (JIT compile or cache load) is
reported separately and excluded from the timings.
"""

import argparse
import time

import numpy as np

from phrasebreak._kernels import _numba, _numpy

KERNELS = ("log_partition", "marginals", "viterbi")


def make_batch(rng, batch, length, labels=3):
    em = rng.normal(size=(batch, length, labels))
    lengths = rng.integers(1, length + 1, size=batch)
    tr = rng.normal(size=(labels, labels))
    return em, lengths.astype(np.int64), tr, rng.normal(size=labels), rng.normal(size=labels)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--length", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    batch = make_batch(np.random.default_rng(args.seed), args.batch, args.length)
    print(f"batch={args.batch} length={args.length} labels=3 repeat={args.repeat}")
    print(f"{'kernel':<14}{'first numba':>13}{'numba':>11}{'numpy':>11}{'speedup':>9}  agree")
    for name in KERNELS:
        fast, slow = getattr(_numba, name), getattr(_numpy, name)
        t0 = time.perf_counter()
        out_fast = fast(*batch)
        first = time.perf_counter() - t0
        out_slow = slow(*batch)
        pairs = zip(out_fast, out_slow) if isinstance(out_fast, tuple) else [(out_fast, out_slow)]
        agree = all(np.allclose(a, b, rtol=1e-10, atol=1e-12) for a, b in pairs)
        t_fast = best_of(fast, batch, args.repeat)
        t_slow = best_of(slow, batch, args.repeat)
        print(
            f"{name:<14}{first * 1e3:>11.1f}ms{t_fast * 1e3:>9.2f}ms{t_slow * 1e3:>9.2f}ms"
            f"{t_slow / t_fast:>8.1f}x  {'yes' if agree else 'NO'}"
        )


if __name__ == "__main__":
    main()
