"""Compare the numba and numpy product-enumeration kernels.

Runs one full level (all m**k words) per configuration on each backend,
checks that both return the same norms and multiplication counts, and
prints the best-of-N wall time.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from jsrkit import kernels
from jsrkit._accel import HAVE_NUMBA

CONFIGS = [
    # (n, m, k)
    (2, 2, 14),
    (3, 2, 12),
    (4, 3, 8),
    (8, 2, 10),
]
CODES = (kernels.COLSUM, kernels.SPECTRAL, kernels.ROWSUM)


def run(stack, words, mask, use_numba):
    return kernels.word_stats(stack, words, CODES, mask, use_numba=use_numba)


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy backend can run")
        return

    rng = np.random.default_rng(0)
    print(f"{'n':>3} {'m':>3} {'k':>3} {'words':>9} {'mults':>9} {'numpy s':>9} {'numba s':>9} {'speedup':>8}")
    for n, m, k in CONFIGS:
        stack = (rng.uniform(-1, 1, size=(m, n, n)) + 0j) / n
        words = kernels.word_block(m, k, 0, m**k)
        mask = np.zeros(len(words), dtype=bool)
        mask[::7] = True

        run(stack[:, :2, :2], words[:2], mask[:2], True)  # compile outside the timing
        ref = run(stack, words, mask, False)
        got = run(stack, words, mask, True)
        assert ref[3] == got[3], "multiplication counts differ"
        assert np.allclose(ref[0], got[0], rtol=1e-10, atol=1e-14), "norms differ"
        assert np.allclose(ref[1][mask], got[1][mask], rtol=1e-8, atol=1e-12), "radii differ"

        t_np = best_time(lambda: run(stack, words, mask, False), args.repeat)
        t_nb = best_time(lambda: run(stack, words, mask, True), args.repeat)
        print(f"{n:>3} {m:>3} {k:>3} {len(words):>9} {ref[3]:>9} {t_np:>9.4f} {t_nb:>9.4f} {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
