"""Benchmark the compiled kernels against the NumPy fallback.

Shapes mimic a full-scale training loop: batches of similarity logits
against a large memory bank, per-round neighbor discovery, and the
per-instance EMA stream.

Usage: python benchmarks/bench_kernels.py [--bank 20000] [--batch 128] [--reps 5]
"""

import argparse
import time

import numpy as np

from superand._backend import pykernels

try:
    from superand._backend import ckernels
except ImportError:
    ckernels = None


def best_of(fn, reps):
    timings = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        timings.append(time.perf_counter() - start)
    return min(timings)


def make_cases(bank_size, batch, rng):
    logits = rng.normal(scale=0.5, size=(batch, bank_size))
    probs = pykernels.softmax_rows(logits, 0.07)
    sims = rng.normal(size=(512, bank_size))
    exclude = rng.integers(0, bank_size, size=512).astype(np.int64)
    rows = rng.standard_normal((bank_size, 128))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    updates = rng.standard_normal((2000, 128))
    updates /= np.linalg.norm(updates, axis=1, keepdims=True)
    indices = rng.integers(0, bank_size, size=2000)

    def ema_stream(backend, bank_rows):
        def run():
            for i in range(2000):
                backend.ema_update_row(bank_rows, int(indices[i]), updates[i], 0.5)

        return run

    return [
        ("softmax_rows", lambda b: (lambda: b.softmax_rows(logits, 0.07))),
        ("log_softmax_rows", lambda b: (lambda: b.log_softmax_rows(logits, 0.07))),
        ("entropy_rows", lambda b: (lambda: b.entropy_rows(probs))),
        ("topk_desc_rows k=10", lambda b: (lambda: b.topk_desc_rows(sims, 10, exclude))),
        ("ema_update_row x2000", lambda b: ema_stream(b, rows.copy())),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bank", type=int, default=20000, help="memory bank rows")
    parser.add_argument("--batch", type=int, default=128, help="softmax batch rows")
    parser.add_argument("--reps", type=int, default=5, help="repetitions, best kept")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = make_cases(args.bank, args.batch, rng)

    print(f"bank={args.bank} batch={args.batch} reps={args.reps}")
    header = f"{'kernel':<24}{'numpy (ms)':>12}{'cython (ms)':>13}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, build in cases:
        py_ms = best_of(build(pykernels), args.reps) * 1e3
        if ckernels is None:
            print(f"{name:<24}{py_ms:>12.2f}{'n/a':>13}{'n/a':>9}")
            continue
        cy_ms = best_of(build(ckernels), args.reps) * 1e3
        print(f"{name:<24}{py_ms:>12.2f}{cy_ms:>13.2f}{py_ms / cy_ms:>8.2f}x")
    if ckernels is None:
        print("\ncompiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
