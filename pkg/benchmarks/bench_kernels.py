"""Timing comparison of the two subset-enumeration backends.

The compiled loop kernel and the chunked-numpy kernel produce identical
(mask, value) pairs; this script checks that agreement on dyadic inputs and
reports per-call times across candidate-set sizes.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 10,14,18,20] [--repeats 30]
"""

import argparse
import sys
import time

import numpy as np

from artifact import kernels


def dyadic(rng, *shape):
    # Multiples of 1/16 keep every partial sum exact in both backends.
    return np.round(rng.uniform(-3.0, 3.0, shape) * 16.0) / 16.0


def build_case(rng, m, n_triples):
    lin = dyadic(rng, m)
    quad = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            v = float(dyadic(rng)) if rng.random() < 0.6 else 0.0
            quad[i, j] = v
            quad[j, i] = v
    sizes = np.round(rng.uniform(0.3, 1.2, m) * 16.0) / 16.0
    cap = float(np.round(rng.uniform(1.5, 4.0) * 16.0) / 16.0)
    triples = []
    for _ in range(n_triples):
        members = tuple(sorted(rng.choice(m, size=3, replace=False)))
        triples.append((members, float(np.abs(dyadic(rng)))))
    return dict(lin=lin, quad=quad, anchor=0, sizes=sizes, cap=cap, triples=triples)


def time_backend(case, backend, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = kernels.enumerate_min(
            case["lin"],
            case["quad"],
            case["anchor"],
            sizes=case["sizes"],
            cap=case["cap"],
            triples=case["triples"],
            backend=backend,
        )
        best = min(best, time.perf_counter() - t0)
    return result, best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="10,14,18,20,22")
    parser.add_argument("--repeats", type=int, default=30)
    parser.add_argument("--triples", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    loop_label = "loop/numba" if kernels.ACTIVE_BACKEND == "numba" else "loop/python"
    print(f"active backend: {kernels.ACTIVE_BACKEND}")
    print(f"{'m':>4}  {loop_label:>12}  {'numpy':>12}  {'ratio':>7}")

    rng = np.random.default_rng(args.seed)
    checksum = 0.0
    for m in sizes:
        case = build_case(rng, m, args.triples)
        # First call pays any compilation cost; time afterwards.
        kernels.enumerate_min(
            case["lin"], case["quad"], 0, sizes=case["sizes"], cap=case["cap"],
            triples=case["triples"], backend="loop",
        )
        (mask_a, val_a), t_loop = time_backend(case, "loop", args.repeats)
        (mask_b, val_b), t_np = time_backend(case, "numpy", args.repeats)
        if mask_a != mask_b or val_a != val_b:
            print(
                f"backend mismatch at m={m}: loop ({mask_a}, {val_a}) vs "
                f"numpy ({mask_b}, {val_b})",
                file=sys.stderr,
            )
            return 1
        checksum += mask_a + val_a
        ratio = t_np / t_loop if t_loop > 0 else float("inf")
        print(f"{m:>4}  {t_loop * 1e3:>10.3f}ms  {t_np * 1e3:>10.3f}ms  {ratio:>6.1f}x")
    print(f"backends agree on all sizes (checksum {checksum:.4f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
