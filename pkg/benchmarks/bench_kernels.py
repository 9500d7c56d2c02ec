#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback path.

Covers both hot kernels plus one end-to-end dual solve:
  1. symmetric eigendecomposition (cyclic Jacobi vs LAPACK)
  2. exhaustive sign enumeration (compiled walk vs chunked vectorization)
  3. a full sign-integer dual solve built on whichever eigensolver is active

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 8 16 32 64 --enum-bits 18
    python benchmarks/bench_kernels.py --output results.json

The same selection is available process-wide through CANON_DUAL_PURE_NUMPY=1.
"""

import argparse
import json
import time

import numpy as np

from canondual import _kernels
from canondual.integer import QipInstance, qip_dual_solve


def timeit(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eigh(sizes, rng) -> dict:
    out = {}
    for n in sizes:
        A = rng.standard_normal((n, n))
        M = np.ascontiguousarray(0.5 * (A + A.T))
        row = {}
        for backend in ("numba", "numpy"):
            if _kernels.use_backend(backend) != backend:
                continue
            _kernels.jacobi_eigh(M)  # warm the JIT cache
            row[backend] = timeit(lambda: _kernels.jacobi_eigh(M))
        out[n] = row
    return out


def bench_enum(bits, rng) -> dict:
    out = {}
    for n in bits:
        A = rng.standard_normal((n, n))
        Q = np.ascontiguousarray(0.5 * (A + A.T))
        f = rng.standard_normal(n)
        row = {}
        for backend in ("numba", "numpy"):
            if _kernels.use_backend(backend) != backend:
                continue
            _kernels.enum_signs(Q, f)
            row[backend] = timeit(lambda: _kernels.enum_signs(Q, f), repeats=3)
        out[n] = row
    return out


def bench_solve(rng) -> dict:
    n = 12
    A = rng.uniform(-1, 1, (n, n))
    inst = QipInstance(Q=0.5 * (A + A.T), f=3.0 * n * np.ones(n) / np.sqrt(n))
    row = {}
    for backend in ("numba", "numpy"):
        if _kernels.use_backend(backend) != backend:
            continue
        qip_dual_solve(inst)
        row[backend] = timeit(lambda: qip_dual_solve(inst), repeats=3)
    return {n: row}


def render(title, table, unit="s"):
    print(f"\n{title}")
    print(f"{'size':>6} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for n, row in table.items():
        tb = row.get("numba")
        tn = row.get("numpy")
        speed = f"{tn / tb:8.2f}x" if tb and tn else "      n/a"
        fmt = lambda v: f"{v:12.6f}" if v is not None else " " * 12
        print(f"{n:>6} {fmt(tb)} {fmt(tn)} {speed}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", nargs="+", type=int, default=[8, 16, 32, 64, 128])
    parser.add_argument("--enum-bits", nargs="+", type=int, default=[12, 16, 20])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", default=None, help="write raw timings as JSON")
    args = parser.parse_args()

    if not _kernels.NUMBA_AVAILABLE:
        print("numba not importable; only the numpy path will be timed")

    rng = np.random.default_rng(args.seed)
    results = {
        "eigh": bench_eigh(args.sizes, rng),
        "enum_signs": bench_enum(args.enum_bits, rng),
        "qip_solve": bench_solve(rng),
    }
    render("symmetric eigendecomposition (best of 5)", results["eigh"])
    render("sign enumeration over 2^n assignments (best of 3)", results["enum_signs"])
    render("end-to-end certified dual solve, n = 12 (best of 3)", results["qip_solve"])

    if args.output:
        with open(args.output, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
        print(f"\nraw timings written to {args.output}")
    _kernels.use_backend("numba")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
