#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy/scipy fallback.

The two hot loops are the signed propagation pass (one fused CSR sweep vs
three scipy matvecs) and the linear-model gradient-descent fit. Run:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --rows 500000 --cols 2000 --epochs 50
"""

import argparse
import time

import numpy as np
from scipy import sparse

from stancekit._kernels import pykernels

try:
    from stancekit._kernels import ckernels
except ImportError:
    ckernels = None


def random_csr(rng, n_rows, n_cols, nnz_per_row):
    nnz = n_rows * nnz_per_row
    rows = np.repeat(np.arange(n_rows), nnz_per_row)
    cols = rng.integers(0, n_cols, nnz)
    data = rng.integers(1, 6, nnz).astype(np.float64)
    mat = sparse.csr_matrix((data, (rows, cols)), shape=(n_rows, n_cols))
    mat.sum_duplicates()
    mat.sort_indices()
    return (np.asarray(mat.indptr, np.int64), np.asarray(mat.indices, np.int64),
            np.asarray(mat.data, np.float64), mat.nnz)


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--cols", type=int, default=1250)
    parser.add_argument("--nnz-per-row", type=int, default=20)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    indptr, indices, data, nnz = random_csr(rng, args.rows, args.cols,
                                            args.nnz_per_row)
    src = rng.choice([-1, 0, 1], args.cols).astype(np.int8)
    y = rng.choice([-1.0, 1.0], args.rows)
    sw = np.ones(args.rows)

    print(f"matrix: {args.rows} x {args.cols}, nnz = {nnz}")
    print(f"{'kernel':<22}{'backend':<10}{'best (s)':>10}")

    def prop_py():
        return pykernels.signed_row_weights(indptr, indices, data, src, args.rows)

    t_py, ref = timeit(prop_py, args.repeats)
    print(f"{'signed_row_weights':<22}{'numpy':<10}{t_py:>10.4f}")
    if ckernels is not None:
        def prop_c():
            return ckernels.signed_row_weights(indptr, indices, data, src,
                                               args.rows)

        t_c, got = timeit(prop_c, args.repeats)
        for a, b in zip(ref, got):
            np.testing.assert_allclose(a, b, atol=1e-9)
        print(f"{'signed_row_weights':<22}{'cython':<10}{t_c:>10.4f}"
              f"   ({t_py / t_c:.2f}x)")

    def fit_py():
        return pykernels.logreg_fit(indptr, indices, data, y, sw, 1e-4, 0.5,
                                    args.epochs, args.cols)

    t_py, (w_ref, b_ref) = timeit(fit_py, max(1, args.repeats // 2))
    print(f"{'logreg_fit':<22}{'numpy':<10}{t_py:>10.4f}")
    if ckernels is not None:
        def fit_c():
            return ckernels.logreg_fit(indptr, indices, data, y, sw, 1e-4, 0.5,
                                       args.epochs, args.cols)

        t_c, (w_c, b_c) = timeit(fit_c, max(1, args.repeats // 2))
        np.testing.assert_allclose(w_ref, w_c, atol=1e-6)
        print(f"{'logreg_fit':<22}{'cython':<10}{t_c:>10.4f}"
              f"   ({t_py / t_c:.2f}x)")
    if ckernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
