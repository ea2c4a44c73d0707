import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import sparse

from stancekit._kernels import pykernels

try:
    from stancekit._kernels import ckernels
except ImportError:
    ckernels = None

needs_compiled = pytest.mark.skipif(ckernels is None,
                                    reason="compiled extension not built")


def random_csr(rng, n_rows, n_cols, density=0.3):
    dense = np.where(rng.random((n_rows, n_cols)) < density,
                     rng.integers(1, 9, (n_rows, n_cols)).astype(float), 0.0)
    mat = sparse.csr_matrix(dense)
    return (np.asarray(mat.indptr, np.int64), np.asarray(mat.indices, np.int64),
            np.asarray(mat.data, np.float64), dense)


@needs_compiled
class TestBackendEquivalence:
    def test_signed_row_weights(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            n, m = int(rng.integers(1, 40)), int(rng.integers(1, 25))
            indptr, indices, data, _ = random_csr(rng, n, m)
            src = rng.choice([-1, 0, 1], m).astype(np.int8)
            a = pykernels.signed_row_weights(indptr, indices, data, src, n)
            b = ckernels.signed_row_weights(indptr, indices, data, src, n)
            for x, y in zip(a, b):
                np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)

    def test_logreg_fit(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            n, m = int(rng.integers(4, 30)), int(rng.integers(2, 15))
            indptr, indices, data, _ = random_csr(rng, n, m, density=0.5)
            y = rng.choice([-1.0, 1.0], n)
            if len(set(y.tolist())) < 2:
                y[0] = -y[0]
            sw = rng.uniform(0.5, 2.0, n)
            wa, ba = pykernels.logreg_fit(indptr, indices, data, y, sw,
                                          1e-3, 0.5, 50, m)
            wb, bb = ckernels.logreg_fit(indptr, indices, data, y, sw,
                                         1e-3, 0.5, 50, m)
            # summation order differs between backends; drift stays tiny
            np.testing.assert_allclose(wa, wb, atol=1e-8)
            assert ba == pytest.approx(bb, abs=1e-8)


class TestFallbackSelection:
    def test_env_var_forces_numpy_backend(self):
        env = dict(os.environ, STANCEKIT_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c",
             "from stancekit import _kernels; print(_kernels.BACKEND)"],
            capture_output=True, text=True, env=env, check=True)
        assert out.stdout.strip() == "numpy"

    def test_default_backend_reported(self):
        from stancekit import _kernels

        assert _kernels.BACKEND in ("cython", "numpy")


class TestKernelSemantics:
    def test_signed_row_weights_against_dense(self):
        rng = np.random.default_rng(41)
        from stancekit import _kernels

        for _ in range(20):
            n, m = int(rng.integers(1, 20)), int(rng.integers(1, 12))
            indptr, indices, data, dense = random_csr(rng, n, m)
            src = rng.choice([-1, 0, 1], m).astype(np.int8)
            pos, neg, tot = _kernels.signed_row_weights(indptr, indices, data,
                                                        src, n)
            np.testing.assert_allclose(pos, dense @ (src == 1), atol=1e-12)
            np.testing.assert_allclose(neg, dense @ (src == -1), atol=1e-12)
            np.testing.assert_allclose(tot, dense.sum(axis=1), atol=1e-12)

    def test_logreg_learns_separable(self):
        from stancekit import _kernels

        x = sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
        y = np.array([1.0, -1.0])
        sw = np.ones(2)
        w, b = _kernels.logreg_fit(np.asarray(x.indptr, np.int64),
                                   np.asarray(x.indices, np.int64),
                                   np.asarray(x.data, np.float64),
                                   y, sw, 1e-4, 1.0, 200, 2)
        assert w[0] + b > 0
        assert w[1] + b < 0
