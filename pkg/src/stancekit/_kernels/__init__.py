"""Kernel backend selection.

The compiled extension is preferred when it was built; otherwise the
numpy/scipy fallback is used. Set STANCEKIT_PURE_PYTHON=1 to force the
fallback (used by the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("STANCEKIT_PURE_PYTHON", "") not in ("", "0"):
    from stancekit._kernels import pykernels as _backend
else:
    try:
        from stancekit._kernels import ckernels as _backend  # type: ignore[no-redef]
    except ImportError:
        from stancekit._kernels import pykernels as _backend

BACKEND = _backend.NAME
signed_row_weights = _backend.signed_row_weights
logreg_fit = _backend.logreg_fit


def csr_kernel_args(mat):
    """CSR pieces of a scipy matrix coerced to the dtypes the kernels take."""
    return (
        np.asarray(mat.indptr, dtype=np.int64),
        np.asarray(mat.indices, dtype=np.int64),
        np.asarray(mat.data, dtype=np.float64),
    )
