"""NumPy/SciPy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable
(and the reference the extension is checked against). Semantics must stay
in lockstep with ``ckernels.pyx``.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.special import expit

NAME = "numpy"


def signed_row_weights(indptr, indices, data, src_stance, n_rows):
    """Per-row edge mass landing on +1 sources, -1 sources, and all sources.

    The matrix is given as CSR arrays; ``src_stance`` is an int8 vector over
    the column universe. Returns float64 arrays ``(pos, neg, tot)``.
    """
    n_cols = src_stance.shape[0]
    mat = sparse.csr_matrix((data, indices, indptr), shape=(n_rows, n_cols))
    pos = mat @ (src_stance == 1).astype(np.float64)
    neg = mat @ (src_stance == -1).astype(np.float64)
    tot = mat @ np.ones(n_cols, dtype=np.float64)
    return pos, neg, tot


def logreg_fit(indptr, indices, data, y, sample_weight, l2, lr, epochs, n_features):
    """Full-batch gradient descent on weighted mean logistic loss plus L2.

    Deterministic: no shuffling, zero init, fixed step count. Duplicating the
    training set leaves the mean-loss gradient (and so the fit) unchanged.
    """
    n_rows = y.shape[0]
    X = sparse.csr_matrix((data, indices, indptr), shape=(n_rows, n_features))
    XT = X.T.tocsr()
    total = float(sample_weight.sum())
    w = np.zeros(n_features, dtype=np.float64)
    b = 0.0
    for _ in range(epochs):
        margins = y * (X @ w + b)
        coef = -y * expit(-margins) * sample_weight / total
        w -= lr * (XT @ coef + l2 * w)
        b -= lr * float(coef.sum())
    return w, b
