"""TF-IDF features, a linear margin classifier, and per-user aggregation."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from stancekit import _kernels as kernels

# keep "#tag" as its own term: hashtags are strong stance signals
_TOKEN_RE = re.compile(r"#\w+|\w+")


class SingleClassError(ValueError):
    """Training data covers only one label."""


def tokenize(text: str) -> list[str]:
    """Lowercase tokens: alphanumeric runs, with hashtags kept intact."""
    return _TOKEN_RE.findall(text.lower())


def _terms(tokens: list[str], bigrams: bool) -> list[str]:
    if not bigrams:
        return list(tokens)
    return list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


def _term_excluded(term: str, exclude_tokens) -> bool:
    return any(tok in exclude_tokens for tok in term.split(" "))


@dataclass
class Vocabulary:
    """Term-to-column mapping with document frequencies."""

    index: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int
    bigrams: bool = True
    idf: np.ndarray = field(init=False)

    def __post_init__(self):
        # idf(t) = ln((1 + N) / (1 + df(t))) + 1
        self.idf = np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0

    @property
    def size(self) -> int:
        return len(self.index)

    def idf_of(self, term: str) -> float:
        j = self.index.get(term)
        return 0.0 if j is None else float(self.idf[j])


@dataclass(slots=True)
class SparseVec:
    """One L2-normalized (or zero) feature row: ascending indices + values."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2)))


def fit_vocabulary(documents, min_df: int = 2, bigrams: bool = True,
                   exclude_tokens=frozenset()) -> Vocabulary:
    """Build the term index from cleaned documents (strings or token lists)."""
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    docs = list(documents)
    if not docs:
        raise ValueError("cannot fit a vocabulary on zero documents")
    df: Counter = Counter()
    for doc in docs:
        tokens = tokenize(doc) if isinstance(doc, str) else list(doc)
        df.update(set(_terms(tokens, bigrams)))
    terms = sorted(t for t, c in df.items()
                   if c >= min_df and not _term_excluded(t, exclude_tokens))
    index = {t: j for j, t in enumerate(terms)}
    doc_freq = np.array([df[t] for t in terms], dtype=np.int64)
    return Vocabulary(index=index, doc_freq=doc_freq, n_docs=len(docs),
                      bigrams=bigrams)


def transform(doc, vocab: Vocabulary) -> SparseVec:
    """Count * idf per in-vocabulary term, L2-normalized; OOV terms dropped."""
    tokens = tokenize(doc) if isinstance(doc, str) else list(doc)
    counts: Counter = Counter()
    for term in _terms(tokens, vocab.bigrams):
        j = vocab.index.get(term)
        if j is not None:
            counts[j] += 1
    if not counts:
        return SparseVec(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64),
                         vocab.size)
    idx = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[j] for j in idx], dtype=np.float64) * vocab.idf[idx]
    norm = np.sqrt(np.sum(vals ** 2))
    if norm > 0:
        vals = vals / norm
    return SparseVec(idx, vals, vocab.size)


def stack_rows(vecs: list[SparseVec], dim: int | None = None) -> sparse.csr_matrix:
    """Stack feature rows into one CSR matrix."""
    if dim is None:
        if not vecs:
            raise ValueError("cannot infer dimension from zero rows")
        dim = vecs[0].dim
    indptr = np.zeros(len(vecs) + 1, dtype=np.int64)
    for k, v in enumerate(vecs):
        indptr[k + 1] = indptr[k] + len(v.indices)
    if vecs:
        indices = np.concatenate([v.indices for v in vecs])
        data = np.concatenate([v.values for v in vecs])
    else:
        indices = np.empty(0, dtype=np.int64)
        data = np.empty(0, dtype=np.float64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vecs), dim))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    epochs: int = 300
    l2: float = 1e-4


@dataclass
class LinearTextModel:
    """Linear decision function over a vocabulary; sign(score) is the label."""

    weights: np.ndarray
    bias: float
    config: TrainConfig
    vocab: Vocabulary | None = None


def fit_linear_csr(x: sparse.csr_matrix, y: np.ndarray, config: TrainConfig,
                   sample_weights: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Fit on a prebuilt CSR design matrix; labels in {-1, +1}."""
    y = np.asarray(y, dtype=np.float64)
    classes = set(np.unique(y).tolist())
    if not classes <= {-1.0, 1.0}:
        raise ValueError(f"labels must be +1/-1, got {sorted(classes)}")
    if len(classes) < 2:
        raise SingleClassError("training data covers a single class")
    if sample_weights is None:
        sample_weights = np.ones(y.shape[0], dtype=np.float64)
    sample_weights = np.asarray(sample_weights, dtype=np.float64)
    indptr, indices, data = kernels.csr_kernel_args(x)
    w, b = kernels.logreg_fit(indptr, indices, data, y, sample_weights,
                              float(config.l2), float(config.learning_rate),
                              int(config.epochs), x.shape[1])
    return w, float(b)


def train_linear(examples, config: TrainConfig | None = None,
                 sample_weights=None, vocab: Vocabulary | None = None) -> LinearTextModel:
    """Train the linear classifier on (SparseVec, label) pairs.

    Training is full-batch and deterministic; duplicating the dataset does
    not change the fit. Raises SingleClassError when only one label occurs.
    """
    config = config or TrainConfig()
    examples = list(examples)
    if not examples:
        raise ValueError("no training examples")
    x = stack_rows([v for v, _ in examples])
    y = np.array([lbl for _, lbl in examples], dtype=np.float64)
    sw = None if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    w, b = fit_linear_csr(x, y, config, sw)
    return LinearTextModel(weights=w, bias=b, config=config, vocab=vocab)


def decision_score(weights: np.ndarray, bias: float, vec: SparseVec) -> float:
    if len(vec.indices) == 0:
        return float(bias)
    return float(vec.values @ weights[vec.indices] + bias)


def predict_score(model: LinearTextModel, doc) -> float:
    """Decision score for a document; positive means the pro class."""
    if isinstance(doc, SparseVec):
        vec = doc
    else:
        if model.vocab is None:
            raise ValueError("model has no bound vocabulary; pass a SparseVec")
        vec = transform(doc, model.vocab)
    return decision_score(model.weights, model.bias, vec)


def aggregate_user_stance(model: LinearTextModel, user_docs,
                          theta_t: float) -> tuple[int, float]:
    """Per-user stance from the fractions of pro- and con-scored documents.

    Zero-scored documents count for neither side but stay in the
    denominator. Pro is checked first; the winning fraction is the
    confidence, and users clearing neither threshold get (0, 0).
    """
    theta_t = float(theta_t)
    if not 0.0 <= theta_t <= 1.0:
        raise ValueError("theta_t must be in [0, 1]")
    docs = list(user_docs)
    m = len(docs)
    if m == 0:
        return 0, 0.0
    scores = [predict_score(model, d) for d in docs]
    pro = sum(1 for s in scores if s > 0) / m
    con = sum(1 for s in scores if s < 0) / m
    if pro > theta_t:
        return 1, pro
    if con > theta_t:
        return -1, con
    return 0, 0.0
