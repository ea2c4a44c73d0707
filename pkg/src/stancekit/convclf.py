"""Conversation stance classifier over (source, reply) text pairs.

The linear implementation featurizes a pair as [reply TF-IDF | source
TF-IDF | elementwise product], each block L2-normalized; reply-only mode
keeps just the first block and reproduces the single-text baseline. The
featurize/train/predict surface is the pluggable interface richer models
can implement.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from stancekit.textclf import (
    SingleClassError,
    SparseVec,
    TrainConfig,
    Vocabulary,
    decision_score,
    fit_linear_csr,
    fit_vocabulary,
    stack_rows,
    transform,
)

MODES = ("pair", "reply_only")

FAVOR = 1
OPPOSE = -1


def _l2(indices: np.ndarray, values: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(values ** 2))
    return values / norm if norm > 0 else values


def featurize_pair(source_text: str, reply_text: str, vocab: Vocabulary,
                   mode: str = "pair") -> SparseVec:
    """Feature row for one pair; blocks are individually L2-normalized."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    v = vocab.size
    reply = transform(reply_text, vocab)
    if mode == "reply_only":
        return reply
    source = transform(source_text, vocab)
    common, r_pos, s_pos = np.intersect1d(reply.indices, source.indices,
                                          assume_unique=True, return_indices=True)
    prod_vals = _l2(common, reply.values[r_pos] * source.values[s_pos])
    indices = np.concatenate([reply.indices, source.indices + v, common + 2 * v])
    values = np.concatenate([reply.values, source.values, prod_vals])
    return SparseVec(indices.astype(np.int64), values.astype(np.float64), 3 * v)


@dataclass
class PairFeaturizer:
    vocab: Vocabulary
    mode: str = "pair"

    def featurize(self, source_text: str, reply_text: str) -> SparseVec:
        return featurize_pair(source_text, reply_text, self.vocab, self.mode)

    @property
    def dim(self) -> int:
        return self.vocab.size if self.mode == "reply_only" else 3 * self.vocab.size


@dataclass
class ConversationModel:
    weights: np.ndarray
    bias: float
    vocab: Vocabulary
    mode: str
    config: TrainConfig
    training_size: int
    config_hash: str


def _config_hash(mode: str, config: TrainConfig, min_df: int, bigrams: bool) -> str:
    payload = json.dumps({"mode": mode, "lr": config.learning_rate,
                          "epochs": config.epochs, "l2": config.l2,
                          "min_df": min_df, "bigrams": bigrams}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def train_conversation_model(pairs, mode: str = "pair",
                             config: TrainConfig | None = None,
                             min_df: int = 2,
                             bigrams: bool = True) -> ConversationModel:
    """Train the linear pair classifier on labeled pairs.

    The vocabulary is fit on reply plus source texts in both modes, so
    reply-only features are a prefix subset of pair features. Class
    imbalance is countered with inverse-frequency example weights.
    """
    config = config or TrainConfig()
    pairs = [p for p in pairs if p.label in (FAVOR, OPPOSE)]
    if not pairs:
        raise ValueError("no labeled pairs to train on")
    label_counts = Counter(p.label for p in pairs)
    if len(label_counts) < 2:
        raise SingleClassError(
            f"training pairs cover a single class: {dict(label_counts)}")
    docs = [p.reply_text for p in pairs] + [p.source_text for p in pairs]
    vocab = fit_vocabulary(docs, min_df=min_df, bigrams=bigrams)
    featurizer = PairFeaturizer(vocab, mode)
    x = stack_rows([featurizer.featurize(p.source_text, p.reply_text) for p in pairs],
                   dim=featurizer.dim)
    y = np.array([p.label for p in pairs], dtype=np.float64)
    total = len(pairs)
    weights = np.array([total / (2.0 * label_counts[p.label]) for p in pairs])
    w, b = fit_linear_csr(x, y, config, weights)
    return ConversationModel(weights=w, bias=b, vocab=vocab, mode=mode,
                             config=config, training_size=total,
                             config_hash=_config_hash(mode, config, min_df, bigrams))


def predict_conversation(model: ConversationModel, source_text: str,
                         reply_text: str) -> tuple[int, float]:
    """(label, score): label is Favor (+1) on a positive score, else Oppose."""
    vec = featurize_pair(source_text, reply_text, model.vocab, model.mode)
    score = decision_score(model.weights, model.bias, vec)
    return (FAVOR if score > 0 else OPPOSE), score
