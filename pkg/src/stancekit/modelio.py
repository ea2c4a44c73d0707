"""Versioned JSON serialization shared by the text and conversation models."""

from __future__ import annotations

import json

import numpy as np

from stancekit.convclf import ConversationModel
from stancekit.textclf import LinearTextModel, TrainConfig, Vocabulary

FORMAT_VERSION = 1


def _vocab_to_dict(vocab: Vocabulary) -> dict:
    terms = [None] * vocab.size
    for term, j in vocab.index.items():
        terms[j] = term
    return {"terms": terms, "doc_freq": vocab.doc_freq.tolist(),
            "n_docs": vocab.n_docs, "bigrams": vocab.bigrams}


def _vocab_from_dict(d: dict) -> Vocabulary:
    index = {t: j for j, t in enumerate(d["terms"])}
    return Vocabulary(index=index, doc_freq=np.array(d["doc_freq"], dtype=np.int64),
                      n_docs=int(d["n_docs"]), bigrams=bool(d["bigrams"]))


def _config_to_dict(c: TrainConfig) -> dict:
    return {"learning_rate": c.learning_rate, "epochs": c.epochs, "l2": c.l2}


def save_model(model, path) -> None:
    if isinstance(model, ConversationModel):
        payload = {"format_version": FORMAT_VERSION, "model_type": "conversation",
                   "mode": model.mode, "weights": model.weights.tolist(),
                   "bias": model.bias, "config": _config_to_dict(model.config),
                   "vocab": _vocab_to_dict(model.vocab),
                   "training_size": model.training_size,
                   "config_hash": model.config_hash}
    elif isinstance(model, LinearTextModel):
        if model.vocab is None:
            raise ValueError("text model needs a bound vocabulary to serialize")
        payload = {"format_version": FORMAT_VERSION, "model_type": "text",
                   "weights": model.weights.tolist(), "bias": model.bias,
                   "config": _config_to_dict(model.config),
                   "vocab": _vocab_to_dict(model.vocab)}
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version}")
    config = TrainConfig(**payload["config"])
    vocab = _vocab_from_dict(payload["vocab"])
    weights = np.array(payload["weights"], dtype=np.float64)
    if payload["model_type"] == "conversation":
        return ConversationModel(weights=weights, bias=float(payload["bias"]),
                                 vocab=vocab, mode=payload["mode"], config=config,
                                 training_size=int(payload.get("training_size", 0)),
                                 config_hash=payload.get("config_hash", ""))
    if payload["model_type"] == "text":
        return LinearTextModel(weights=weights, bias=float(payload["bias"]),
                               config=config, vocab=vocab)
    raise ValueError(f"unknown model_type: {payload['model_type']!r}")
