"""Seed labeling and two-step threshold propagation on the bipartite network.

Stance flows user -> entity -> user. Each hop sums the normalized edge
weights pointing at +1 and -1 endpoints and assigns a label only when the
net signed mass strictly clears the hop threshold (a linear threshold
rule); everything else stays 0. A node's confidence is the fraction of its
total edge weight that agrees with its assigned label, 0 for unlabeled
nodes. Normalization (columns for the user->entity hop, rows for the
entity->user hop) makes a fixed threshold in (0, 1) meaningful for both
one-tweet and thousand-tweet users.
"""

from __future__ import annotations

import csv
from collections.abc import Mapping

import numpy as np

from stancekit import _kernels as kernels
from stancekit.graph import HASHTAG, BipartiteMatrix

SeedHashtagSet = dict[str, int]


class StanceVector:
    """Stance in {+1, 0, -1} plus confidence in [0, 1] per node id.

    Ids absent from the vector read as stance 0, confidence 0.
    """

    __slots__ = ("ids", "stance", "confidence", "_index")

    def __init__(self, ids, stance, confidence):
        self.ids = tuple(ids)
        self.stance = np.ascontiguousarray(stance, dtype=np.int8)
        self.confidence = np.ascontiguousarray(confidence, dtype=np.float64)
        if len(self.ids) != self.stance.shape[0] or len(self.ids) != self.confidence.shape[0]:
            raise ValueError("ids/stance/confidence length mismatch")
        self._index: dict[str, int] | None = None

    @classmethod
    def from_mapping(cls, values: Mapping[str, int],
                     confidence: Mapping[str, float] | None = None) -> "StanceVector":
        ids = sorted(values)
        st = [int(values[i]) for i in ids]
        if confidence is None:
            cf = [1.0 if v != 0 else 0.0 for v in st]
        else:
            cf = [float(confidence.get(i, 0.0)) for i in ids]
        return cls(ids, st, cf)

    @property
    def index(self) -> dict[str, int]:
        if self._index is None:
            self._index = {i: k for k, i in enumerate(self.ids)}
        return self._index

    def __len__(self) -> int:
        return len(self.ids)

    def value(self, node_id: str) -> int:
        k = self.index.get(node_id)
        return 0 if k is None else int(self.stance[k])

    def conf(self, node_id: str) -> float:
        k = self.index.get(node_id)
        return 0.0 if k is None else float(self.confidence[k])

    def align(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """Stance and confidence arrays over the given id order."""
        idx = self.index
        st = np.zeros(len(ids), dtype=np.int8)
        cf = np.zeros(len(ids), dtype=np.float64)
        for k, node_id in enumerate(ids):
            j = idx.get(node_id)
            if j is not None:
                st[k] = self.stance[j]
                cf[k] = self.confidence[j]
        return st, cf

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.stance))

    def items(self):
        for k, node_id in enumerate(self.ids):
            yield node_id, int(self.stance[k]), float(self.confidence[k])

    def values_dict(self) -> dict[str, int]:
        return {i: int(s) for i, s in zip(self.ids, self.stance)}

    def validate(self) -> None:
        """Check the type invariants; used by tests."""
        if not np.isin(self.stance, (-1, 0, 1)).all():
            raise AssertionError("stance outside {-1, 0, +1}")
        if ((self.confidence < 0) | (self.confidence > 1)).any():
            raise AssertionError("confidence outside [0, 1]")
        zero = self.stance == 0
        if (self.confidence[zero] != 0).any() or (self.confidence[~zero] == 0).any():
            raise AssertionError("confidence == 0 must hold iff stance == 0")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "stance", "confidence"])
            for node_id in sorted(self.ids):
                k = self.index[node_id]
                writer.writerow([node_id, int(self.stance[k]),
                                 repr(float(self.confidence[k]))])

    @classmethod
    def from_csv(cls, path) -> "StanceVector":
        ids, st, cf = [], [], []
        with open(path, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                ids.append(rec["id"])
                st.append(int(rec["stance"]))
                cf.append(float(rec["confidence"]))
        return cls(ids, st, cf)


def normalize_seed_set(seeds: Mapping[str, int]) -> SeedHashtagSet:
    """Lowercase, strip '#', and check labels are +1/-1. Empty set is an error."""
    if not seeds:
        raise ValueError("seed hashtag set is empty")
    out: SeedHashtagSet = {}
    for tag, label in seeds.items():
        tag = str(tag).strip().lstrip("#").lower()
        label = int(label)
        if label not in (-1, 1):
            raise ValueError(f"seed label for #{tag} must be +1 or -1, got {label}")
        if not tag:
            raise ValueError("empty seed hashtag")
        out[tag] = label
    return out


def _check_theta(theta: float, name: str) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {theta}")
    return theta


def _ltm(indptr, indices, data, src_stance, theta, n_rows):
    """Threshold pass: stance from net signed mass, agreement-ratio confidence."""
    pos, neg, tot = kernels.signed_row_weights(indptr, indices, data, src_stance, n_rows)
    net = pos - neg
    st = np.zeros(n_rows, dtype=np.int8)
    st[net > theta] = 1
    st[net < -theta] = -1
    agree = np.where(st == 1, pos, neg)
    conf = agree / np.where(tot > 0, tot, 1.0)
    conf[st == 0] = 0.0
    return st, conf


def seed_user_stance(h: BipartiteMatrix, seeds: Mapping[str, int]) -> StanceVector:
    """Label users from their use of the seed hashtags.

    Raw score per user is the signed sum of their seed-column weights: sign
    gives the stance, and |pro - anti| / (pro + anti) over the seed columns
    gives the confidence (0 when the score is 0).
    """
    seeds = normalize_seed_set(seeds)
    col_sign = np.zeros(h.n_cols, dtype=np.int8)
    missing = []
    for tag, label in seeds.items():
        j = h.col_index.get((HASHTAG, tag))
        if j is None:
            missing.append(tag)
        else:
            col_sign[j] = label
    if missing:
        raise KeyError(f"seed hashtags missing from matrix columns: {sorted(missing)}")
    indptr, indices, data = kernels.csr_kernel_args(h.matrix)
    pos, neg, _ = kernels.signed_row_weights(indptr, indices, data, col_sign, h.n_rows)
    score = pos - neg
    st = np.sign(score).astype(np.int8)
    denom = pos + neg
    conf = np.abs(score) / np.where(denom > 0, denom, 1.0)
    conf[st == 0] = 0.0
    return StanceVector(h.row_ids, st, conf)


def propagate_to_entities(i: BipartiteMatrix, users: StanceVector,
                          theta_h: float) -> StanceVector:
    """User -> entity hop over column-normalized weights."""
    theta_h = _check_theta(theta_h, "theta_h")
    src, _ = users.align(i.row_ids)
    csc = i.matrix.tocsc()
    sums = np.asarray(i.matrix.sum(axis=0)).ravel()
    col_of = np.repeat(np.arange(i.n_cols), np.diff(csc.indptr))
    data = csc.data.astype(np.float64)
    if data.size:
        data = data / sums[col_of]
    # CSC arrays of the matrix are CSR arrays of its transpose
    st, conf = _ltm(np.asarray(csc.indptr, dtype=np.int64),
                    np.asarray(csc.indices, dtype=np.int64),
                    data, src, theta_h, i.n_cols)
    return StanceVector(i.col_keys, st, conf)


def propagate_to_users(i: BipartiteMatrix, entities: StanceVector,
                       theta_u: float) -> StanceVector:
    """Entity -> user hop over row-normalized weights."""
    theta_u = _check_theta(theta_u, "theta_u")
    src, _ = entities.align(i.col_keys)
    mat = i.matrix
    sums = np.asarray(mat.sum(axis=1)).ravel()
    row_of = np.repeat(np.arange(i.n_rows), np.diff(mat.indptr))
    data = mat.data.astype(np.float64)
    if data.size:
        data = data / sums[row_of]
    st, conf = _ltm(np.asarray(mat.indptr, dtype=np.int64),
                    np.asarray(mat.indices, dtype=np.int64),
                    data, src, theta_u, i.n_rows)
    return StanceVector(i.row_ids, st, conf)


def network_confidence(i: BipartiteMatrix, entities: StanceVector,
                       users: StanceVector) -> dict[str, float]:
    """Agreement-ratio confidence for given user stances.

    For a user with stance s != 0: the weight of their edges into entities
    labeled s, divided by their total edge weight; 0 for stance 0.
    """
    src, _ = entities.align(i.col_keys)
    indptr, indices, data = kernels.csr_kernel_args(i.matrix)
    pos, neg, tot = kernels.signed_row_weights(indptr, indices, data, src, i.n_rows)
    ust, _ = users.align(i.row_ids)
    agree = np.where(ust == 1, pos, neg)
    conf = agree / np.where(tot > 0, tot, 1.0)
    conf[ust == 0] = 0.0
    return {u: float(c) for u, c in zip(i.row_ids, conf)}
