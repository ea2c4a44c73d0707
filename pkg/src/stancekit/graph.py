"""Sparse weighted user-by-entity matrices (hashtags, retweets, mentions, URLs)."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from stancekit.corpus import TweetCorpus, extract_domains, extract_mentions

HASHTAG = "hashtag"
RETWEET = "retweet"
MENTION = "mention"
URL = "url"


@dataclass(frozen=True, eq=False)
class BipartiteMatrix:
    """Users on rows, entities on columns, non-negative sparse weights.

    Columns carry a kind tag so matrices of different entity types can be
    unioned without id collisions. Storage is CSR; memory scales with the
    number of non-zeros.
    """

    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    col_kinds: tuple[str, ...]
    matrix: sparse.csr_matrix

    def __post_init__(self):
        n_rows, n_cols = self.matrix.shape
        if n_rows != len(self.row_ids) or n_cols != len(self.col_ids):
            raise ValueError("matrix shape does not match id lists")
        if len(self.col_kinds) != len(self.col_ids):
            raise ValueError("col_kinds length mismatch")

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    @property
    def n_cols(self) -> int:
        return len(self.col_ids)

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    @cached_property
    def row_index(self) -> dict[str, int]:
        return {r: i for i, r in enumerate(self.row_ids)}

    @cached_property
    def col_index(self) -> dict[tuple[str, str], int]:
        return {(k, c): i for i, (k, c) in enumerate(zip(self.col_kinds, self.col_ids))}

    @cached_property
    def col_keys(self) -> tuple[str, ...]:
        return tuple(f"{k}:{c}" for k, c in zip(self.col_kinds, self.col_ids))

    def total_weight(self) -> float:
        return float(self.matrix.sum())

    def weight(self, user_id: str, kind: str, entity_id: str) -> float:
        i = self.row_index.get(user_id)
        j = self.col_index.get((kind, entity_id))
        if i is None or j is None:
            return 0.0
        return float(self.matrix[i, j])

    def to_triplets(self, path) -> None:
        """Write (row_id, col_id, weight) rows; col_id is "kind:id"."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        keys = self.col_keys
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_id", "col_id", "weight"])
            for k in order:
                writer.writerow([self.row_ids[coo.row[k]], keys[coo.col[k]],
                                 repr(float(coo.data[k]))])

    def to_meta(self, path) -> None:
        """Sidecar with full row/column universes (preserves empty rows/cols)."""
        meta = {"rows": list(self.row_ids),
                "cols": [[k, c] for k, c in zip(self.col_kinds, self.col_ids)]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh)

    @classmethod
    def from_triplets(cls, path, meta_path=None) -> "BipartiteMatrix":
        """Rebuild from a triplet file; without the meta sidecar, rows and
        columns are the ids present in the file, sorted."""
        rows_seen: list[str] = []
        entries: list[tuple[str, str, str, float]] = []
        with open(path, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                kind, _, cid = rec["col_id"].partition(":")
                entries.append((rec["row_id"], kind, cid, float(rec["weight"])))
                rows_seen.append(rec["row_id"])
        if meta_path is not None:
            with open(meta_path, encoding="utf-8") as fh:
                meta = json.load(fh)
            row_ids = tuple(meta["rows"])
            cols = [tuple(c) for c in meta["cols"]]
        else:
            row_ids = tuple(sorted(set(rows_seen)))
            cols = sorted({(k, c) for _, k, c, _ in entries})
        col_ids = tuple(c for _, c in cols)
        col_kinds = tuple(k for k, _ in cols)
        row_pos = {r: i for i, r in enumerate(row_ids)}
        col_pos = {kc: i for i, kc in enumerate(cols)}
        r = np.array([row_pos[e[0]] for e in entries], dtype=np.int64)
        c = np.array([col_pos[(e[1], e[2])] for e in entries], dtype=np.int64)
        d = np.array([e[3] for e in entries], dtype=np.float64)
        mat = sparse.csr_matrix((d, (r, c)), shape=(len(row_ids), len(col_ids)))
        mat.sort_indices()
        return cls(row_ids, col_ids, col_kinds, mat)


def _assemble(counts: dict[tuple[str, str], int], cols: list[str],
              kind: str) -> BipartiteMatrix:
    col_pos = {c: i for i, c in enumerate(cols)}
    triplets = [(u, col_pos[e], w) for (u, e), w in counts.items() if e in col_pos]
    rows = sorted({u for u, _, _ in triplets})
    row_pos = {u: i for i, u in enumerate(rows)}
    r = np.array([row_pos[u] for u, _, _ in triplets], dtype=np.int64)
    c = np.array([j for _, j, _ in triplets], dtype=np.int64)
    d = np.array([w for _, _, w in triplets], dtype=np.float64)
    mat = sparse.csr_matrix((d, (r, c)), shape=(len(rows), len(cols)))
    mat.sort_indices()
    return BipartiteMatrix(tuple(rows), tuple(cols), (kind,) * len(cols), mat)


def _top_entities(totals: Counter, limit: int) -> list[str]:
    # frequency descending, id ascending: deterministic builds
    return [e for e, _ in sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]]


def build_user_hashtag_matrix(corpus: TweetCorpus, k: int,
                              force_include=()) -> BipartiteMatrix:
    """Counts of tweets per (user, hashtag) over the k most-used hashtags.

    ``force_include`` hashtags are appended as columns when they miss the
    top-k cut (they may even be unused, yielding empty columns); they carry
    the seed supervision and must survive selection.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counts: dict[tuple[str, str], int] = {}
    totals: Counter = Counter()
    for tid in corpus.sorted_tweet_ids():
        t = corpus.tweets[tid]
        for tag in set(t.hashtags):
            counts[(t.user_id, tag)] = counts.get((t.user_id, tag), 0) + 1
            totals[tag] += 1
    cols = _top_entities(totals, k)
    in_cols = set(cols)
    cols += [t for t in sorted(set(force_include)) if t not in in_cols]
    return _assemble(counts, cols, HASHTAG)


def build_user_retweet_matrix(corpus: TweetCorpus, p: int) -> BipartiteMatrix:
    """Counts of retweet acts per (user, target tweet) over the p most
    popular retweet targets."""
    if p < 1:
        raise ValueError("p must be >= 1")
    counts: dict[tuple[str, str], int] = {}
    totals: Counter = Counter()
    for tid in corpus.sorted_tweet_ids():
        t = corpus.tweets[tid]
        if t.retweet_of is None:
            continue
        counts[(t.user_id, t.retweet_of)] = counts.get((t.user_id, t.retweet_of), 0) + 1
        totals[t.retweet_of] += 1
    cols = _top_entities(totals, p)
    return _assemble(counts, cols, RETWEET)


def build_user_mention_matrix(corpus: TweetCorpus, top: int) -> BipartiteMatrix:
    """Counts of tweets per (user, mentioned handle), pre-cleaning text."""
    if top < 1:
        raise ValueError("top must be >= 1")
    counts: dict[tuple[str, str], int] = {}
    totals: Counter = Counter()
    for tid in corpus.sorted_tweet_ids():
        t = corpus.tweets[tid]
        for handle in set(extract_mentions(t.text)):
            counts[(t.user_id, handle)] = counts.get((t.user_id, handle), 0) + 1
            totals[handle] += 1
    cols = _top_entities(totals, top)
    return _assemble(counts, cols, MENTION)


def build_user_domain_matrix(corpus: TweetCorpus, top: int) -> BipartiteMatrix:
    """Counts of tweets per (user, shared URL domain)."""
    if top < 1:
        raise ValueError("top must be >= 1")
    counts: dict[tuple[str, str], int] = {}
    totals: Counter = Counter()
    for tid in corpus.sorted_tweet_ids():
        t = corpus.tweets[tid]
        for dom in set(extract_domains(t.text)):
            counts[(t.user_id, dom)] = counts.get((t.user_id, dom), 0) + 1
            totals[dom] += 1
    cols = _top_entities(totals, top)
    return _assemble(counts, cols, URL)


def union_matrices(*matrices: BipartiteMatrix) -> BipartiteMatrix:
    """Column-wise concatenation over the union of the row universes.

    Rows missing from one operand are zero there. Kind tags keep column
    keys distinct; a duplicated (kind, id) column is an error.
    """
    if not matrices:
        raise ValueError("need at least one matrix")
    rows = sorted(set().union(*(m.row_ids for m in matrices)))
    row_pos = {u: i for i, u in enumerate(rows)}
    col_ids: list[str] = []
    col_kinds: list[str] = []
    seen: set[tuple[str, str]] = set()
    for m in matrices:
        for kind, cid in zip(m.col_kinds, m.col_ids):
            if (kind, cid) in seen:
                raise ValueError(f"duplicate column {kind}:{cid} in union")
            seen.add((kind, cid))
        col_ids.extend(m.col_ids)
        col_kinds.extend(m.col_kinds)
    r_parts, c_parts, d_parts = [], [], []
    offset = 0
    for m in matrices:
        coo = m.matrix.tocoo()
        local_map = np.array([row_pos[u] for u in m.row_ids], dtype=np.int64)
        if coo.nnz:
            r_parts.append(local_map[coo.row])
            c_parts.append(coo.col.astype(np.int64) + offset)
            d_parts.append(coo.data.astype(np.float64))
        offset += m.n_cols
    if r_parts:
        r = np.concatenate(r_parts)
        c = np.concatenate(c_parts)
        d = np.concatenate(d_parts)
    else:
        r = np.empty(0, dtype=np.int64)
        c = np.empty(0, dtype=np.int64)
        d = np.empty(0, dtype=np.float64)
    mat = sparse.csr_matrix((d, (r, c)), shape=(len(rows), offset))
    mat.sort_indices()
    return BipartiteMatrix(tuple(rows), tuple(col_ids), tuple(col_kinds), mat)


def row_normalize(m: BipartiteMatrix) -> BipartiteMatrix:
    """Scale each non-empty row to sum 1; empty rows stay empty."""
    mat = m.matrix.copy()
    sums = np.asarray(mat.sum(axis=1)).ravel()
    row_of = np.repeat(np.arange(mat.shape[0]), np.diff(mat.indptr))
    if mat.nnz:
        mat.data = mat.data / sums[row_of]
    return BipartiteMatrix(m.row_ids, m.col_ids, m.col_kinds, mat)


def column_sums(m: BipartiteMatrix) -> np.ndarray:
    return np.asarray(m.matrix.sum(axis=0)).ravel()
