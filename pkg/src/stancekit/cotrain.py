"""Co-training of the network propagation view and the text classifier view.

Each iteration: (1) propagate the current labeled pool through the
interaction matrix (entities, then users, with pool labels clamped),
(2) retrain the text classifier on the pool's documents and score every
user's documents, (3) promote the most confident fraction of newly labeled
users from each view into the pool. The loop stops when an iteration adds
nothing or the iteration budget is exhausted; the final per-user call
merges the two views by confidence.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from stancekit.corpus import TweetCorpus, extract_user_documents
from stancekit.graph import BipartiteMatrix
from stancekit.propagation import (
    StanceVector,
    normalize_seed_set,
    propagate_to_entities,
    propagate_to_users,
    seed_user_stance,
)
from stancekit.textclf import (
    TrainConfig,
    fit_linear_csr,
    fit_vocabulary,
    stack_rows,
    tokenize,
    transform,
)

SOURCE_SEED = "seed"
SOURCE_NETWORK = "network"
SOURCE_TEXT = "text"


@dataclass(frozen=True)
class CoTrainConfig:
    theta_u: float = 0.7
    theta_h: float = 0.7
    theta_text: float = 0.7
    mix_k: float = 0.2
    max_iterations: int = 5
    stop_on_no_new_labels: bool = True
    round_trips: int = 1
    min_df: int = 2
    bigrams: bool = True
    exclude_seed_hashtags: bool = False
    trainer: TrainConfig = TrainConfig()

    def validate(self) -> None:
        for name in ("theta_u", "theta_h", "theta_text"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 < self.mix_k <= 1.0:
            raise ValueError(f"mix_k must be in (0, 1], got {self.mix_k}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.round_trips < 1:
            raise ValueError("round_trips must be >= 1")


@dataclass(slots=True)
class LabeledUser:
    stance: int
    confidence: float
    source: str


class LabeledUserSet:
    """The growing training pool. Existing entries are never modified."""

    def __init__(self, entries: dict[str, LabeledUser] | None = None):
        self.entries: dict[str, LabeledUser] = dict(entries or {})

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, user_id: str) -> bool:
        return user_id in self.entries

    def get(self, user_id: str) -> LabeledUser | None:
        return self.entries.get(user_id)

    @classmethod
    def from_stance_vector(cls, sv: StanceVector, source: str) -> "LabeledUserSet":
        entries = {}
        for user_id, stance, conf in sv.items():
            if stance != 0:
                entries[user_id] = LabeledUser(stance, conf, source)
        return cls(entries)

    def merge(self, new: dict[str, LabeledUser]) -> int:
        added = 0
        for user_id, entry in new.items():
            if user_id not in self.entries:
                self.entries[user_id] = entry
                added += 1
        return added

    def class_counts(self) -> dict[int, int]:
        counts = {1: 0, -1: 0}
        for entry in self.entries.values():
            counts[entry.stance] = counts.get(entry.stance, 0) + 1
        return counts

    def sorted_items(self):
        return sorted(self.entries.items())

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "stance", "confidence", "source"])
            for user_id, e in self.sorted_items():
                writer.writerow([user_id, e.stance, repr(e.confidence), e.source])

    @classmethod
    def from_csv(cls, path) -> "LabeledUserSet":
        entries = {}
        with open(path, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                entries[rec["user_id"]] = LabeledUser(
                    int(rec["stance"]), float(rec["confidence"]), rec["source"])
        return cls(entries)


def joint_stance(text_stance: int, text_conf: float,
                 net_stance: int, net_conf: float) -> int:
    """Merge the two views: 0 when both confidences are 0, the text call
    when its confidence is at least the network's, else the network call."""
    if text_conf == 0.0 and net_conf == 0.0:
        return 0
    if text_conf >= net_conf:
        return int(text_stance)
    return int(net_stance)


def add_new_labeled_examples(network: StanceVector, text: StanceVector,
                             k_fraction: float,
                             labeled: LabeledUserSet) -> dict[str, LabeledUser]:
    """Top ceil(K * candidates) most confident new users from each view.

    A user proposed by both views with disagreeing stances resolves to the
    higher confidence and is skipped on an exact tie; pool entries are
    never touched.
    """
    if not 0.0 < k_fraction <= 1.0:
        raise ValueError("k_fraction must be in (0, 1]")

    def _top(sv: StanceVector, source: str) -> dict[str, LabeledUser]:
        candidates = [(user_id, stance, conf) for user_id, stance, conf in sv.items()
                      if stance != 0 and user_id not in labeled]
        if not candidates:
            return {}
        take = math.ceil(k_fraction * len(candidates))
        candidates.sort(key=lambda t: (-t[2], t[0]))
        return {u: LabeledUser(s, c, source) for u, s, c in candidates[:take]}

    picks = _top(network, SOURCE_NETWORK)
    for user_id, entry in _top(text, SOURCE_TEXT).items():
        other = picks.get(user_id)
        if other is None:
            picks[user_id] = entry
        elif other.stance == entry.stance:
            if entry.confidence > other.confidence:
                picks[user_id] = entry
        elif entry.confidence > other.confidence:
            picks[user_id] = entry
        elif entry.confidence == other.confidence:
            del picks[user_id]  # exact tie with disagreeing stance
    return picks


@dataclass(slots=True)
class IterationStats:
    iteration: int
    labeled_users: int
    added_network: int
    added_text: int
    notes: list[str] = field(default_factory=list)
    metrics: dict | None = None


@dataclass
class CoTrainResult:
    stance: StanceVector
    network: StanceVector
    text: StanceVector
    labeled: LabeledUserSet
    history: list[IterationStats]
    converged: bool
    stopped_at_iteration: int


class CoTrainError(ValueError):
    pass


def _joint_vector(ids, text_sv: StanceVector, net_sv: StanceVector) -> StanceVector:
    ts, tc = text_sv.align(ids)
    ns, nc = net_sv.align(ids)
    both_zero = (tc == 0.0) & (nc == 0.0)
    text_wins = tc >= nc
    st = np.where(both_zero, 0, np.where(text_wins, ts, ns)).astype(np.int8)
    cf = np.where(both_zero, 0.0, np.where(text_wins, tc, nc))
    cf[st == 0] = 0.0
    return StanceVector(ids, st, cf)


def _stance_metrics(sv: StanceVector, gold: dict[str, int]) -> dict[str, float]:
    from stancekit.evalanalysis import f1_macro

    ids = sorted(gold)
    preds = [sv.value(u) for u in ids]
    truth = [gold[u] for u in ids]
    covered = [(p, g) for p, g in zip(preds, truth) if p != 0]
    coverage = len(covered) / len(ids) if ids else 0.0
    accuracy = (sum(1 for p, g in covered if p == g) / len(covered)) if covered else 0.0
    return {"coverage": coverage, "accuracy": accuracy,
            "f1_macro": f1_macro(preds, truth) if ids else 0.0}


class _TextView:
    """Document-term matrix and per-iteration classifier over it.

    The vocabulary and the matrix are built once from every user's
    documents (unsupervised statistics); only the classifier is refit on
    the current pool each iteration.
    """

    def __init__(self, corpus: TweetCorpus, config: CoTrainConfig, exclude_tokens):
        docs = extract_user_documents(corpus)
        self.users = sorted(docs)
        token_rows: list[list[str]] = []
        owner: list[int] = []
        for k, user_id in enumerate(self.users):
            for doc in docs[user_id]:
                token_rows.append(tokenize(doc))
                owner.append(k)
        self.owner = np.array(owner, dtype=np.int64)
        self.docs_per_user = np.bincount(self.owner, minlength=len(self.users)) \
            if token_rows else np.zeros(len(self.users), dtype=np.int64)
        if token_rows:
            self.vocab = fit_vocabulary(token_rows, min_df=config.min_df,
                                        bigrams=config.bigrams,
                                        exclude_tokens=exclude_tokens)
            self.x = stack_rows([transform(t, self.vocab) for t in token_rows])
        else:
            self.vocab = None
            self.x = None
        self.config = config
        self.last_model: tuple[np.ndarray, float] | None = None

    def score(self, labeled: LabeledUserSet) -> tuple[StanceVector, list[str]]:
        notes: list[str] = []
        n_users = len(self.users)
        if self.x is None or self.x.shape[0] == 0:
            notes.append("no documents; text view inactive")
            return StanceVector(self.users, np.zeros(n_users, np.int8),
                                np.zeros(n_users)), notes
        ul_stance = np.zeros(n_users, dtype=np.float64)
        for k, user_id in enumerate(self.users):
            entry = labeled.get(user_id)
            if entry is not None:
                ul_stance[k] = entry.stance
        row_labels = ul_stance[self.owner]
        train_rows = np.nonzero(row_labels != 0)[0]
        y = row_labels[train_rows]
        if len(set(np.unique(y).tolist())) < 2:
            notes.append("labeled pool documents cover one class; text view skipped")
            return StanceVector(self.users, np.zeros(n_users, np.int8),
                                np.zeros(n_users)), notes
        w, b = fit_linear_csr(self.x[train_rows], y, self.config.trainer)
        self.last_model = (w, b)
        scores = self.x @ w + b
        pro_docs = np.bincount(self.owner, weights=(scores > 0).astype(np.float64),
                               minlength=n_users)
        con_docs = np.bincount(self.owner, weights=(scores < 0).astype(np.float64),
                               minlength=n_users)
        m = np.where(self.docs_per_user > 0, self.docs_per_user, 1)
        pro = pro_docs / m
        con = con_docs / m
        theta = self.config.theta_text
        st = np.where(pro > theta, 1, np.where(con > theta, -1, 0)).astype(np.int8)
        conf = np.where(st == 1, pro, np.where(st == -1, con, 0.0))
        return StanceVector(self.users, st, conf), notes


def _network_view(i_matrix: BipartiteMatrix, labeled: LabeledUserSet,
                  config: CoTrainConfig) -> StanceVector:
    n = i_matrix.n_rows
    base_st = np.zeros(n, dtype=np.int8)
    base_cf = np.zeros(n, dtype=np.float64)
    row_index = i_matrix.row_index
    for user_id, entry in labeled.entries.items():
        j = row_index.get(user_id)
        if j is not None:
            base_st[j] = entry.stance
            base_cf[j] = entry.confidence
    clamp = base_st != 0
    current = StanceVector(i_matrix.row_ids, base_st, base_cf)
    for _ in range(config.round_trips):
        entities = propagate_to_entities(i_matrix, current, config.theta_h)
        propagated = propagate_to_users(i_matrix, entities, config.theta_u)
        st = propagated.stance.copy()
        cf = propagated.confidence.copy()
        st[clamp] = base_st[clamp]
        cf[clamp] = base_cf[clamp]
        current = StanceVector(i_matrix.row_ids, st, cf)
    return current


def cotrain(corpus: TweetCorpus, i_matrix: BipartiteMatrix, seeds,
            config: CoTrainConfig | None = None,
            gold_users: dict[str, int] | None = None,
            checkpoint_dir=None) -> CoTrainResult:
    """Run the co-training loop and return the merged per-user stance table.

    ``seeds`` maps hashtags to +1/-1 and must label users of both classes
    once pushed through the seed columns of ``i_matrix``. ``gold_users``
    (optional) adds per-iteration coverage/accuracy/F1 to the history.
    Checkpoints (pool CSV + metrics JSON per iteration) are written when
    ``checkpoint_dir`` is given.
    """
    config = config or CoTrainConfig()
    config.validate()
    if i_matrix.n_cols == 0 or i_matrix.nnz == 0:
        raise CoTrainError("interaction matrix is empty")
    seeds = normalize_seed_set(seeds)
    seed_sv = seed_user_stance(i_matrix, seeds)
    labeled = LabeledUserSet.from_stance_vector(seed_sv, SOURCE_SEED)
    counts = labeled.class_counts()
    if counts[1] == 0 or counts[-1] == 0:
        raise CoTrainError(
            f"seed hashtags label only one stance class (counts: {counts})")

    exclude_tokens: frozenset[str] = frozenset()
    if config.exclude_seed_hashtags:
        exclude_tokens = frozenset({f"#{t}" for t in seeds} | set(seeds))
    text_view = _TextView(corpus, config, exclude_tokens)

    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    all_users = sorted(corpus.users)
    history: list[IterationStats] = []
    converged = False
    stopped_at = config.max_iterations
    net_sv = text_sv = None
    for iteration in range(1, config.max_iterations + 1):
        net_sv = _network_view(i_matrix, labeled, config)
        text_sv, notes = text_view.score(labeled)
        new = add_new_labeled_examples(net_sv, text_sv, config.mix_k, labeled)
        added_network = sum(1 for e in new.values() if e.source == SOURCE_NETWORK)
        added_text = sum(1 for e in new.values() if e.source == SOURCE_TEXT)
        labeled.merge(new)
        stats = IterationStats(iteration=iteration, labeled_users=len(labeled),
                               added_network=added_network, added_text=added_text,
                               notes=notes)
        if gold_users:
            joint = _joint_vector(all_users, text_sv, net_sv)
            stats.metrics = {"network": _stance_metrics(net_sv, gold_users),
                             "text": _stance_metrics(text_sv, gold_users),
                             "joint": _stance_metrics(joint, gold_users)}
        history.append(stats)
        if checkpoint_dir is not None:
            labeled.to_csv(checkpoint_dir / f"iter_{iteration:02d}.ul.csv")
            with open(checkpoint_dir / f"iter_{iteration:02d}.metrics.json", "w",
                      encoding="utf-8") as fh:
                json.dump(asdict(stats), fh, indent=2)
        if not new and config.stop_on_no_new_labels:
            converged = True
            stopped_at = iteration + 1
            break

    final = _joint_vector(all_users, text_sv, net_sv)
    return CoTrainResult(stance=final, network=net_sv, text=text_sv,
                         labeled=labeled, history=history, converged=converged,
                         stopped_at_iteration=stopped_at)
