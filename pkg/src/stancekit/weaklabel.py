"""Weak Favor/Oppose labels on conversation pairs from the user stance table."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from stancekit.corpus import ConversationPair
from stancekit.propagation import StanceVector


def conversation_label(source_stance: int, reply_stance: int) -> int:
    """0 when either user is unlabeled, -1 when stances differ, else +1."""
    if source_stance == 0 or reply_stance == 0:
        return 0
    if source_stance != reply_stance:
        return -1
    return 1


@dataclass(slots=True)
class WeakLabelStats:
    total_pairs: int
    labeled: int
    unknown: int
    excluded_gold: int

    @property
    def fraction_labeled(self) -> float:
        considered = self.total_pairs - self.excluded_gold
        return self.labeled / considered if considered else 0.0


def label_conversations(pairs, stance: StanceVector,
                        exclude_ids=frozenset()) -> tuple[list[ConversationPair], WeakLabelStats]:
    """Assign weak labels to conversation pairs via the stance-pair rule.

    Pairs whose reply ids appear in ``exclude_ids`` (hand-labeled pairs)
    are dropped so gold examples never enter the weak training set; pairs
    with an unlabeled user on either side are excluded as Unknown.
    """
    labeled: list[ConversationPair] = []
    unknown = 0
    excluded = 0
    total = 0
    for pair in pairs:
        total += 1
        if pair.reply_tweet_id in exclude_ids:
            excluded += 1
            continue
        label = conversation_label(stance.value(pair.source_user),
                                   stance.value(pair.reply_user))
        if label == 0:
            unknown += 1
            continue
        labeled.append(replace(pair, label=label, label_kind="weak"))
    stats = WeakLabelStats(total_pairs=total, labeled=len(labeled),
                           unknown=unknown, excluded_gold=excluded)
    return labeled, stats


def save_pairs_jsonl(pairs, path) -> None:
    """Write pairs as JSONL training/eval records."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            rec = {"source_tweet_id": p.source_tweet_id,
                   "reply_tweet_id": p.reply_tweet_id,
                   "source_user": p.source_user,
                   "reply_user": p.reply_user,
                   "source_text": p.source_text,
                   "reply_text": p.reply_text,
                   "label": p.label}
            if p.label_kind:
                rec["label_kind"] = p.label_kind
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


_LABEL_ALIASES = {"1": 1, "+1": 1, "favor": 1, "support": 1,
                  "-1": -1, "oppose": -1, "deny": -1}


def parse_pair_label(raw) -> int | None:
    """Map a stored label to +1/-1; None for neutral/other classes."""
    if raw is None:
        return None
    if isinstance(raw, (int, float)):
        return int(raw) if int(raw) in (-1, 1) else None
    return _LABEL_ALIASES.get(str(raw).strip().lower())


def load_pairs_jsonl(path, require_label: bool = False) -> list[ConversationPair]:
    """Read pairs from JSONL; rows with neutral/other labels keep label 0
    (and are dropped when ``require_label`` is set)."""
    pairs: list[ConversationPair] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            label = parse_pair_label(rec.get("label"))
            if label is None:
                if require_label:
                    continue
                label = 0
            pairs.append(ConversationPair(
                source_tweet_id=str(rec.get("source_tweet_id", "")),
                reply_tweet_id=str(rec.get("reply_tweet_id", "")),
                source_user=str(rec.get("source_user", "")),
                reply_user=str(rec.get("reply_user", "")),
                source_text=str(rec.get("source_text", "")),
                reply_text=str(rec.get("reply_text", "")),
                label=label,
                label_kind=rec.get("label_kind"),
            ))
    return pairs
