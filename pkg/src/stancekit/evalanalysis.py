"""Metrics, leave-one-out event evaluation, entity reports, and cross-tabs."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from stancekit.convclf import predict_conversation
from stancekit.graph import BipartiteMatrix, column_sums
from stancekit.propagation import StanceVector, propagate_to_entities


def f1_macro(predictions, gold) -> float:
    """Unweighted mean of per-class F1 over the classes present in gold.

    A gold class never predicted scores 0; predicted classes absent from
    gold are ignored.
    """
    predictions = list(predictions)
    gold = list(gold)
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions "
                         f"vs {len(gold)} gold labels")
    if not gold:
        raise ValueError("need at least one labeled example")
    scores = []
    for cls in sorted(set(gold), key=repr):
        tp = sum(1 for p, g in zip(predictions, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predictions, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predictions, gold) if p != cls and g == cls)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def cohens_kappa(p0: float, pe: float) -> float:
    """Chance-corrected agreement (p0 - pe) / (1 - pe)."""
    if pe == 1:
        raise ValueError("chance agreement of 1 leaves kappa undefined")
    return (p0 - pe) / (1.0 - pe)


@dataclass(slots=True)
class FoldResult:
    event: str
    n_train: int
    n_test: int
    f1: float | None
    confusion: dict[str, int] = field(default_factory=dict)
    error: str | None = None


@dataclass
class EvalReport:
    folds: list[FoldResult]
    mean_f1: float | None
    history_ref: str | None = None


def _confusion(preds, gold) -> dict[str, int]:
    counts = Counter((g, p) for g, p in zip(gold, preds))
    return {f"gold={g},pred={p}": n for (g, p), n in sorted(counts.items())}


def evaluate_pairs(model, pairs) -> tuple[float, dict[str, int]]:
    """F1-macro and confusion counts of a conversation model on gold pairs."""
    gold = [p.label for p in pairs]
    preds = [predict_conversation(model, p.source_text, p.reply_text)[0]
             for p in pairs]
    return f1_macro(preds, gold), _confusion(preds, gold)


def leave_one_out_eval(events, trainer, history_ref: str | None = None) -> EvalReport:
    """Hold out each event in turn, train on the union of the others' gold
    pairs, and test on the held-out gold.

    ``trainer`` takes a list of labeled pairs and returns a conversation
    model. A fold whose training fails (for example a single-class union)
    is recorded as an error while the other folds proceed.
    """
    names = sorted(events)
    if len(names) < 2:
        raise ValueError("leave-one-out evaluation needs at least 2 events")
    folds: list[FoldResult] = []
    for held in names:
        train_pairs = [p for name in names if name != held for p in events[name]]
        test_pairs = list(events[held])
        try:
            model = trainer(train_pairs)
            f1, confusion = evaluate_pairs(model, test_pairs)
            folds.append(FoldResult(event=held, n_train=len(train_pairs),
                                    n_test=len(test_pairs), f1=f1,
                                    confusion=confusion))
        except Exception as exc:  # noqa: BLE001 - fold isolation is the contract
            folds.append(FoldResult(event=held, n_train=len(train_pairs),
                                    n_test=len(test_pairs), f1=None,
                                    error=f"{type(exc).__name__}: {exc}"))
    ok = [f.f1 for f in folds if f.f1 is not None]
    mean_f1 = float(np.mean(ok)) if ok else None
    return EvalReport(folds=folds, mean_f1=mean_f1, history_ref=history_ref)


@dataclass(slots=True)
class EntityEntry:
    entity: str
    kind: str
    stance: int
    confidence: float
    usage: float


@dataclass
class EntityStanceReport:
    pro: list[EntityEntry]
    anti: list[EntityEntry]
    theta: float
    top_n: int

    def rows(self):
        for side, entries in (("pro", self.pro), ("anti", self.anti)):
            for e in entries:
                yield {"side": side, "entity": e.entity, "kind": e.kind,
                       "stance": e.stance, "confidence": e.confidence,
                       "usage": e.usage}


def entity_stance_report(i_matrix: BipartiteMatrix, user_stance: StanceVector,
                         theta_i: float, top_n: int = 20) -> EntityStanceReport:
    """One user->entity threshold pass, then the most used entities per side.

    Entities below the threshold are absent; within each (side, kind) group
    the ``top_n`` by total usage weight are kept, and each side's list is
    sorted by usage descending.
    """
    entities = propagate_to_entities(i_matrix, user_stance, theta_i)
    usage = column_sums(i_matrix)
    grouped: dict[tuple[int, str], list[EntityEntry]] = {}
    for j, (kind, cid) in enumerate(zip(i_matrix.col_kinds, i_matrix.col_ids)):
        stance = int(entities.stance[j])
        if stance == 0:
            continue
        grouped.setdefault((stance, kind), []).append(
            EntityEntry(entity=cid, kind=kind, stance=stance,
                        confidence=float(entities.confidence[j]),
                        usage=float(usage[j])))
    sides = {1: [], -1: []}
    for (stance, _), entries in grouped.items():
        entries.sort(key=lambda e: (-e.usage, e.entity))
        sides[stance].extend(entries[:top_n])
    for entries in sides.values():
        entries.sort(key=lambda e: (-e.usage, e.entity))
    return EntityStanceReport(pro=sides[1], anti=sides[-1],
                              theta=float(theta_i), top_n=top_n)


@dataclass
class CrossTab:
    """2x2 stance agreement counts over users non-zero in both tables.

    Rows are table A (+1 then -1), columns table B (+1 then -1).
    """

    counts: list[list[int]]
    row_marginals: list[int]
    col_marginals: list[int]
    total: int


def stance_cross_tab(table_a: StanceVector, table_b: StanceVector) -> CrossTab:
    counts = [[0, 0], [0, 0]]
    pos = {1: 0, -1: 1}
    for user_id in table_a.ids:
        a = table_a.value(user_id)
        b = table_b.value(user_id)
        if a == 0 or b == 0:
            continue
        counts[pos[a]][pos[b]] += 1
    total = sum(map(sum, counts))
    if total == 0:
        warnings.warn("no users are labeled in both stance tables", stacklevel=2)
    return CrossTab(counts=counts,
                    row_marginals=[sum(row) for row in counts],
                    col_marginals=[counts[0][j] + counts[1][j] for j in (0, 1)],
                    total=total)
