"""Checkpointed pipeline: ingest -> graph -> cotrain -> weaklabel ->
train-conv -> predict / eval / analyze.

Every stage writes its artifacts plus a manifest (config subset hash,
input file hashes, package version) under its own directory in the output
root; rerunning with unchanged inputs is a no-op. A lock file serializes
stages per output directory.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import stancekit
from stancekit import _kernels as kernels
from stancekit.corpus import extract_conversations, load_tweets, save_corpus
from stancekit.cotrain import CoTrainConfig, cotrain
from stancekit.convclf import MODES, train_conversation_model, predict_conversation
from stancekit.evalanalysis import (
    entity_stance_report,
    evaluate_pairs,
    leave_one_out_eval,
    stance_cross_tab,
)
from stancekit.graph import (
    BipartiteMatrix,
    build_user_domain_matrix,
    build_user_hashtag_matrix,
    build_user_mention_matrix,
    build_user_retweet_matrix,
    union_matrices,
)
from stancekit.modelio import load_model, save_model
from stancekit.propagation import StanceVector, normalize_seed_set
from stancekit.textclf import TrainConfig
from stancekit.weaklabel import (
    label_conversations,
    load_pairs_jsonl,
    parse_pair_label,
    save_pairs_jsonl,
)

STAGES = ("ingest", "graph", "cotrain", "weaklabel", "train-conv",
          "predict", "eval", "analyze")
_DEPS = {"ingest": (), "graph": ("ingest",), "cotrain": ("graph",),
         "weaklabel": ("cotrain",), "train-conv": ("weaklabel",),
         "predict": ("train-conv",), "eval": ("train-conv",),
         "analyze": ("cotrain",)}


class PipelineError(Exception):
    pass


class StageDependencyError(PipelineError):
    pass


_SEED_LABELS = {"pro": 1, "anti": -1, "+1": 1, "1": 1, "-1": -1}


def parse_seed_spec(spec) -> dict[str, int]:
    """Seed hashtags from "tag:pro,tag2:anti", a list of such items, or a
    mapping with pro/anti or +1/-1 values."""
    if isinstance(spec, str):
        items = [s for s in spec.replace(";", ",").split(",") if s.strip()]
        pairs = []
        for item in items:
            tag, _, label = item.partition(":")
            pairs.append((tag.strip(), label.strip()))
    elif isinstance(spec, dict):
        pairs = [(k, v) for k, v in spec.items()]
    else:
        pairs = []
        for item in spec:
            tag, _, label = str(item).partition(":")
            pairs.append((tag.strip(), label.strip()))
    seeds = {}
    for tag, label in pairs:
        if isinstance(label, (int, float)):
            value = int(label)
        else:
            key = str(label).strip().lower()
            if key not in _SEED_LABELS:
                raise ValueError(f"seed label for {tag!r} must be pro/anti or "
                                 f"+1/-1, got {label!r}")
            value = _SEED_LABELS[key]
        seeds[str(tag).strip().lstrip("#").lower()] = value
    return seeds


@dataclass
class PipelineConfig:
    input: str | None = None
    event: str = ""
    out: str = "out"
    seeds: dict[str, int] = field(default_factory=dict)
    gold_users: str | None = None
    gold_pairs: str | None = None
    predict_input: str | None = None
    compare_stance: str | None = None
    theta_u: float = 0.7
    theta_h: float = 0.7
    theta_t: float = 0.7
    theta_i: float = 0.7
    topk_hashtags: int = 250
    topp_retweets: int = 1000
    mix_k: float = 0.2
    iters: int = 5
    mode: str = "pair"
    seed_rng: int = 0
    min_df: int = 2
    bigrams: bool = True
    round_trips: int = 1
    exclude_seed_hashtags: bool = False
    learning_rate: float = 1.0
    epochs: int = 300
    l2: float = 1e-4
    top_entities: int = 1000
    report_top_n: int = 20
    loo: bool = False

    def __post_init__(self):
        if self.seeds:
            self.seeds = parse_seed_spec(self.seeds)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def validate(self) -> None:
        if self.topk_hashtags < 1 or self.topp_retweets < 1:
            raise ValueError("topk_hashtags and topp_retweets must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 <= self.theta_i <= 1.0:
            raise ValueError("theta_i must be in [0, 1]")
        self.cotrain_config().validate()

    def cotrain_config(self) -> CoTrainConfig:
        return CoTrainConfig(theta_u=self.theta_u, theta_h=self.theta_h,
                             theta_text=self.theta_t, mix_k=self.mix_k,
                             max_iterations=self.iters,
                             round_trips=self.round_trips, min_df=self.min_df,
                             bigrams=self.bigrams,
                             exclude_seed_hashtags=self.exclude_seed_hashtags,
                             trainer=self.trainer_config())

    def trainer_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate,
                           epochs=self.epochs, l2=self.l2)


@dataclass
class StageResult:
    stage: str
    skipped: bool
    outputs: dict[str, str]
    info: dict


_REL_KEYS = {
    "ingest": ("input", "event"),
    "graph": ("topk_hashtags", "topp_retweets", "seeds", "top_entities"),
    "cotrain": ("seeds", "theta_u", "theta_h", "theta_t", "mix_k", "iters",
                "min_df", "bigrams", "round_trips", "exclude_seed_hashtags",
                "learning_rate", "epochs", "l2", "seed_rng", "gold_users"),
    "weaklabel": ("gold_pairs",),
    "train-conv": ("mode", "min_df", "bigrams", "learning_rate", "epochs", "l2"),
    "predict": ("predict_input",),
    "eval": ("gold_pairs", "loo", "mode", "min_df", "bigrams",
             "learning_rate", "epochs", "l2"),
    "analyze": ("theta_i", "report_top_n", "compare_stance"),
}


def _hash_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_hash(stage: str, config: PipelineConfig) -> tuple[dict, str]:
    subset = {k: getattr(config, k) for k in _REL_KEYS[stage]}
    payload = json.dumps(subset, sort_keys=True, default=str)
    return subset, hashlib.sha256(payload.encode()).hexdigest()


@contextmanager
def _dir_lock(outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    lock_path = outdir / ".lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise PipelineError(
            f"output directory is locked by another run ({lock_path}); "
            "remove the lock file if no other process is active") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)


def _stage_dir(config: PipelineConfig, stage: str) -> Path:
    return Path(config.out) / stage


def _check_deps(stage: str, config: PipelineConfig) -> None:
    for dep in _DEPS[stage]:
        if not (_stage_dir(config, dep) / "manifest.json").exists():
            raise StageDependencyError(
                f'stage "{stage}" needs artifacts from stage "{dep}"; '
                f'run stage "{dep}" first')


def _input_hashes(stage: str, config: PipelineConfig) -> dict[str, str]:
    out = Path(config.out)
    hashes: dict[str, str] = {}

    def add(name: str, path) -> None:
        if path is None:
            return
        path = Path(path)
        if not path.exists():
            raise PipelineError(f'stage "{stage}" input not found: {path}')
        hashes[name] = _hash_file(path)

    if stage == "ingest":
        if not config.input:
            raise PipelineError('stage "ingest" needs an input file (--input)')
        add("input", config.input)
    elif stage == "graph":
        add("tweets", out / "ingest" / "tweets.jsonl")
    elif stage == "cotrain":
        add("tweets", out / "ingest" / "tweets.jsonl")
        add("i.triplets", out / "graph" / "i.triplets.csv")
        add("i.meta", out / "graph" / "i.meta.json")
        add("gold_users", config.gold_users)
    elif stage == "weaklabel":
        add("tweets", out / "ingest" / "tweets.jsonl")
        add("stance", out / "cotrain" / "stance.csv")
        add("gold_pairs", config.gold_pairs)
    elif stage == "train-conv":
        add("weak_pairs", out / "weaklabel" / "weak_pairs.jsonl")
    elif stage == "predict":
        add("model", out / "train-conv" / "model.json")
        if config.predict_input:
            add("pairs", config.predict_input)
        else:
            add("tweets", out / "ingest" / "tweets.jsonl")
    elif stage == "eval":
        add("model", out / "train-conv" / "model.json")
        if not config.gold_pairs:
            raise PipelineError('stage "eval" needs a gold pairs file (--gold-pairs)')
        add("gold_pairs", config.gold_pairs)
    elif stage == "analyze":
        add("stance", out / "cotrain" / "stance.csv")
        for name in ("i", "mentions", "urls"):
            path = out / "graph" / f"{name}.triplets.csv"
            if path.exists():
                add(name, path)
        add("compare", config.compare_stance)
    return hashes


def load_gold_users(path) -> dict[str, int]:
    gold: dict[str, int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            stance = int(rec["stance"])
            if stance in (-1, 1):
                gold[rec["user_id"]] = stance
    return gold


def _load_gold_events(path) -> dict[str, list]:
    """Gold pairs grouped by event tag; neutral-class rows are dropped."""
    from stancekit.corpus import ConversationPair

    events: dict[str, list] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            label = parse_pair_label(rec.get("label"))
            if label is None:
                continue
            pair = ConversationPair(
                source_tweet_id=str(rec.get("source_tweet_id", "")),
                reply_tweet_id=str(rec.get("reply_tweet_id", "")),
                source_user=str(rec.get("source_user", "")),
                reply_user=str(rec.get("reply_user", "")),
                source_text=str(rec.get("source_text", "")),
                reply_text=str(rec.get("reply_text", "")),
                label=label, label_kind="gold")
            events.setdefault(str(rec.get("event") or "all"), []).append(pair)
    return events


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _load_matrix(config: PipelineConfig, name: str) -> BipartiteMatrix:
    base = _stage_dir(config, "graph")
    return BipartiteMatrix.from_triplets(base / f"{name}.triplets.csv",
                                         base / f"{name}.meta.json")


def _run_ingest(config: PipelineConfig, stage_dir: Path) -> dict:
    corpus = load_tweets(config.input, event=config.event)
    save_corpus(corpus, stage_dir / "tweets.jsonl")
    info = {"n_tweets": corpus.n_tweets, "n_users": corpus.n_users,
            "skipped_records": corpus.skipped_records,
            "duplicate_ids": corpus.duplicate_ids,
            "missing_reply_targets": corpus.missing_reply_targets}
    _write_json(stage_dir / "stats.json", info)
    return info


def _run_graph(config: PipelineConfig, stage_dir: Path) -> dict:
    corpus = load_tweets(_stage_dir(config, "ingest") / "tweets.jsonl")
    seeds = normalize_seed_set(config.seeds) if config.seeds else {}
    h = build_user_hashtag_matrix(corpus, config.topk_hashtags,
                                  force_include=tuple(seeds))
    r = build_user_retweet_matrix(corpus, config.topp_retweets)
    i = union_matrices(h, r)
    mentions = build_user_mention_matrix(corpus, config.top_entities)
    urls = build_user_domain_matrix(corpus, config.top_entities)
    info = {}
    for name, mat in (("h", h), ("r", r), ("i", i),
                      ("mentions", mentions), ("urls", urls)):
        mat.to_triplets(stage_dir / f"{name}.triplets.csv")
        mat.to_meta(stage_dir / f"{name}.meta.json")
        info[name] = {"rows": mat.n_rows, "cols": mat.n_cols, "nnz": mat.nnz}
    _write_json(stage_dir / "stats.json", info)
    return info


def _run_cotrain(config: PipelineConfig, stage_dir: Path) -> dict:
    corpus = load_tweets(_stage_dir(config, "ingest") / "tweets.jsonl")
    i = _load_matrix(config, "i")
    gold = load_gold_users(config.gold_users) if config.gold_users else None
    result = cotrain(corpus, i, config.seeds, config.cotrain_config(),
                     gold_users=gold, checkpoint_dir=stage_dir / "checkpoints")
    result.stance.to_csv(stage_dir / "stance.csv")
    result.network.to_csv(stage_dir / "network.csv")
    result.text.to_csv(stage_dir / "text.csv")
    result.labeled.to_csv(stage_dir / "ul.csv")
    history = {"iterations": [asdict(s) for s in result.history],
               "converged": result.converged,
               "stopped_at_iteration": result.stopped_at_iteration,
               "kernel_backend": kernels.BACKEND}
    _write_json(stage_dir / "history.json", history)
    return {"labeled_users": len(result.labeled),
            "nonzero_stance": result.stance.nonzero_count(),
            "users": len(result.stance),
            "converged": result.converged}


def _run_weaklabel(config: PipelineConfig, stage_dir: Path) -> dict:
    corpus = load_tweets(_stage_dir(config, "ingest") / "tweets.jsonl")
    stance = StanceVector.from_csv(_stage_dir(config, "cotrain") / "stance.csv")
    pairs = extract_conversations(corpus)
    exclude = frozenset()
    if config.gold_pairs:
        gold_events = _load_gold_events(config.gold_pairs)
        exclude = frozenset(p.reply_tweet_id for ps in gold_events.values()
                            for p in ps)
    labeled, stats = label_conversations(pairs, stance, exclude_ids=exclude)
    save_pairs_jsonl(labeled, stage_dir / "weak_pairs.jsonl")
    info = {"total_pairs": stats.total_pairs, "labeled": stats.labeled,
            "unknown": stats.unknown, "excluded_gold": stats.excluded_gold,
            "fraction_labeled": stats.fraction_labeled,
            "missing_reply_targets": corpus.missing_reply_targets}
    _write_json(stage_dir / "stats.json", info)
    return info


def _run_train_conv(config: PipelineConfig, stage_dir: Path) -> dict:
    pairs = load_pairs_jsonl(_stage_dir(config, "weaklabel") / "weak_pairs.jsonl",
                             require_label=True)
    model = train_conversation_model(pairs, mode=config.mode,
                                     config=config.trainer_config(),
                                     min_df=config.min_df,
                                     bigrams=config.bigrams)
    save_model(model, stage_dir / "model.json")
    return {"training_pairs": model.training_size, "mode": model.mode,
            "vocabulary": model.vocab.size}


def _run_predict(config: PipelineConfig, stage_dir: Path) -> dict:
    model = load_model(_stage_dir(config, "train-conv") / "model.json")
    if config.predict_input:
        pairs = load_pairs_jsonl(config.predict_input)
    else:
        corpus = load_tweets(_stage_dir(config, "ingest") / "tweets.jsonl")
        pairs = extract_conversations(corpus)
    n = 0
    with open(stage_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for p in pairs:
            label, score = predict_conversation(model, p.source_text, p.reply_text)
            rec = {"source_tweet_id": p.source_tweet_id,
                   "reply_tweet_id": p.reply_tweet_id,
                   "source_text": p.source_text, "reply_text": p.reply_text,
                   "label": "favor" if label == 1 else "oppose",
                   "score": score}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return {"predicted_pairs": n}


def _run_eval(config: PipelineConfig, stage_dir: Path) -> dict:
    model = load_model(_stage_dir(config, "train-conv") / "model.json")
    events = _load_gold_events(config.gold_pairs)
    if not events:
        raise PipelineError("gold pairs file holds no favor/oppose rows")
    per_event = {}
    for name in sorted(events):
        f1, confusion = evaluate_pairs(model, events[name])
        per_event[name] = {"f1_macro": f1, "n_pairs": len(events[name]),
                           "confusion": confusion}
    report = {"per_event": per_event,
              "mean_f1_macro": sum(e["f1_macro"] for e in per_event.values())
              / len(per_event)}
    if config.loo:
        if len(events) < 2:
            raise PipelineError("leave-one-out evaluation needs >= 2 events")

        def trainer(pairs):
            return train_conversation_model(pairs, mode=config.mode,
                                            config=config.trainer_config(),
                                            min_df=config.min_df,
                                            bigrams=config.bigrams)

        loo = leave_one_out_eval(events, trainer)
        report["leave_one_out"] = {
            "mean_f1_macro": loo.mean_f1,
            "folds": [asdict(f) for f in loo.folds]}
    _write_json(stage_dir / "report.json", report)
    with open(stage_dir / "report.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "f1_macro", "n_pairs"])
        for name in sorted(per_event):
            writer.writerow([name, repr(per_event[name]["f1_macro"]),
                             per_event[name]["n_pairs"]])
        writer.writerow(["mean", repr(report["mean_f1_macro"]), ""])
    return {"mean_f1_macro": report["mean_f1_macro"], "events": len(per_event)}


def _run_analyze(config: PipelineConfig, stage_dir: Path) -> dict:
    stance = StanceVector.from_csv(_stage_dir(config, "cotrain") / "stance.csv")
    info: dict = {}
    chart: dict = {}
    for name, label in (("i", "network"), ("mentions", "mention"), ("urls", "url")):
        path = _stage_dir(config, "graph") / f"{name}.triplets.csv"
        if not path.exists():
            continue
        matrix = _load_matrix(config, name)
        report = entity_stance_report(matrix, stance, config.theta_i,
                                      config.report_top_n)
        out_csv = stage_dir / f"entities_{label}.csv"
        with open(out_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["side", "entity", "kind", "stance", "confidence",
                             "usage"])
            for row in report.rows():
                writer.writerow([row["side"], row["entity"], row["kind"],
                                 row["stance"], repr(row["confidence"]),
                                 repr(row["usage"])])
        chart[label] = {
            "pro": [[e.entity, e.kind, e.usage] for e in report.pro],
            "anti": [[e.entity, e.kind, e.usage] for e in report.anti]}
        info[label] = {"pro": len(report.pro), "anti": len(report.anti)}
    _write_json(stage_dir / "chart_data.json", chart)
    if config.compare_stance:
        other = StanceVector.from_csv(config.compare_stance)
        ct = stance_cross_tab(stance, other)
        _write_json(stage_dir / "crosstab.json", asdict(ct))
        info["crosstab_total"] = ct.total
    return info


_RUNNERS = {"ingest": _run_ingest, "graph": _run_graph, "cotrain": _run_cotrain,
            "weaklabel": _run_weaklabel, "train-conv": _run_train_conv,
            "predict": _run_predict, "eval": _run_eval, "analyze": _run_analyze}


def run_stage(stage: str, config: PipelineConfig, force: bool = False) -> StageResult:
    """Run one stage (or skip it when its manifest already matches)."""
    if stage not in STAGES:
        raise PipelineError(f"unknown stage {stage!r}; expected one of {STAGES}")
    config.validate()
    outdir = Path(config.out)
    with _dir_lock(outdir):
        _check_deps(stage, config)
        subset, config_hash = _config_hash(stage, config)
        input_hashes = _input_hashes(stage, config)
        stage_dir = _stage_dir(config, stage)
        manifest_path = stage_dir / "manifest.json"
        if manifest_path.exists() and not force:
            with open(manifest_path, encoding="utf-8") as fh:
                previous = json.load(fh)
            if (previous.get("config_hash") == config_hash
                    and previous.get("input_hashes") == input_hashes):
                return StageResult(stage=stage, skipped=True,
                                   outputs=previous.get("outputs", {}),
                                   info=previous.get("info", {}))
        stage_dir.mkdir(parents=True, exist_ok=True)
        info = _RUNNERS[stage](config, stage_dir)
        outputs = {p.name: str(p) for p in sorted(stage_dir.iterdir())
                   if p.is_file() and p.name != "manifest.json"}
        manifest = {"stage": stage, "config": subset, "config_hash": config_hash,
                    "input_hashes": input_hashes, "outputs": outputs,
                    "info": info, "version": stancekit.__version__,
                    "kernel_backend": kernels.BACKEND}
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        return StageResult(stage=stage, skipped=False, outputs=outputs, info=info)


def run_all(config: PipelineConfig, force: bool = False) -> list[StageResult]:
    """Run ingest through train-conv, plus eval/analyze when configured."""
    stages = ["ingest", "graph", "cotrain", "weaklabel", "train-conv"]
    if config.gold_pairs:
        stages.append("eval")
    stages.append("analyze")
    return [run_stage(stage, config, force=force) for stage in stages]
