"""Command-line interface: pipeline stages plus the synthetic generator."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from stancekit.pipeline import PipelineConfig, parse_seed_spec, run_all, run_stage
from stancekit.synth import generate_synthetic_corpus

log = logging.getLogger("stancekit")

_STAGE_COMMANDS = {
    "ingest": "load and normalize the tweet corpus",
    "build-graph": "build the sparse user-by-entity matrices",
    "cotrain": "co-train propagation and the text classifier",
    "weaklabel": "weakly label conversation pairs from user stances",
    "train-conv": "train the conversation classifier on weak labels",
    "predict": "predict favor/oppose for conversation pairs",
    "eval": "evaluate the conversation classifier on gold pairs",
    "analyze": "entity stance reports and stance cross-tabulation",
}
_STAGE_OF_COMMAND = {cmd: ("graph" if cmd == "build-graph" else cmd)
                     for cmd in _STAGE_COMMANDS}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--input", help="tweet corpus file (jsonl or csv)")
    parser.add_argument("--event", help="event tag applied to ingested tweets")
    parser.add_argument("--seeds", help='seed hashtags, e.g. "tag1:pro,tag2:anti"')
    parser.add_argument("--gold-users", dest="gold_users",
                        help="gold user stance CSV for iteration metrics")
    parser.add_argument("--gold-pairs", dest="gold_pairs",
                        help="gold conversation pairs JSONL")
    parser.add_argument("--pairs", dest="predict_input",
                        help="pairs JSONL to predict on")
    parser.add_argument("--compare", dest="compare_stance",
                        help="second stance CSV for the cross-tabulation")
    parser.add_argument("--theta-u", dest="theta_u", type=float,
                        help="entity-to-user propagation threshold")
    parser.add_argument("--theta-t", dest="theta_t", type=float,
                        help="text-view aggregation threshold")
    parser.add_argument("--theta-h", dest="theta_h", type=float,
                        help="user-to-entity propagation threshold")
    parser.add_argument("--theta-i", dest="theta_i", type=float,
                        help="entity report threshold")
    parser.add_argument("--topk-hashtags", dest="topk_hashtags", type=int,
                        help="hashtag columns to keep")
    parser.add_argument("--topp-retweets", dest="topp_retweets", type=int,
                        help="retweet columns to keep")
    parser.add_argument("--mix-k", dest="mix_k", type=float,
                        help="top-confidence fraction added per view per iteration")
    parser.add_argument("--iters", type=int, help="co-training iteration budget")
    parser.add_argument("--mode", choices=("pair", "reply_only"),
                        help="conversation feature mode")
    parser.add_argument("--out", help="pipeline output directory")
    parser.add_argument("--seed-rng", dest="seed_rng", type=int,
                        help="random seed for generation")
    parser.add_argument("--min-df", dest="min_df", type=int,
                        help="minimum document frequency for vocabulary terms")
    parser.add_argument("--epochs", type=int,
                        help="gradient-descent steps for the linear models")
    parser.add_argument("--learning-rate", dest="learning_rate", type=float,
                        help="gradient-descent step size")
    parser.add_argument("--l2", type=float, help="L2 regularization strength")
    parser.add_argument("--loo", action="store_true", default=None,
                        help="add a leave-one-out supervised baseline to eval")
    parser.add_argument("--force", action="store_true",
                        help="rerun the stage even if its manifest matches")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    field_names = {f.name for f in dataclasses.fields(PipelineConfig)}
    overrides = {k: v for k, v in vars(args).items()
                 if k in field_names and v is not None}
    if args.config:
        return PipelineConfig.from_file(args.config, overrides)
    return PipelineConfig(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stancekit",
        description="Weakly supervised stance labeling for users and "
                    "conversations in a polarized social-media corpus.")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_text in _STAGE_COMMANDS.items():
        p = sub.add_parser(cmd, help=help_text)
        _add_config_flags(p)
    p = sub.add_parser("run", help="run ingest through train-conv (plus eval "
                                   "and analyze when gold files are set)")
    _add_config_flags(p)
    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True, help="directory for generated files")
    p.add_argument("--n-users", type=int, default=200)
    p.add_argument("--n-hashtags", type=int, default=20)
    p.add_argument("--polarity", type=float, default=0.8)
    p.add_argument("--reply-noise", type=float, default=0.1)
    p.add_argument("--n-reply-pairs", type=int, default=None)
    p.add_argument("--gold-fraction", type=float, default=0.3)
    p.add_argument("--tweets-per-user", type=int, nargs=2, default=(3, 6),
                   metavar=("LO", "HI"))
    p.add_argument("--retweets-per-user", type=int, nargs=2, default=(0, 2),
                   metavar=("LO", "HI"))
    p.add_argument("--junk-every", type=int, default=0)
    p.add_argument("--event", default="synthetic")
    p.add_argument("--seed-rng", dest="seed_rng", type=int, default=0)
    return parser


def _cmd_synth(args: argparse.Namespace) -> None:
    data = generate_synthetic_corpus(
        n_users=args.n_users, n_hashtags=args.n_hashtags,
        polarity=args.polarity, seed=args.seed_rng,
        tweets_per_user=tuple(args.tweets_per_user),
        retweets_per_user=tuple(args.retweets_per_user),
        n_reply_pairs=args.n_reply_pairs, reply_noise=args.reply_noise,
        gold_fraction=args.gold_fraction, junk_every=args.junk_every,
        event=args.event)
    paths = data.write(args.out)
    log.info("wrote %d tweets for %d users (%d pairs, %d gold) to %s",
             data.corpus.n_tweets, data.corpus.n_users, len(data.pairs),
             len(data.gold_pair_ids), args.out)
    print(json.dumps(paths, indent=2, sort_keys=True))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        if command == "synth":
            _cmd_synth(args)
        elif command == "run":
            config = _config_from_args(args)
            for result in run_all(config, force=args.force):
                state = "skipped (up to date)" if result.skipped else "done"
                log.info("stage %s: %s", result.stage, state)
        else:
            stage = _STAGE_OF_COMMAND[command]
            config = _config_from_args(args)
            result = run_stage(stage, config, force=args.force)
            state = "skipped (up to date)" if result.skipped else "done"
            log.info("stage %s: %s %s", stage, state,
                     json.dumps(result.info, sort_keys=True, default=str))
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error [{command}]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
