"""Synthetic polarized two-community corpus with known ground truth.

Users split into two equal communities. Hashtags, topic words, and retweet
hubs come in community-specific pools; the mixing knob ``polarity`` sets
how often a user draws from their own pool (probability (1 + polarity) / 2,
so 1.0 means disjoint vocabularies and 0.0 means indistinguishable).
Reply edges are sampled within and across communities; a within edge is
gold Favor and a cross edge gold Oppose, except a ``reply_noise`` fraction
whose gold label (and reply wording) is flipped. A ``marker_rate``
fraction of replies carries favor/oppose marker words matching their gold
label; the rest only carries community vocabulary, so matching reply
wording against the source is needed to classify them. Everything is
reproducible from the RNG seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stancekit.corpus import ConversationPair, Tweet, TweetCorpus, extract_conversations
from stancekit.weaklabel import save_pairs_jsonl

FAVOR_MARKERS = ["agree", "exactly", "truth", "wellsaid", "solidarity", "respect"]
OPPOSE_MARKERS = ["wrong", "false", "nonsense", "debunked", "lies", "shameful"]
NEUTRAL_WORDS = ["today", "people", "news", "really", "think", "issue",
                 "update", "story", "thread", "point"]
_WORDS_PER_POOL = 30


@dataclass
class SyntheticData:
    corpus: TweetCorpus
    user_stance: dict[str, int]
    seed_hashtags: dict[str, int]
    pairs: list[ConversationPair]
    pair_labels: dict[str, int]
    gold_pair_ids: frozenset[str]
    hashtag_side: dict[str, int]
    params: dict

    def gold_pairs(self) -> list[ConversationPair]:
        out = []
        for p in self.pairs:
            if p.reply_tweet_id in self.gold_pair_ids:
                out.append(ConversationPair(
                    p.source_tweet_id, p.reply_tweet_id, p.source_user,
                    p.reply_user, p.source_text, p.reply_text,
                    label=self.pair_labels[p.reply_tweet_id], label_kind="gold"))
        return out

    def write(self, outdir) -> dict[str, str]:
        """Write tweets.jsonl, gold_users.csv, gold_pairs.jsonl, seeds.json,
        meta.json into the directory; returns the path map."""
        from stancekit.corpus import save_corpus

        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {name: str(outdir / name) for name in
                 ("tweets.jsonl", "gold_users.csv", "gold_pairs.jsonl",
                  "seeds.json", "meta.json")}
        save_corpus(self.corpus, paths["tweets.jsonl"])
        with open(paths["gold_users.csv"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "stance"])
            for user_id in sorted(self.user_stance):
                writer.writerow([user_id, self.user_stance[user_id]])
        save_pairs_jsonl(self.gold_pairs(), paths["gold_pairs.jsonl"])
        with open(paths["seeds.json"], "w", encoding="utf-8") as fh:
            json.dump(self.seed_hashtags, fh, indent=2, sort_keys=True)
        with open(paths["meta.json"], "w", encoding="utf-8") as fh:
            json.dump({"params": self.params,
                       "n_tweets": self.corpus.n_tweets,
                       "n_users": self.corpus.n_users,
                       "n_pairs": len(self.pairs),
                       "n_gold_pairs": len(self.gold_pair_ids)},
                      fh, indent=2, sort_keys=True)
        return paths


def _mixed_pool_words(rng, sides, q, words_a, words_b, count):
    """count words per row, drawn from the row's own pool with prob q."""
    n = len(sides)
    own = rng.random((n, count)) < q
    idx = rng.integers(0, len(words_a), size=(n, count))
    pool_side = np.where(own, sides[:, None], -sides[:, None])
    out = []
    for i in range(n):
        row = [words_a[idx[i, j]] if pool_side[i, j] == 1 else words_b[idx[i, j]]
               for j in range(count)]
        out.append(row)
    return out


def generate_synthetic_corpus(n_users: int,
                              n_hashtags: int = 20,
                              polarity: float = 0.8,
                              seed: int = 0,
                              tweets_per_user: tuple[int, int] = (3, 6),
                              retweets_per_user: tuple[int, int] = (0, 2),
                              n_reply_pairs: int | None = None,
                              reply_noise: float = 0.0,
                              marker_rate: float = 0.85,
                              gold_fraction: float = 0.3,
                              hubs_per_side: int = 2,
                              words_per_tweet: int = 4,
                              hashtag_rate: float = 0.8,
                              junk_every: int = 0,
                              event: str = "synthetic") -> SyntheticData:
    """Build the corpus, gold user stances, and gold pair labels."""
    if not 0.0 <= polarity <= 1.0:
        raise ValueError(f"polarity must be in [0, 1], got {polarity}")
    if n_users < 4 or n_users % 2:
        raise ValueError("n_users must be an even number >= 4")
    if n_hashtags < 2 or n_hashtags % 2:
        raise ValueError("n_hashtags must be an even number >= 2")
    if not 0.0 <= reply_noise <= 1.0:
        raise ValueError("reply_noise must be in [0, 1]")
    rng = np.random.default_rng(seed)
    half = n_users // 2
    users = [f"u{i:06d}" for i in range(n_users)]
    sides = np.array([1] * half + [-1] * half, dtype=np.int64)
    user_stance = {u: int(s) for u, s in zip(users, sides)}
    q = (1.0 + polarity) / 2.0

    n_half_tags = n_hashtags // 2
    tags_a = [f"taga{i}" for i in range(n_half_tags)]
    tags_b = [f"tagb{i}" for i in range(n_half_tags)]
    # heavier mass on low indices keeps the seed tags genuinely popular
    tag_p = 1.0 / (np.arange(n_half_tags) + 1.0)
    tag_p /= tag_p.sum()
    words_a = [f"worda{i}" for i in range(_WORDS_PER_POOL)]
    words_b = [f"wordb{i}" for i in range(_WORDS_PER_POOL)]
    seeds = {tags_a[0]: 1, tags_b[0]: -1}
    hashtag_side = {t: 1 for t in tags_a}
    hashtag_side.update({t: -1 for t in tags_b})

    tweets: dict[str, Tweet] = {}
    counter = 0

    def next_id() -> str:
        nonlocal counter
        tid = f"t{counter:08d}"
        counter += 1
        return tid

    def pick_tag(side: int, own: bool, j: int) -> str:
        pool = tags_a if (side == 1) == own else tags_b
        return pool[j]

    # community hub tweets (retweet targets), authored by each side's first user
    hub_ids: dict[int, list[str]] = {1: [], -1: []}
    hub_author = {1: users[0], -1: users[half]}
    for side in (1, -1):
        pool_words = words_a if side == 1 else words_b
        pool_tags = tags_a if side == 1 else tags_b
        for j in range(hubs_per_side):
            tid = next_id()
            tag = pool_tags[j % n_half_tags]
            text = f"{pool_words[j]} {pool_words[j + 1]} rallying #{tag}"
            tweets[tid] = Tweet(tid, hub_author[side], text, (tag,), event=event)
            hub_ids[side].append(tid)

    # base topical tweets
    n_base = rng.integers(tweets_per_user[0], tweets_per_user[1] + 1, n_users)
    owner = np.repeat(np.arange(n_users), n_base)
    tweet_sides = sides[owner]
    word_rows = _mixed_pool_words(rng, tweet_sides, q, words_a, words_b,
                                  words_per_tweet)
    neutral_idx = rng.integers(0, len(NEUTRAL_WORDS), owner.shape[0])
    has_tag = rng.random(owner.shape[0]) < hashtag_rate
    tag_own = rng.random(owner.shape[0]) < q
    tag_idx = rng.choice(n_half_tags, size=owner.shape[0], p=tag_p)
    for i in range(owner.shape[0]):
        user = users[owner[i]]
        parts = word_rows[i] + [NEUTRAL_WORDS[neutral_idx[i]]]
        tag_tuple: tuple[str, ...] = ()
        if has_tag[i]:
            tag = pick_tag(int(tweet_sides[i]), bool(tag_own[i]), int(tag_idx[i]))
            parts.append(f"#{tag}")
            tag_tuple = (tag,)
        tid = next_id()
        tweets[tid] = Tweet(tid, user, " ".join(parts), tag_tuple, event=event)

    # tweets that clean to nothing (URL/mention only), exercised by ingestion
    if junk_every > 0:
        for i in range(0, n_users, junk_every):
            tid = next_id()
            tweets[tid] = Tweet(tid, users[i], "@somewhere https://t.co/x1y2z3",
                                (), event=event)

    # retweets of the hub tweets
    n_rt = rng.integers(retweets_per_user[0], retweets_per_user[1] + 1, n_users)
    rt_owner = np.repeat(np.arange(n_users), n_rt)
    rt_own = rng.random(rt_owner.shape[0]) < q
    rt_hub = rng.integers(0, hubs_per_side, rt_owner.shape[0])
    for i in range(rt_owner.shape[0]):
        user_idx = int(rt_owner[i])
        side = int(sides[user_idx]) if rt_own[i] else -int(sides[user_idx])
        hub_tid = hub_ids[side][int(rt_hub[i])]
        hub = tweets[hub_tid]
        tid = next_id()
        tweets[tid] = Tweet(tid, users[user_idx],
                            f"RT @{hub.user_id}: {hub.text}", hub.hashtags,
                            retweet_of=hub_tid, event=event)

    # reply pairs
    if n_reply_pairs is None:
        n_reply_pairs = n_users // 2
    src = rng.integers(0, n_users, n_reply_pairs)
    cross = rng.random(n_reply_pairs) < 0.5
    same_offset = rng.integers(0, half - 1, n_reply_pairs)
    other_pick = rng.integers(0, half, n_reply_pairs)
    flip = rng.random(n_reply_pairs) < reply_noise
    src_words = _mixed_pool_words(rng, sides[src], q, words_a, words_b, 3)
    src_neutral = rng.integers(0, len(NEUTRAL_WORDS), n_reply_pairs)
    src_has_tag = rng.random(n_reply_pairs) < hashtag_rate
    src_tag_idx = rng.choice(n_half_tags, size=n_reply_pairs, p=tag_p)
    marker_pick = rng.integers(0, len(FAVOR_MARKERS), size=(n_reply_pairs, 2))
    has_marker = rng.random(n_reply_pairs) < marker_rate
    own_word_idx = rng.integers(0, _WORDS_PER_POOL, size=(n_reply_pairs, 2))
    pair_labels: dict[str, int] = {}
    for i in range(n_reply_pairs):
        u = int(src[i])
        base = 0 if u < half else half
        if cross[i]:
            v = (half if u < half else 0) + int(other_pick[i])
        else:
            v = base + (u - base + 1 + int(same_offset[i])) % half
        gold = 1 if sides[u] == sides[v] else -1
        if flip[i]:
            gold = -gold
        src_parts = src_words[i] + [NEUTRAL_WORDS[src_neutral[i]]]
        src_tags: tuple[str, ...] = ()
        if src_has_tag[i]:
            tag = pick_tag(int(sides[u]), True, int(src_tag_idx[i]))
            src_parts.append(f"#{tag}")
            src_tags = (tag,)
        src_tid = next_id()
        tweets[src_tid] = Tweet(src_tid, users[u], " ".join(src_parts),
                                src_tags, event=event)
        own_pool = words_a if sides[v] == 1 else words_b
        tail = NEUTRAL_WORDS[int(marker_pick[i, 0]) % len(NEUTRAL_WORDS)]
        if has_marker[i]:
            markers = FAVOR_MARKERS if gold == 1 else OPPOSE_MARKERS
            reply_words = [markers[marker_pick[i, 0]], markers[marker_pick[i, 1]],
                           own_pool[own_word_idx[i, 0]], tail]
        elif gold == 1:
            # agreeing replies without markers echo the source's wording
            reply_words = [src_parts[0], src_parts[1],
                           own_pool[own_word_idx[i, 0]], tail]
        else:
            reply_words = [own_pool[own_word_idx[i, 0]],
                           own_pool[own_word_idx[i, 1]], tail]
        reply_tid = next_id()
        tweets[reply_tid] = Tweet(reply_tid, users[v], " ".join(reply_words),
                                  (), reply_to=src_tid, event=event)
        pair_labels[reply_tid] = gold

    corpus = TweetCorpus(tweets)
    pairs = extract_conversations(corpus)

    # stratified gold designation: both classes present whenever both exist
    gold_ids: list[str] = []
    for label in (1, -1):
        ids = sorted(tid for tid, lbl in pair_labels.items() if lbl == label)
        if ids and gold_fraction > 0:
            take = min(len(ids), math.ceil(gold_fraction * len(ids)))
            picked = rng.choice(len(ids), size=take, replace=False)
            gold_ids.extend(ids[k] for k in picked)

    params = {"n_users": n_users, "n_hashtags": n_hashtags, "polarity": polarity,
              "seed": seed, "tweets_per_user": list(tweets_per_user),
              "retweets_per_user": list(retweets_per_user),
              "n_reply_pairs": n_reply_pairs, "reply_noise": reply_noise,
              "gold_fraction": gold_fraction, "hubs_per_side": hubs_per_side,
              "words_per_tweet": words_per_tweet, "hashtag_rate": hashtag_rate,
              "junk_every": junk_every, "event": event}
    return SyntheticData(corpus=corpus, user_stance=user_stance,
                         seed_hashtags=seeds, pairs=pairs,
                         pair_labels=pair_labels,
                         gold_pair_ids=frozenset(gold_ids),
                         hashtag_side=hashtag_side, params=params)
