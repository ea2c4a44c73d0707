"""Tweet corpus loading, text cleaning, and conversation extraction."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

_HASHTAG_RE = re.compile(r"#(\w+)")
_MENTION_RE = re.compile(r"@(\w+)")
_URL_PREFIXES = ("http://", "https://", "www.")


class EmptyCorpusError(Exception):
    """Raised when an input file yields no usable tweet records."""


@dataclass(slots=True)
class Tweet:
    tweet_id: str
    user_id: str
    text: str
    hashtags: tuple[str, ...] = ()
    retweet_of: str | None = None
    reply_to: str | None = None
    event: str = ""


@dataclass(slots=True)
class ConversationPair:
    """A (source tweet, reply tweet) pair with cleaned texts.

    ``label`` is +1 favor, -1 oppose, 0 unknown; ``label_kind`` is "gold",
    "weak", or None when unassigned.
    """

    source_tweet_id: str
    reply_tweet_id: str
    source_user: str
    reply_user: str
    source_text: str
    reply_text: str
    label: int = 0
    label_kind: str | None = None


class TweetCorpus:
    """Container of loaded tweets plus reply-edge bookkeeping.

    Instances are treated as immutable after construction and are safe to
    share across threads.
    """

    def __init__(self, tweets: dict[str, Tweet], skipped_records: int = 0,
                 duplicate_ids: int = 0):
        self.tweets = tweets
        self.skipped_records = skipped_records
        self.duplicate_ids = duplicate_ids
        self.users = frozenset(t.user_id for t in tweets.values())
        reply_index: dict[str, list[str]] = {}
        missing = 0
        for tid in sorted(tweets):
            target = tweets[tid].reply_to
            if target is None:
                continue
            if target in tweets:
                reply_index.setdefault(target, []).append(tid)
            else:
                missing += 1
        self.reply_index = reply_index
        self.missing_reply_targets = missing

    @property
    def n_tweets(self) -> int:
        return len(self.tweets)

    @property
    def n_users(self) -> int:
        return len(self.users)

    def sorted_tweet_ids(self) -> list[str]:
        return sorted(self.tweets)


def _is_url_token(token: str) -> bool:
    low = token.lower()
    return any(low.startswith(p) for p in _URL_PREFIXES)


def clean_text(raw: str | None) -> str | None:
    """Strip mention tokens, URL tokens, and leading retweet markers.

    Tokens starting with '@' and tokens with an http/https/www prefix are
    dropped; leading "rt" tokens (case-insensitive, checked after the drops
    so the rule is idempotent) are removed; whitespace is collapsed.
    Returns None when nothing remains.
    """
    if raw is None:
        return None
    kept = [tok for tok in raw.split()
            if not tok.startswith("@") and not _is_url_token(tok)]
    while kept and kept[0].lower() == "rt":
        kept.pop(0)
    if not kept:
        return None
    return " ".join(kept)


def extract_hashtags(text: str) -> list[str]:
    """Lowercased hashtag bodies found in the text, in order."""
    return [m.lower() for m in _HASHTAG_RE.findall(text)]


def extract_mentions(text: str) -> list[str]:
    """Lowercased @-handles found in the raw (pre-cleaning) text."""
    return [m.lower() for m in _MENTION_RE.findall(text)]


def extract_domains(text: str) -> list[str]:
    """Domains of URL tokens in the raw text, lowercased, www-stripped."""
    domains = []
    for tok in text.split():
        if not _is_url_token(tok):
            continue
        target = tok if "://" in tok else "http://" + tok
        netloc = urlparse(target).netloc.lower()
        if netloc.startswith("www."):
            netloc = netloc[4:]
        netloc = netloc.split(":")[0]
        if netloc:
            domains.append(netloc)
    return domains


def _normalize_hashtags(tags) -> tuple[str, ...]:
    out = []
    for tag in tags:
        tag = str(tag).strip().lstrip("#").lower()
        if tag:
            out.append(tag)
    return tuple(out)


def _field(rec: dict, *keys):
    for key in keys:
        value = rec.get(key)
        if value is not None and value != "":
            return value
    return None


def _record_to_tweet(rec: dict, default_event: str) -> Tweet | None:
    tweet_id = _field(rec, "id", "tweet_id")
    user_id = _field(rec, "user", "user_id")
    text = rec.get("text")
    if tweet_id is None or user_id is None or text is None:
        return None
    tweet_id = str(tweet_id)
    user_id = str(user_id)
    text = str(text)
    raw_tags = rec.get("hashtags")
    if raw_tags is None or raw_tags == "":
        hashtags = tuple(dict.fromkeys(extract_hashtags(text)))
    elif isinstance(raw_tags, str):
        hashtags = _normalize_hashtags(re.split(r"[\s,|]+", raw_tags.strip()))
    else:
        hashtags = _normalize_hashtags(raw_tags)
    retweet_of = _field(rec, "retweet_of")
    reply_to = _field(rec, "reply_to")
    if reply_to is not None:
        reply_to = str(reply_to)
        if reply_to == tweet_id:  # a tweet is never a reply to itself
            reply_to = None
    if retweet_of is not None:
        retweet_of = str(retweet_of)
    event = str(rec.get("event") or default_event)
    return Tweet(tweet_id, user_id, text, hashtags, retweet_of, reply_to, event)


def _iter_records(path: Path, fmt: str):
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    yield None
    elif fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                yield row
    else:
        raise ValueError(f"unknown corpus format: {fmt!r}")


def load_tweets(path, format: str | None = None, event: str = "") -> TweetCorpus:
    """Load a tweet corpus from a JSONL or CSV file.

    Records missing id/user/text are counted and skipped; duplicate tweet
    ids keep the first occurrence. Raises EmptyCorpusError when no valid
    record remains and OSError when the file cannot be read.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    tweets: dict[str, Tweet] = {}
    skipped = 0
    duplicates = 0
    for rec in _iter_records(path, format):
        tweet = _record_to_tweet(rec, event) if rec is not None else None
        if tweet is None:
            skipped += 1
            continue
        if tweet.tweet_id in tweets:
            duplicates += 1
            continue
        tweets[tweet.tweet_id] = tweet
    if not tweets:
        raise EmptyCorpusError(f"no valid tweet records in {path}")
    return TweetCorpus(tweets, skipped_records=skipped, duplicate_ids=duplicates)


def save_corpus(corpus: TweetCorpus, path) -> None:
    """Write the corpus as normalized JSONL (stable order, extracted tags)."""
    with open(path, "w", encoding="utf-8") as fh:
        for tid in corpus.sorted_tweet_ids():
            t = corpus.tweets[tid]
            rec = {"id": t.tweet_id, "user": t.user_id, "text": t.text,
                   "hashtags": list(t.hashtags)}
            if t.retweet_of:
                rec["retweet_of"] = t.retweet_of
            if t.reply_to:
                rec["reply_to"] = t.reply_to
            if t.event:
                rec["event"] = t.event
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def extract_conversations(corpus: TweetCorpus) -> list[ConversationPair]:
    """One pair per reply edge whose target exists in the corpus.

    Self-replies (same user on both sides) and pairs where either side
    cleans to empty text are dropped. Labels are left Unknown/unset.
    """
    pairs: list[ConversationPair] = []
    for reply_id in corpus.sorted_tweet_ids():
        reply = corpus.tweets[reply_id]
        target_id = reply.reply_to
        if target_id is None or target_id not in corpus.tweets:
            continue
        source = corpus.tweets[target_id]
        if source.user_id == reply.user_id:
            continue
        source_text = clean_text(source.text)
        reply_text = clean_text(reply.text)
        if not source_text or not reply_text:
            continue
        pairs.append(ConversationPair(
            source_tweet_id=target_id,
            reply_tweet_id=reply_id,
            source_user=source.user_id,
            reply_user=reply.user_id,
            source_text=source_text,
            reply_text=reply_text,
        ))
    return pairs


def extract_user_documents(corpus: TweetCorpus) -> dict[str, list[str]]:
    """Cleaned tweet texts per user, ordered by tweet id.

    Users whose every tweet cleans to empty are absent from the map.
    """
    docs: dict[str, list[str]] = {}
    for tid in corpus.sorted_tweet_ids():
        tweet = corpus.tweets[tid]
        cleaned = clean_text(tweet.text)
        if cleaned:
            docs.setdefault(tweet.user_id, []).append(cleaned)
    return docs
