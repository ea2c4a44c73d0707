import json

import pytest

from stancekit.corpus import Tweet, TweetCorpus


def make_corpus(rows):
    """Corpus from (tweet_id, user_id, text, hashtags, retweet_of, reply_to) rows."""
    tweets = {}
    for row in rows:
        tid, uid, text = row[0], row[1], row[2]
        hashtags = tuple(row[3]) if len(row) > 3 else ()
        retweet_of = row[4] if len(row) > 4 else None
        reply_to = row[5] if len(row) > 5 else None
        tweets[tid] = Tweet(tid, uid, text, hashtags, retweet_of, reply_to)
    return TweetCorpus(tweets)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


@pytest.fixture
def toy_hashtag_corpus():
    # u1: #a twice; u2: #a and #b; u3: #b three times
    return make_corpus([
        ("t1", "u1", "x #a", ["a"]),
        ("t2", "u1", "y #a", ["a"]),
        ("t3", "u2", "z #a #b", ["a", "b"]),
        ("t4", "u3", "w #b", ["b"]),
        ("t5", "u3", "v #b", ["b"]),
        ("t6", "u3", "q #b", ["b"]),
    ])
