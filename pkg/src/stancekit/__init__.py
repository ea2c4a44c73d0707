"""Weakly supervised stance labeling for polarized social-media corpora.

A few hand-labeled hashtags seed per-user stances, which spread through
the sparse user-by-entity network co-trained with a text classifier; the
resulting user stances weakly label source-reply conversations, on which
a conversation stance classifier is trained and evaluated.
"""

__version__ = "0.1.0"

from stancekit.corpus import (
    ConversationPair,
    EmptyCorpusError,
    Tweet,
    TweetCorpus,
    clean_text,
    extract_conversations,
    extract_user_documents,
    load_tweets,
)
from stancekit.cotrain import (
    CoTrainConfig,
    CoTrainResult,
    LabeledUserSet,
    add_new_labeled_examples,
    cotrain,
    joint_stance,
)
from stancekit.graph import (
    BipartiteMatrix,
    build_user_hashtag_matrix,
    build_user_retweet_matrix,
    row_normalize,
    union_matrices,
)
from stancekit.propagation import (
    StanceVector,
    network_confidence,
    propagate_to_entities,
    propagate_to_users,
    seed_user_stance,
)
from stancekit.weaklabel import conversation_label, label_conversations

__all__ = [
    "BipartiteMatrix",
    "ConversationPair",
    "CoTrainConfig",
    "CoTrainResult",
    "EmptyCorpusError",
    "LabeledUserSet",
    "StanceVector",
    "Tweet",
    "TweetCorpus",
    "add_new_labeled_examples",
    "build_user_hashtag_matrix",
    "build_user_retweet_matrix",
    "clean_text",
    "conversation_label",
    "cotrain",
    "extract_conversations",
    "extract_user_documents",
    "joint_stance",
    "label_conversations",
    "load_tweets",
    "network_confidence",
    "propagate_to_entities",
    "propagate_to_users",
    "row_normalize",
    "seed_user_stance",
    "union_matrices",
]
