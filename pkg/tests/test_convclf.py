import numpy as np
import pytest

from stancekit.convclf import (
    PairFeaturizer,
    featurize_pair,
    predict_conversation,
    train_conversation_model,
)
from stancekit.corpus import ConversationPair
from stancekit.evalanalysis import f1_macro
from stancekit.modelio import load_model, save_model
from stancekit.textclf import SingleClassError, fit_vocabulary, transform


def vocab_for(*docs):
    return fit_vocabulary(list(docs), min_df=1, bigrams=False)


class TestFeaturizePair:
    def test_identical_texts_product_parallel_to_square(self):
        vocab = vocab_for("alpha beta", "beta gamma")
        text = "alpha beta beta"
        vec = featurize_pair(text, text, vocab, mode="pair")
        v = vocab.size
        reply = transform(text, vocab)
        product = {int(i) - 2 * v: x for i, x in zip(vec.indices, vec.values)
                   if i >= 2 * v}
        square = {int(i): x * x for i, x in zip(reply.indices, reply.values)}
        # product block is the elementwise square up to its own normalization
        scale = np.sqrt(sum(x * x for x in square.values()))
        for j, x in square.items():
            assert product[j] == pytest.approx(x / scale)

    def test_disjoint_texts_product_empty(self):
        vocab = vocab_for("alpha beta", "gamma delta")
        vec = featurize_pair("alpha beta", "gamma delta", vocab, mode="pair")
        assert not any(i >= 2 * vocab.size for i in vec.indices)

    def test_reply_only_mode_single_block(self):
        vocab = vocab_for("alpha beta", "gamma")
        featurizer = PairFeaturizer(vocab, mode="reply_only")
        vec = featurizer.featurize("alpha beta", "gamma")
        assert vec.dim == vocab.size
        assert featurizer.dim == vocab.size

    def test_blocks_individually_normalized(self):
        vocab = vocab_for("alpha beta gamma", "delta beta")
        vec = featurize_pair("delta beta", "alpha beta gamma", vocab, mode="pair")
        v = vocab.size
        for lo, hi in ((0, v), (v, 2 * v), (2 * v, 3 * v)):
            block = [x for i, x in zip(vec.indices, vec.values) if lo <= i < hi]
            if block:
                assert np.sqrt(sum(x * x for x in block)) == pytest.approx(1.0)

    def test_empty_texts_zero_blocks(self):
        vocab = vocab_for("alpha")
        vec = featurize_pair("", "", vocab, mode="pair")
        assert len(vec.indices) == 0

    def test_unknown_mode_rejected(self):
        vocab = vocab_for("alpha")
        with pytest.raises(ValueError):
            featurize_pair("a", "b", vocab, mode="bogus")


def synthetic_pairs(n=120, seed=0, marker_strength=1.0):
    """Pairs whose reply wording marks the label; source words carry side."""
    rng = np.random.default_rng(seed)
    favor = ["agree", "exactly", "solidarity"]
    oppose = ["wrong", "nonsense", "debunked"]
    topics = ["ranch", "city", "river", "field"]
    pairs = []
    for k in range(n):
        label = 1 if k % 2 == 0 else -1
        markers = favor if label == 1 else oppose
        use_marker = rng.random() < marker_strength
        reply_words = ([str(rng.choice(markers)), str(rng.choice(markers))]
                       if use_marker else [str(rng.choice(topics))])
        reply_words.append(str(rng.choice(topics)))
        source_words = [str(rng.choice(topics)) for _ in range(3)]
        pairs.append(ConversationPair(
            f"s{k}", f"r{k}", f"ua{k}", f"ub{k}",
            " ".join(source_words), " ".join(reply_words),
            label=label, label_kind="weak"))
    return pairs


class TestTrainConversationModel:
    def test_zero_pairs_rejected(self):
        with pytest.raises(ValueError):
            train_conversation_model([])

    def test_single_class_rejected(self):
        pairs = [p for p in synthetic_pairs(20) if p.label == 1]
        with pytest.raises(SingleClassError):
            train_conversation_model(pairs)

    def test_synthetic_heldout_f1(self):
        pairs = synthetic_pairs(160, seed=3)
        train, held = pairs[:120], pairs[120:]
        model = train_conversation_model(train, mode="pair", min_df=1)
        preds = [predict_conversation(model, p.source_text, p.reply_text)[0]
                 for p in held]
        gold = [p.label for p in held]
        assert f1_macro(preds, gold) >= 0.9

    def test_pair_features_superset_of_reply_only(self):
        pairs = synthetic_pairs(60, seed=5)
        pair_model = train_conversation_model(pairs, mode="pair", min_df=1)
        reply_model = train_conversation_model(pairs, mode="reply_only", min_df=1)
        assert pair_model.vocab.index == reply_model.vocab.index
        assert len(pair_model.weights) == 3 * len(reply_model.weights)

    def test_pair_training_accuracy_at_least_reply_only(self):
        pairs = synthetic_pairs(100, seed=7, marker_strength=0.7)

        def train_accuracy(mode):
            model = train_conversation_model(pairs, mode=mode, min_df=1)
            preds = [predict_conversation(model, p.source_text, p.reply_text)[0]
                     for p in pairs]
            return np.mean([p == q.label for p, q in zip(preds, pairs)])

        assert train_accuracy("pair") >= train_accuracy("reply_only")

    def test_determinism(self):
        pairs = synthetic_pairs(50, seed=9)
        a = train_conversation_model(pairs, min_df=1)
        b = train_conversation_model(pairs, min_df=1)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.bias == b.bias

    def test_imbalance_weighting_recovers_minority(self):
        pairs = synthetic_pairs(120, seed=11)
        skewed = [p for p in pairs if p.label == 1][:50] \
            + [p for p in pairs if p.label == -1][:10]
        model = train_conversation_model(skewed, min_df=1)
        minority = [p for p in pairs[60:] if p.label == -1]
        preds = [predict_conversation(model, p.source_text, p.reply_text)[0]
                 for p in minority]
        assert np.mean([p == -1 for p in preds]) >= 0.8


class TestPredictConversation:
    def test_all_zero_features_follow_bias_sign(self):
        pairs = synthetic_pairs(40, seed=13)
        model = train_conversation_model(pairs, min_df=1)
        label, score = predict_conversation(model, "zzz unseen", "qqq unseen")
        assert score == pytest.approx(model.bias)
        assert label == (1 if score > 0 else -1)

    def test_training_pairs_reproduced(self):
        pairs = synthetic_pairs(40, seed=15)
        model = train_conversation_model(pairs, min_df=1)
        hits = [predict_conversation(model, p.source_text, p.reply_text)[0] == p.label
                for p in pairs]
        assert np.mean(hits) >= 0.95

    def test_heldout_opposing_marker(self):
        pairs = synthetic_pairs(80, seed=17)
        model = train_conversation_model(pairs, min_df=1)
        label, _ = predict_conversation(model, "ranch field", "wrong debunked ranch")
        assert label == -1


class TestModelSerialization:
    def test_conversation_roundtrip(self, tmp_path):
        pairs = synthetic_pairs(40, seed=19)
        model = train_conversation_model(pairs, min_df=1)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.mode == model.mode
        np.testing.assert_array_equal(back.weights, model.weights)
        for p in pairs[:5]:
            assert predict_conversation(back, p.source_text, p.reply_text) == \
                predict_conversation(model, p.source_text, p.reply_text)

    def test_text_model_roundtrip(self, tmp_path):
        from stancekit.textclf import predict_score, train_linear

        vocab = fit_vocabulary(["good day", "bad night"], min_df=1, bigrams=False)
        examples = [(transform("good day", vocab), 1),
                    (transform("bad night", vocab), -1)]
        model = train_linear(examples, vocab=vocab)
        path = tmp_path / "text.json"
        save_model(model, path)
        back = load_model(path)
        assert predict_score(back, "good day") == \
            pytest.approx(predict_score(model, "good day"))
