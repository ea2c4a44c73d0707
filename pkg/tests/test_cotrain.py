import numpy as np
import pytest

from stancekit.cotrain import (
    CoTrainConfig,
    CoTrainError,
    LabeledUser,
    LabeledUserSet,
    add_new_labeled_examples,
    cotrain,
    joint_stance,
)
from stancekit.corpus import extract_user_documents
from stancekit.graph import build_user_hashtag_matrix, build_user_retweet_matrix, union_matrices
from stancekit.propagation import (
    StanceVector,
    propagate_to_entities,
    propagate_to_users,
    seed_user_stance,
)
from stancekit.synth import generate_synthetic_corpus
from stancekit.textclf import aggregate_user_stance, fit_vocabulary, train_linear, transform
from tests.conftest import make_corpus


def brute_force_merge(ts, tc, ns, nc):
    """Independent three-case restatement of the confidence merge."""
    if tc == 0 and nc == 0:
        return 0
    elif tc >= nc:
        return ts
    else:
        return ns


class TestJointStance:
    def test_exhaustive_grid(self):
        grid = [round(0.1 * k, 1) for k in range(11)]
        for ts in (1, -1):
            for ns in (1, -1):
                for tc in grid:
                    for nc in grid:
                        assert joint_stance(ts, tc, ns, nc) == \
                            brute_force_merge(ts, tc, ns, nc)

    def test_both_zero(self):
        assert joint_stance(1, 0.0, -1, 0.0) == 0

    def test_text_wins_at_higher_confidence(self):
        assert joint_stance(1, 0.9, -1, 0.5) == 1

    def test_network_wins_at_higher_confidence(self):
        assert joint_stance(1, 0.3, -1, 0.8) == -1

    def test_tie_prefers_text(self):
        assert joint_stance(1, 0.6, -1, 0.6) == 1


def _sv(entries):
    ids = sorted(entries)
    st = [entries[i][0] for i in ids]
    cf = [entries[i][1] for i in ids]
    return StanceVector(ids, st, cf)


class TestAddNewLabeledExamples:
    def test_ceil_of_k_times_candidates(self):
        network = _sv({f"u{i}": (1, 0.1 * (i + 1)) for i in range(10)})
        text = _sv({})
        new = add_new_labeled_examples(network, text, 0.2, LabeledUserSet())
        assert len(new) == 2  # ceil(0.2 * 10)
        assert set(new) == {"u9", "u8"}  # the two most confident

    def test_conflict_resolved_by_confidence(self):
        network = _sv({"u": (1, 0.9)})
        text = _sv({"u": (-1, 0.6)})
        new = add_new_labeled_examples(network, text, 1.0, LabeledUserSet())
        assert new["u"].stance == 1
        assert new["u"].source == "network"

    def test_exact_tie_skipped(self):
        network = _sv({"u": (1, 0.7)})
        text = _sv({"u": (-1, 0.7)})
        assert add_new_labeled_examples(network, text, 1.0, LabeledUserSet()) == {}

    def test_zero_candidates(self):
        assert add_new_labeled_examples(_sv({}), _sv({}), 0.5, LabeledUserSet()) == {}

    def test_existing_entries_untouched(self):
        pool = LabeledUserSet({"u": LabeledUser(-1, 0.4, "seed")})
        network = _sv({"u": (1, 0.99), "v": (1, 0.5)})
        new = add_new_labeled_examples(network, _sv({}), 1.0, pool)
        assert "u" not in new
        pool.merge(new)
        assert pool.get("u").stance == -1

    def test_both_views_take_their_own_top(self):
        network = _sv({f"n{i}": (1, 0.5 + 0.01 * i) for i in range(5)})
        text = _sv({f"t{i}": (-1, 0.5 + 0.01 * i) for i in range(5)})
        new = add_new_labeled_examples(network, text, 0.2, LabeledUserSet())
        assert set(new) == {"n4", "t4"}

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            add_new_labeled_examples(_sv({}), _sv({}), 0.0, LabeledUserSet())


def two_sided_corpus():
    """Small two-community corpus with hashtag and text signal."""
    rows = []
    tid = 0

    def add(user, text, tags, reply_to=None):
        nonlocal tid
        rows.append((f"t{tid:03d}", user, text, tags, None, reply_to))
        tid += 1

    for i in range(6):
        u = f"p{i}"
        add(u, "freedom ranch #plustag", ["plustag"])
        add(u, "freedom rights talk", [])
        if i < 4:
            add(u, "ranch rights #plusother", ["plusother"])
    for i in range(6):
        u = f"m{i}"
        add(u, "reform city #minustag", ["minustag"])
        add(u, "reform justice talk", [])
        if i < 4:
            add(u, "city justice #minusother", ["minusother"])
    return make_corpus(rows)


SEEDS = {"plustag": 1, "minustag": -1}


def small_config(**kw):
    defaults = dict(min_df=1, bigrams=False)
    defaults.update(kw)
    return CoTrainConfig(**defaults)


class TestCoTrainLoop:
    def test_single_class_seeds_rejected(self):
        corpus = two_sided_corpus()
        i = build_user_hashtag_matrix(corpus, k=10)
        with pytest.raises(CoTrainError):
            cotrain(corpus, i, {"plustag": 1, "plusother": 1}, small_config())

    def test_empty_matrix_rejected(self):
        corpus = make_corpus([("1", "u", "no tags")])
        i = build_user_hashtag_matrix(corpus, k=3)
        with pytest.raises(CoTrainError):
            cotrain(corpus, i, SEEDS, small_config())

    def test_fixed_point_stops_at_iteration_two(self):
        # only the two seed users exist: nothing can be added after seeding
        corpus = make_corpus([
            ("1", "a", "alpha #plustag", ["plustag"]),
            ("2", "b", "beta #minustag", ["minustag"]),
        ])
        i = build_user_hashtag_matrix(corpus, k=5)
        result = cotrain(corpus, i, SEEDS, small_config())
        assert len(result.labeled) == 2
        assert all(e.source == "seed" for e in result.labeled.entries.values())
        assert result.converged
        assert result.stopped_at_iteration == 2
        assert len(result.history) == 1

    def test_pool_monotone_and_seeds_fixed(self):
        corpus = two_sided_corpus()
        i = build_user_hashtag_matrix(corpus, k=10)
        result = cotrain(corpus, i, SEEDS, small_config(max_iterations=5))
        sizes = [h.labeled_users for h in result.history]
        assert sizes == sorted(sizes)
        seed_sv = seed_user_stance(i, SEEDS)
        for user, stance, _ in seed_sv.items():
            if stance != 0:
                entry = result.labeled.get(user)
                assert entry.source == "seed"
                assert entry.stance == stance

    def test_determinism(self):
        corpus = two_sided_corpus()
        i = build_user_hashtag_matrix(corpus, k=10)
        a = cotrain(corpus, i, SEEDS, small_config())
        b = cotrain(corpus, i, SEEDS, small_config())
        assert a.stance.ids == b.stance.ids
        np.testing.assert_array_equal(a.stance.stance, b.stance.stance)
        np.testing.assert_array_equal(a.stance.confidence, b.stance.confidence)
        assert [h.labeled_users for h in a.history] == \
            [h.labeled_users for h in b.history]

    def test_two_hop_closure_with_full_mixing(self):
        # chains p0-p1-p2 and m0-m1-m2; each link is one shared hashtag
        rows = [
            ("t0", "p0", "armor base #seedpro", ["seedpro", "linka"]),
            ("t1", "p1", "armor middle", ["linka", "linkb"]),
            ("t2", "p2", "armor far", ["linkb"]),
            ("t3", "m0", "velvet base #seedcon", ["seedcon", "linkc"]),
            ("t4", "m1", "velvet middle", ["linkc", "linkd"]),
            ("t5", "m2", "velvet far", ["linkd"]),
        ]
        corpus = make_corpus(rows)
        i = build_user_hashtag_matrix(corpus, k=10)
        seeds = {"seedpro": 1, "seedcon": -1}
        cfg = small_config(theta_u=0.0, theta_h=0.0, theta_text=0.0, mix_k=1.0,
                           max_iterations=1, stop_on_no_new_labels=False)
        one = cotrain(corpus, i, seeds, cfg)
        # users sharing an entity with a seed user are labeled after one round
        assert {"p0", "p1", "m0", "m1"} <= set(one.labeled.entries)
        cfg3 = small_config(theta_u=0.0, theta_h=0.0, theta_text=0.0, mix_k=1.0,
                            max_iterations=3)
        full = cotrain(corpus, i, seeds, cfg3)
        for user in ("p0", "p1", "p2"):
            assert full.labeled.get(user).stance == 1
        for user in ("m0", "m1", "m2"):
            assert full.labeled.get(user).stance == -1

    def test_synthetic_recovery_small(self):
        data = generate_synthetic_corpus(n_users=60, n_hashtags=12, polarity=0.9,
                                         seed=4, reply_noise=0.0)
        h = build_user_hashtag_matrix(data.corpus, k=250,
                                      force_include=tuple(data.seed_hashtags))
        r = build_user_retweet_matrix(data.corpus, p=1000)
        i = union_matrices(h, r)
        result = cotrain(data.corpus, i, data.seed_hashtags,
                         CoTrainConfig(), gold_users=data.user_stance)
        preds = [(result.stance.value(u), s) for u, s in data.user_stance.items()]
        covered = [(p, s) for p, s in preds if p != 0]
        assert len(covered) / len(preds) >= 0.85
        accuracy = sum(1 for p, s in covered if p == s) / len(covered)
        assert accuracy >= 0.9
        assert result.history[-1].metrics is not None
        # merged table upholds the stance/confidence coupling invariant
        result.stance.validate()
        result.network.validate()
        result.text.validate()

    def test_seed_hashtag_leakage_switch(self):
        # text view can be denied the seed hashtag tokens; the run still
        # recovers from the remaining vocabulary and the network view
        corpus = two_sided_corpus()
        i = build_user_hashtag_matrix(corpus, k=10)
        result = cotrain(corpus, i, SEEDS,
                         small_config(exclude_seed_hashtags=True))
        assert result.stance.value("p0") == 1
        assert result.stance.value("m0") == -1

    def test_checkpoints_written(self, tmp_path):
        corpus = two_sided_corpus()
        i = build_user_hashtag_matrix(corpus, k=10)
        result = cotrain(corpus, i, SEEDS, small_config(max_iterations=2),
                         checkpoint_dir=tmp_path)
        for it in range(1, len(result.history) + 1):
            assert (tmp_path / f"iter_{it:02d}.ul.csv").exists()
            assert (tmp_path / f"iter_{it:02d}.metrics.json").exists()


class TestCompositionIdentity:
    def test_one_iteration_equals_manual_steps(self):
        corpus = two_sided_corpus()
        i = build_user_hashtag_matrix(corpus, k=10)
        cfg = small_config(max_iterations=1, stop_on_no_new_labels=False)
        result = cotrain(corpus, i, SEEDS, cfg)

        # manual pipeline, public operations only
        seed_sv = seed_user_stance(i, SEEDS)
        pool = LabeledUserSet.from_stance_vector(seed_sv, "seed")

        base_st, base_cf = np.zeros(i.n_rows, np.int8), np.zeros(i.n_rows)
        for user, entry in pool.entries.items():
            j = i.row_index[user]
            base_st[j] = entry.stance
            base_cf[j] = entry.confidence
        current = StanceVector(i.row_ids, base_st, base_cf)
        ents = propagate_to_entities(i, current, cfg.theta_h)
        prop = propagate_to_users(i, ents, cfg.theta_u)
        net_st, net_cf = prop.stance.copy(), prop.confidence.copy()
        clamp = base_st != 0
        net_st[clamp] = base_st[clamp]
        net_cf[clamp] = base_cf[clamp]
        net_sv = StanceVector(i.row_ids, net_st, net_cf)

        docs = extract_user_documents(corpus)
        doc_users = sorted(docs)
        flat = [d for u in doc_users for d in docs[u]]
        vocab = fit_vocabulary(flat, min_df=cfg.min_df, bigrams=cfg.bigrams)
        examples = []
        for u in doc_users:
            entry = pool.get(u)
            if entry is not None:
                examples.extend((transform(d, vocab), entry.stance)
                                for d in docs[u])
        model = train_linear(examples, cfg.trainer, vocab=vocab)
        text_entries = {}
        for u in doc_users:
            stance, conf = aggregate_user_stance(model, docs[u], cfg.theta_text)
            text_entries[u] = (stance, conf)
        text_sv = _sv(text_entries)

        new = add_new_labeled_examples(net_sv, text_sv, cfg.mix_k, pool)
        pool.merge(new)

        assert set(pool.entries) == set(result.labeled.entries)
        for user, entry in pool.entries.items():
            got = result.labeled.get(user)
            assert (got.stance, got.source) == (entry.stance, entry.source)
            assert got.confidence == pytest.approx(entry.confidence, abs=1e-12)
        for user in sorted(corpus.users):
            expected = joint_stance(text_sv.value(user), text_sv.conf(user),
                                    net_sv.value(user), net_sv.conf(user))
            assert result.stance.value(user) == expected
