import json
from pathlib import Path

import pytest

from stancekit.cli import main
from stancekit.pipeline import (
    PipelineConfig,
    PipelineError,
    StageDependencyError,
    parse_seed_spec,
    run_all,
    run_stage,
)

FIXTURE = Path(__file__).parent / "fixtures" / "minicorpus"


def fixture_config(tmp_path, **kw):
    defaults = dict(
        input=str(FIXTURE / "tweets.jsonl"),
        out=str(tmp_path / "out"),
        seeds={"taga0": 1, "tagb0": -1},
        gold_users=str(FIXTURE / "gold_users.csv"),
        gold_pairs=str(FIXTURE / "gold_pairs.jsonl"),
        topk_hashtags=50,
        topp_retweets=50,
        min_df=1,
        epochs=150,
    )
    defaults.update(kw)
    return PipelineConfig(**defaults)


class TestSeedParsing:
    def test_spec_string(self):
        assert parse_seed_spec("#ThankYouTrump:Pro, iranuprising:anti") == \
            {"thankyoutrump": 1, "iranuprising": -1}

    def test_mapping_with_numeric_values(self):
        assert parse_seed_spec({"a": 1, "b": "-1"}) == {"a": 1, "b": -1}

    def test_bad_label(self):
        with pytest.raises(ValueError):
            parse_seed_spec("tag:maybe")


class TestConfig:
    def test_defaults_match_documented_hyperparameters(self):
        cfg = PipelineConfig()
        assert (cfg.topk_hashtags, cfg.topp_retweets) == (250, 1000)
        assert (cfg.theta_u, cfg.theta_t, cfg.mix_k, cfg.iters) == \
            (0.7, 0.7, 0.2, 5)

    def test_from_file_with_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"input": "x.jsonl", "theta_u": 0.5,
                                    "seeds": {"a": "pro"}}))
        cfg = PipelineConfig.from_file(path, {"theta_u": 0.6, "out": None})
        assert cfg.input == "x.jsonl"
        assert cfg.theta_u == 0.6
        assert cfg.seeds == {"a": 1}

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(ValueError):
            PipelineConfig.from_file(path)

    def test_validation(self, tmp_path):
        with pytest.raises(ValueError):
            fixture_config(tmp_path, mode="bogus").validate()
        with pytest.raises(ValueError):
            fixture_config(tmp_path, mix_k=0.0).validate()


class TestStageMachinery:
    def test_missing_dependency_names_stage(self, tmp_path):
        cfg = fixture_config(tmp_path)
        with pytest.raises(StageDependencyError) as err:
            run_stage("cotrain", cfg)
        assert '"graph"' in str(err.value)

    def test_unknown_stage(self, tmp_path):
        with pytest.raises(PipelineError):
            run_stage("bogus", fixture_config(tmp_path))

    def test_rerun_with_same_config_skips(self, tmp_path):
        cfg = fixture_config(tmp_path)
        first = run_stage("ingest", cfg)
        assert not first.skipped
        second = run_stage("ingest", cfg)
        assert second.skipped
        forced = run_stage("ingest", cfg, force=True)
        assert not forced.skipped

    def test_config_change_triggers_rerun(self, tmp_path):
        cfg = fixture_config(tmp_path)
        run_stage("ingest", cfg)
        changed = fixture_config(tmp_path, event="renamed")
        assert not run_stage("ingest", changed).skipped

    def test_lock_blocks_concurrent_use(self, tmp_path):
        cfg = fixture_config(tmp_path)
        out = Path(cfg.out)
        out.mkdir(parents=True)
        (out / ".lock").write_text("held")
        with pytest.raises(PipelineError):
            run_stage("ingest", cfg)
        (out / ".lock").unlink()
        assert not run_stage("ingest", cfg).skipped

    def test_missing_input_file(self, tmp_path):
        cfg = fixture_config(tmp_path, input=str(tmp_path / "nope.jsonl"))
        with pytest.raises(PipelineError):
            run_stage("ingest", cfg)


class TestFullFixtureRun:
    def test_all_stages_complete(self, tmp_path):
        cfg = fixture_config(tmp_path)
        results = run_all(cfg)
        stages = [r.stage for r in results]
        assert stages == ["ingest", "graph", "cotrain", "weaklabel",
                          "train-conv", "eval", "analyze"]
        out = Path(cfg.out)
        assert (out / "cotrain" / "stance.csv").exists()
        assert (out / "weaklabel" / "weak_pairs.jsonl").exists()
        assert (out / "train-conv" / "model.json").exists()
        report = json.loads((out / "eval" / "report.json").read_text())
        assert 0.0 <= report["mean_f1_macro"] <= 1.0
        history = json.loads((out / "cotrain" / "history.json").read_text())
        assert history["iterations"][0]["metrics"]["joint"]["coverage"] > 0
        chart = json.loads((out / "analyze" / "chart_data.json").read_text())
        assert "network" in chart

        # predict stage on the gold pairs file
        cfg.predict_input = cfg.gold_pairs
        predict = run_stage("predict", cfg)
        assert not predict.skipped
        lines = (out / "predict" / "predictions.jsonl").read_text().splitlines()
        assert len(lines) == 14
        rec = json.loads(lines[0])
        assert rec["label"] in ("favor", "oppose")
        assert "score" in rec

    def test_gold_pairs_never_in_weak_training(self, tmp_path):
        cfg = fixture_config(tmp_path)
        run_all(cfg)
        weak = Path(cfg.out) / "weaklabel" / "weak_pairs.jsonl"
        weak_ids = {json.loads(line)["reply_tweet_id"]
                    for line in weak.read_text().splitlines()}
        gold_ids = {json.loads(line)["reply_tweet_id"]
                    for line in Path(cfg.gold_pairs).read_text().splitlines()}
        assert not weak_ids & gold_ids

    def test_seeds_survive_aggressive_topk_cut(self, tmp_path):
        # with one hashtag column kept, the seed columns ride force-include
        cfg = fixture_config(tmp_path, topk_hashtags=1, iters=2)
        run_stage("ingest", cfg)
        run_stage("graph", cfg)
        result = run_stage("cotrain", cfg)
        assert result.info["labeled_users"] >= 2

    def test_downstream_deletion_leaves_upstream_skippable(self, tmp_path):
        import shutil

        cfg = fixture_config(tmp_path)
        run_stage("ingest", cfg)
        run_stage("graph", cfg)
        shutil.rmtree(Path(cfg.out) / "graph")
        assert run_stage("ingest", cfg).skipped  # upstream unaffected
        assert not run_stage("graph", cfg).skipped


class TestEvalAndAnalyzeStages:
    def test_multi_event_eval_with_loo_baseline(self, tmp_path):
        cfg = fixture_config(tmp_path)
        run_all(cfg)
        # split the gold pairs across two event tags
        gold_lines = [json.loads(line) for line in
                      Path(cfg.gold_pairs).read_text().splitlines()]
        for k, rec in enumerate(gold_lines):
            rec["event"] = "alpha" if k % 2 == 0 else "beta"
        two_events = tmp_path / "gold_two_events.jsonl"
        two_events.write_text("".join(json.dumps(r) + "\n" for r in gold_lines))
        cfg.gold_pairs = str(two_events)
        cfg.loo = True
        run_stage("eval", cfg, force=True)
        report = json.loads((Path(cfg.out) / "eval" / "report.json").read_text())
        assert set(report["per_event"]) == {"alpha", "beta"}
        assert len(report["leave_one_out"]["folds"]) == 2
        assert report["mean_f1_macro"] == pytest.approx(
            sum(e["f1_macro"] for e in report["per_event"].values()) / 2)

    def test_loo_requires_two_events(self, tmp_path):
        cfg = fixture_config(tmp_path, loo=True)
        with pytest.raises(PipelineError):
            run_all(cfg)

    def test_cross_tab_artifact(self, tmp_path):
        cfg = fixture_config(tmp_path)
        for stage in ("ingest", "graph", "cotrain"):
            run_stage(stage, cfg)
        cfg.compare_stance = str(Path(cfg.out) / "cotrain" / "stance.csv")
        run_stage("analyze", cfg)
        crosstab = json.loads(
            (Path(cfg.out) / "analyze" / "crosstab.json").read_text())
        # a table crossed with itself has empty off-diagonals
        assert crosstab["counts"][0][1] == crosstab["counts"][1][0] == 0
        assert crosstab["total"] == sum(crosstab["row_marginals"])


class TestCli:
    def test_run_command(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["run", "--input", str(FIXTURE / "tweets.jsonl"),
                   "--out", str(out), "--seeds", "taga0:pro,tagb0:anti",
                   "--topk-hashtags", "50", "--topp-retweets", "50",
                   "--min-df", "1", "--iters", "2", "--epochs", "80"])
        assert rc == 0
        assert (out / "train-conv" / "model.json").exists()
        assert (out / "analyze" / "chart_data.json").exists()

    def test_stage_commands_and_exit_codes(self, tmp_path):
        out = tmp_path / "out"
        args = ["--input", str(FIXTURE / "tweets.jsonl"), "--out", str(out),
                "--seeds", "taga0:pro,tagb0:anti", "--topk-hashtags", "50",
                "--topp-retweets", "50", "--iters", "2", "--epochs", "80"]
        assert main(["ingest"] + args) == 0
        assert main(["build-graph"] + args) == 0
        assert main(["cotrain"] + args) == 0
        assert main(["weaklabel"] + args) == 0
        assert main(["train-conv"] + args) == 0
        assert (out / "train-conv" / "model.json").exists()

    def test_dependency_error_exit_code(self, tmp_path, capsys):
        rc = main(["cotrain", "--input", str(FIXTURE / "tweets.jsonl"),
                   "--out", str(tmp_path / "fresh"),
                   "--seeds", "taga0:pro,tagb0:anti"])
        assert rc == 1
        assert '"graph"' in capsys.readouterr().err

    def test_synth_command(self, tmp_path):
        rc = main(["synth", "--out", str(tmp_path / "gen"), "--n-users", "20",
                   "--n-hashtags", "8", "--seed-rng", "3"])
        assert rc == 0
        assert (tmp_path / "gen" / "tweets.jsonl").exists()

    def test_missing_iters_flag_value_fails_cleanly(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["cotrain", "--iters"])
