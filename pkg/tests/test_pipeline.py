import json

import pytest

from conftest import REPO_ROOT
from eventpairs.cli import main
from eventpairs.evaluate import RaterResponse, read_task_files, write_responses
from eventpairs.pipeline import PipelineConfig, PipelineError, load_config, run_pipeline


@pytest.fixture(autouse=True)
def repo_cwd(monkeypatch):
    # mini-corpus configs use repo-relative paths
    monkeypatch.chdir(REPO_ROOT)


class TestConfig:
    def test_defaults_follow_published_values(self):
        config = PipelineConfig()
        assert config.top_k == 100
        assert config.min_pcep_hits == 100
        assert config.max_rep_hits == 100
        assert config.bigram_min_joint == 20
        assert config.protag_min_pair_freq == 5

    def test_file_plus_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"genre": "romance", "topK": 10, "seed": 3}))
        config = load_config(path, {"seed": 12, "cache": "x.tsv"})
        assert config.genre == "romance"
        assert config.top_k == 10
        assert config.seed == 12
        assert config.cache == "x.tsv"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"topk": 10}))
        with pytest.raises(ValueError, match="topk"):
            load_config(path)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError, match="top_k"):
            PipelineConfig(top_k=-1)

    def test_unknown_measure_rejected(self):
        with pytest.raises(ValueError, match="measure"):
            PipelineConfig(measure="tfidf")

    def test_order_matters_derived_from_measure(self):
        assert PipelineConfig(measure="cp").order_matters is True
        assert PipelineConfig(measure="pmi").order_matters is False

    def test_echo_omits_output_path(self):
        echo = PipelineConfig(out="/tmp/somewhere").echo()
        assert "out" not in echo
        assert echo["topK"] == 100


def mini_config(tmp_path, **overrides):
    values = dict(
        genre="action",
        measure="cp",
        seed=7,
        annotated="data/mini/corpus.jsonl",
        cache="data/mini/hits_cache.tsv",
        out=str(tmp_path / "out"),
    )
    values.update(overrides)
    return PipelineConfig(**values)


class TestRunPipeline:
    def test_counts_are_consistent(self, tmp_path):
        result = run_pipeline(mini_config(tmp_path))
        counts = result.counts
        assert counts["kept"] <= counts["ranked"] <= counts["scored"]
        assert counts["ranked"] <= 100
        assert (
            counts["kept"] + counts["droppedLowPcep"] + counts["droppedHighRep"]
            == counts["ranked"]
        )

    def test_top_k_zero_reports_zero_work(self, tmp_path):
        result = run_pipeline(mini_config(tmp_path, top_k=0))
        assert result.counts["ranked"] == 0
        assert result.counts["kept"] == 0
        assert result.counts["tasks"] == 0
        assert (tmp_path / "out" / "scored.tsv").exists()
        assert (tmp_path / "out" / "refined.tsv").exists()

    def test_missing_cache_aborts_in_refine_stage(self, tmp_path):
        config = mini_config(tmp_path, cache=str(tmp_path / "nope.tsv"))
        with pytest.raises(PipelineError) as err:
            run_pipeline(config)
        assert str(err.value).startswith("[refine]")
        # earlier artifacts are still on disk and valid
        assert (tmp_path / "out" / "stats.json").exists()
        assert (tmp_path / "out" / "scored.tsv").exists()

    def test_unknown_genre_aborts_in_load_stage(self, tmp_path):
        config = mini_config(tmp_path, genre="western")
        with pytest.raises(PipelineError) as err:
            run_pipeline(config)
        assert str(err.value).startswith("[load]")

    def test_report_written_with_config_echo(self, tmp_path):
        run_pipeline(mini_config(tmp_path))
        record = json.loads((tmp_path / "out" / "report.json").read_text())
        assert record["config"]["genre"] == "action"
        assert record["config"]["topK"] == 100
        assert "out" not in record["config"]
        assert record["configHash"]
        assert set(record["hashes"]) == {"stats", "scored", "refined", "tasks"}

    def test_figures_rendered_alongside_artifacts(self, tmp_path):
        run_pipeline(mini_config(tmp_path))
        figures = tmp_path / "out" / "figures"
        assert (figures / "scores.png").stat().st_size > 0
        assert (figures / "hits.png").stat().st_size > 0
        assert (figures / "stages.png").stat().st_size > 0

    def test_rerun_reproduces_identical_artifacts(self, tmp_path):
        config = mini_config(tmp_path)
        run_pipeline(config)
        first = (tmp_path / "out" / "refined.tsv").read_bytes()
        run_pipeline(config)
        assert (tmp_path / "out" / "refined.tsv").read_bytes() == first

    def test_pmi_run_uses_order_ignored_instructions(self, tmp_path):
        result = run_pipeline(mini_config(tmp_path, measure="pmi"))
        assert result.counts["kept"] > 0
        instructions = (tmp_path / "out" / "tasks" / "instructions.txt").read_text()
        assert "does not matter" in instructions

    @pytest.mark.parametrize("measure", ["bigram", "protag-cp"])
    def test_sparse_measures_report_zero_work_at_defaults(self, tmp_path, measure):
        # the mini corpus never reaches the bigram joint-count or
        # protagonist pair-frequency defaults, so later stages are no-ops
        result = run_pipeline(mini_config(tmp_path, measure=measure))
        assert result.counts["scored"] == 0
        assert result.counts["kept"] == 0
        assert result.counts["tasks"] == 0


class TestCliPipeline:
    def test_validate_ok(self, capsys):
        assert main(["validate", "--annotated", "data/mini/corpus.jsonl"]) == 0
        assert "12 documents OK" in capsys.readouterr().out

    def test_validate_rejects_bad_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"docId": "x", "genre": "g", "sentences": [], "coref": []}\n')
        ok = tmp_path / "bad2.jsonl"
        ok.write_text('{"docId": "x"}\n')
        assert main(["validate", "--annotated", str(ok)]) == 2
        err = capsys.readouterr().err
        assert "genre" in err or "sentences" in err

    def test_ingest_command(self, tmp_path, capsys):
        out = tmp_path / "excised.jsonl"
        assert main(["ingest", "--raw", "data/mini/raw", "--out", str(out)]) == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert [r["docId"] for r in records] == ["alley_chase", "harbor_meeting"]
        assert all("Not tonight" not in r["text"] for r in records)

    def test_stagewise_commands_chain(self, tmp_path, capsys):
        stats = tmp_path / "stats.json"
        scored = tmp_path / "scored.tsv"
        refined = tmp_path / "refined.tsv"
        tasks_dir = tmp_path / "tasks"
        assert main([
            "extract", "--annotated", "data/mini/corpus.jsonl",
            "--genre", "action", "--out", str(stats),
        ]) == 0
        assert main([
            "score", "--stats", str(stats), "--measure", "cp", "--out", str(scored),
        ]) == 0
        assert main([
            "refine", "--pairs", str(scored), "--genre-pool", str(stats),
            "--cache", "data/mini/hits_cache.tsv", "--seed", "7",
            "--out", str(refined),
        ]) == 0
        assert main([
            "eval-gen", "--kept", str(refined), "--seed", "7",
            "--order-matters", "--out", str(tasks_dir),
        ]) == 0
        _, tasks = read_task_files(tasks_dir)
        assert len(tasks) >= 2

        # answer with three unanimous raters and score them
        responses = [
            RaterResponse(f"r{i}", {tid: t.correct_side for tid, t in tasks.items()})
            for i in range(3)
        ]
        responses_path = tmp_path / "responses.tsv"
        write_responses(responses, responses_path)
        report_path = tmp_path / "evaluation.json"
        assert main([
            "eval-score", "--tasks", str(tasks_dir), "--responses", str(responses_path),
            "--drop", "0", "--out", str(report_path),
        ]) == 0
        record = json.loads(report_path.read_text())
        assert record["accuracy"] == 1.0
        assert record["accuracyPercent"] == "100.00%"
        assert (tmp_path / "rater_correlations.png").exists()

    def test_mixed_artifacts_rejected(self, tmp_path, capsys):
        action_stats = tmp_path / "action.json"
        romance_stats = tmp_path / "romance.json"
        scored = tmp_path / "scored.tsv"
        for genre, path in (("action", action_stats), ("romance", romance_stats)):
            assert main([
                "extract", "--annotated", "data/mini/corpus.jsonl",
                "--genre", genre, "--out", str(path),
            ]) == 0
        assert main([
            "score", "--stats", str(action_stats), "--measure", "cp",
            "--out", str(scored),
        ]) == 0
        assert main([
            "refine", "--pairs", str(scored), "--genre-pool", str(romance_stats),
            "--cache", "data/mini/hits_cache.tsv", "--seed", "7",
            "--out", str(tmp_path / "refined.tsv"),
        ]) == 2
        assert "different configuration" in capsys.readouterr().err

    def test_measure_mode_mismatch_rejected(self, tmp_path, capsys):
        stats = tmp_path / "stats.json"
        assert main([
            "extract", "--annotated", "data/mini/corpus.jsonl",
            "--genre", "action", "--out", str(stats),
        ]) == 0
        assert main([
            "score", "--stats", str(stats), "--measure", "protag-cp",
            "--out", str(tmp_path / "scored.tsv"),
        ]) == 2
        assert "protagonist" in capsys.readouterr().err

    def test_protagonist_extraction_and_scoring(self, tmp_path):
        stats = tmp_path / "protag.json"
        scored = tmp_path / "scored.tsv"
        assert main([
            "extract", "--annotated", "data/mini/corpus.jsonl", "--genre", "action",
            "--protagonist", "--min-pair-freq", "1", "--out", str(stats),
        ]) == 0
        assert main([
            "score", "--stats", str(stats), "--measure", "protag-cp",
            "--out", str(scored),
        ]) == 0
        body = [
            line
            for line in scored.read_text().splitlines()
            if line and not line.startswith("#")
        ]
        assert body

    def test_run_command_with_config_file(self, tmp_path, capsys):
        out = tmp_path / "run-out"
        code = main([
            "run", "--config", "data/mini/config_romance.json", "--out", str(out),
        ])
        assert code == 0
        assert (out / "report.json").exists()
        assert "pipeline done" in capsys.readouterr().out

    def test_run_missing_cache_exit_code(self, tmp_path, capsys):
        code = main([
            "run", "--config", "data/mini/config_romance.json",
            "--cache", str(tmp_path / "missing.tsv"), "--out", str(tmp_path / "o"),
        ])
        assert code == 2
        assert "[refine]" in capsys.readouterr().err

    def test_global_config_and_seed_flags(self, tmp_path):
        out = tmp_path / "global-out"
        code = main([
            "--config", "data/mini/config_romance.json", "--seed", "7",
            "run", "--out", str(out),
        ])
        assert code == 0
        record = json.loads((out / "report.json").read_text())
        assert record["config"]["seed"] == 7

    def test_live_mode_needs_endpoint(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("EVENTPAIRS_SEARCH_URL", raising=False)
        code = main([
            "run", "--config", "data/mini/config_romance.json",
            "--live", "--out", str(tmp_path / "o"),
        ])
        assert code == 2
        assert "endpoint" in capsys.readouterr().err
