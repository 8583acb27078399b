import json
import shutil

import pytest

from fedtone.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def stub_flags(corpus_dir, out_dir, seed=7, workers=1):
    return [
        "--corpus-dir", corpus_dir,
        "--output-dir", out_dir,
        "--backend-mode", "stub",
        "--hidden-size", "16",
        "--seed", str(seed),
        "--workers", str(workers),
    ]


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


class TestIngest:
    def test_writes_valid_records(self, fixture_corpus_dir, out):
        assert run("ingest", *stub_flags(fixture_corpus_dir, out)) == 0
        lines = (out / "sentences.jsonl").read_text().splitlines()
        assert lines
        for line in lines:
            rec = json.loads(line)
            assert set(rec) == {"doc_id", "date", "sent_index", "text", "word_count"}
            assert 7 <= rec["word_count"] <= 80
            assert rec["text"] == rec["text"].lower()

    def test_missing_corpus_dir_exits_2(self, tmp_path, out, capsys):
        code = run("ingest", *stub_flags(tmp_path / "nope", out))
        assert code == 2
        assert "nope" in capsys.readouterr().err

    def test_unset_corpus_dir_exits_1(self, out):
        assert run("ingest", "--output-dir", out) == 1


class TestStageOrdering:
    def test_embed_before_ingest_exits_2(self, out, capsys):
        code = run("embed", "--output-dir", out, "--backend-mode", "stub")
        assert code == 2
        assert "sentences.jsonl" in capsys.readouterr().err

    def test_series_requires_all_upstream(self, fixture_corpus_dir, out):
        assert run("ingest", *stub_flags(fixture_corpus_dir, out)) == 0
        assert run("series", "--output-dir", out) == 2

    def test_embed_rejects_cache_mode(self, fixture_corpus_dir, out):
        assert run("ingest", *stub_flags(fixture_corpus_dir, out)) == 0
        assert run("embed", "--output-dir", out, "--backend-mode", "cache") == 1


class TestStubPipeline:
    def test_stagewise_equals_run_all(self, fixture_corpus_dir, fixture_macro_csv, tmp_path):
        staged = tmp_path / "staged"
        allout = tmp_path / "allout"
        for cmd in ("ingest", "embed", "aspects", "sentiment", "series"):
            assert run(cmd, *stub_flags(fixture_corpus_dir, staged)) == 0
        assert run(
            "regress", "--output-dir", staged,
            "--macro", fixture_macro_csv, "--aspect", "growth",
        ) == 0
        assert run(
            "run-all", *stub_flags(fixture_corpus_dir, allout),
            "--macro", fixture_macro_csv, "--aspect", "growth",
        ) == 0
        for name in ("sentences.jsonl", "embeddings.jsonl", "aspects.jsonl",
                     "sentiment.jsonl", "series.csv", "regression.json"):
            assert (staged / name).read_bytes() == (allout / name).read_bytes()

    def test_cache_mode_reproduces_stub_aspects(self, fixture_corpus_dir, tmp_path):
        stub_out = tmp_path / "stub"
        cache_out = tmp_path / "cache"
        for cmd in ("ingest", "embed", "aspects"):
            assert run(cmd, *stub_flags(fixture_corpus_dir, stub_out)) == 0
        # same embeddings, but classify from the cache with precomputed anchors
        for cmd in ("ingest", "embed"):
            assert run(cmd, *stub_flags(fixture_corpus_dir, cache_out)) == 0
        from fedtone.aspects import DEFAULT_ANCHOR_SPECS, build_anchors
        from fedtone.embedding import StubBackend
        from fedtone.tokenizer import stub_vocab

        anchors = build_anchors(
            DEFAULT_ANCHOR_SPECS, StubBackend(hidden_size=16, seed=7), stub_vocab()
        )
        anchor_file = tmp_path / "anchors.json"
        anchor_file.write_text(json.dumps([
            {"label": a.label, "seeds": list(a.seed_terms), "vector": list(a.vector.vector)}
            for a in anchors
        ]))
        assert run(
            "aspects", "--output-dir", cache_out, "--backend-mode", "cache",
            "--anchors-path", anchor_file,
        ) == 0
        assert (stub_out / "aspects.jsonl").read_bytes() == (cache_out / "aspects.jsonl").read_bytes()

    def test_idempotent_rerun(self, fixture_corpus_dir, out):
        assert run("ingest", *stub_flags(fixture_corpus_dir, out)) == 0
        first = (out / "sentences.jsonl").read_bytes()
        assert run("ingest", *stub_flags(fixture_corpus_dir, out)) == 0
        assert (out / "sentences.jsonl").read_bytes() == first

    def test_failed_stage_leaves_no_partial_output(self, fixture_corpus_dir, fixture_macro_csv, out):
        for cmd in ("ingest", "embed", "aspects", "sentiment", "series"):
            assert run(cmd, *stub_flags(fixture_corpus_dir, out)) == 0
        # an aspect absent from the series -> processing error, no regression.json
        code = run(
            "regress", "--output-dir", out,
            "--macro", fixture_macro_csv, "--aspect", "weather",
        )
        assert code == 1
        assert not (out / "regression.json").exists()
        assert not (out / "regression.json.tmp").exists()

    def test_stats_and_compare_pooling(self, fixture_corpus_dir, out):
        assert run("ingest", *stub_flags(fixture_corpus_dir, out)) == 0
        assert run("stats", *stub_flags(fixture_corpus_dir, out)) == 0
        stats = json.loads((out / "corpus_stats.json").read_text())
        assert stats["n_documents"] == 5
        assert stats["sent_len_min"] >= 7
        assert stats["sent_len_max"] <= 80
        assert run("compare-pooling", *stub_flags(fixture_corpus_dir, out)) == 0
        report = json.loads((out / "pooling_report.json").read_text())
        assert {"entropy_sentence", "entropy_word"} <= set(report)


class TestConfigFile:
    def test_config_file_with_flag_override(self, fixture_corpus_dir, tmp_path):
        config = {
            "corpus_dir": str(fixture_corpus_dir),
            "backend_mode": "stub",
            "hidden_size": 16,
            "seed": 7,
            "output_dir": str(tmp_path / "from_config"),
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        override = tmp_path / "override"
        assert run("ingest", "--config", config_path, "--output-dir", override) == 0
        assert (override / "sentences.jsonl").exists()
        assert not (tmp_path / "from_config").exists()

    def test_unknown_config_key_exits_1(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text('{"corpus_dirr": "x"}')
        assert run("ingest", "--config", config_path) == 1
        assert "corpus_dirr" in capsys.readouterr().err

    def test_missing_config_file_exits_1(self, tmp_path):
        assert run("ingest", "--config", tmp_path / "none.json") == 1

    def test_bad_pooling_value_exits_1(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text('{"pooling": "tokenwise"}')
        assert run("ingest", "--config", config_path) == 1


class TestRegressFlags:
    def test_regress_with_lead_and_series_flag(self, fixture_corpus_dir, fixture_macro_csv, tmp_path):
        out = tmp_path / "out"
        assert run(
            "run-all", *stub_flags(fixture_corpus_dir, out),
            "--macro", fixture_macro_csv, "--aspect", "growth",
        ) == 0
        moved = tmp_path / "series_copy.csv"
        shutil.copy(out / "series.csv", moved)
        other = tmp_path / "other"
        assert run(
            "regress", "--output-dir", other, "--series", moved,
            "--macro", fixture_macro_csv, "--aspect", "growth",
            "--indicator", "gdp", "--lead", "1",
        ) == 0
        record = json.loads((other / "regression.json").read_text())[0]
        assert record["lead"] == 1
        assert record["indicator"] == "gdp"

    def test_regress_without_macro_exits_1(self, fixture_corpus_dir, out):
        for cmd in ("ingest", "embed", "aspects", "sentiment", "series"):
            assert run(cmd, *stub_flags(fixture_corpus_dir, out)) == 0
        assert run("regress", "--output-dir", out, "--aspect", "growth") == 1

    def test_regress_missing_macro_file_exits_2(self, fixture_corpus_dir, out, tmp_path):
        for cmd in ("ingest", "embed", "aspects", "sentiment", "series"):
            assert run(cmd, *stub_flags(fixture_corpus_dir, out)) == 0
        assert run(
            "regress", "--output-dir", out,
            "--macro", tmp_path / "missing.csv", "--aspect", "growth",
        ) == 2

    def test_plot_writes_svg(self, fixture_corpus_dir, fixture_macro_csv, out):
        assert run(
            "run-all", *stub_flags(fixture_corpus_dir, out),
            "--macro", fixture_macro_csv, "--aspect", "growth", "--plot",
        ) == 0
        svg = (out / "regression.svg").read_text()
        assert svg.lstrip().startswith("<?xml")


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert "fedtone" in capsys.readouterr().out
