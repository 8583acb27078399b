import json
from pathlib import Path

import pytest

from fedtone_finetune.evaluation import evaluate
from fedtone_finetune.export import (
    ExportError,
    check_logit_parity,
    export_graphs,
    export_metadata,
    export_model,
    hidden_output_names,
)
from fedtone_finetune.phrasebank import filter_phrasebank, load_phrasebank, split_train_test
from fedtone_finetune.training import FineTuneConfig, finetune

from conftest import tiny_classifier


@pytest.fixture
def toy_result(phrasebank_dir, toy_tokenizer):
    records = filter_phrasebank(load_phrasebank(phrasebank_dir), "100%")
    config = FineTuneConfig(epochs=1, learning_rate=1e-3, batch_size=4, seed=0, max_length=32)
    model = tiny_classifier(toy_tokenizer.vocab_size, seed=0)
    return finetune(records, config, model=model, tokenizer=toy_tokenizer)


def test_hidden_output_names_cover_last_four_layers():
    assert hidden_output_names(12) == ["hidden_9", "hidden_10", "hidden_11", "hidden_12"]
    assert hidden_output_names(4) == ["hidden_1", "hidden_2", "hidden_3", "hidden_4"]


class TestMetadata:
    def test_writes_vocab_labels_manifest(self, toy_result, toy_tokenizer, tmp_path):
        export_metadata(toy_result, tmp_path, metrics=None)
        vocab_lines = (tmp_path / "vocab.txt").read_text().splitlines()
        assert len(vocab_lines) == toy_tokenizer.vocab_size
        labels = json.loads((tmp_path / "labels.json").read_text())
        assert labels == {"labels": ["positive", "negative", "neutral"]}
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["config"]["learning_rate"] == 1e-3
        assert manifest["config"]["dropout"] == 0.1
        assert len(manifest["epoch_losses"]) == 1

    def test_manifest_includes_metrics(self, phrasebank_dir, toy_result, toy_tokenizer, tmp_path):
        test = filter_phrasebank(load_phrasebank(phrasebank_dir), "75-99%")
        metrics = evaluate(toy_result.model, toy_tokenizer, test, max_length=32)
        export_metadata(toy_result, tmp_path, metrics=metrics)
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert 0.0 <= manifest["metrics"]["accuracy"] <= 1.0


class TestParityGateWiring:
    def test_failed_parity_removes_graphs(self, toy_result, tmp_path, monkeypatch):
        def fake_graphs(result, output_dir):
            paths = {
                "encoder": Path(output_dir) / "encoder.onnx",
                "classifier": Path(output_dir) / "classifier.onnx",
            }
            for path in paths.values():
                path.write_bytes(b"graph")
            return paths

        def fake_parity(result, classifier_path, records, tolerance):
            raise ExportError("logit parity failure: max deviation 1e-2 > 0.0001")

        monkeypatch.setattr("fedtone_finetune.export.export_graphs", fake_graphs)
        monkeypatch.setattr("fedtone_finetune.export.check_logit_parity", fake_parity)
        with pytest.raises(ExportError, match="parity"):
            export_model(toy_result, [object()], tmp_path)
        assert not (tmp_path / "encoder.onnx").exists()
        assert not (tmp_path / "classifier.onnx").exists()

    def test_parity_without_onnxruntime_raises_export_error(self, toy_result, tmp_path):
        pytest.importorskip("onnx")  # without onnx the graphs cannot exist at all
        try:
            import onnxruntime  # noqa: F401
            pytest.skip("onnxruntime installed; the real parity path is tested below")
        except ImportError:
            pass
        paths = export_graphs(toy_result, tmp_path)
        with pytest.raises(ExportError, match="onnxruntime"):
            check_logit_parity(toy_result, paths["classifier"], [object()])


# Everything below needs the onnx export stack, absent from minimal installs.


@pytest.fixture
def onnx_stack():
    pytest.importorskip("onnx")
    return pytest.importorskip("onnxruntime")


class TestGraphExport:
    def test_export_and_parity(self, phrasebank_dir, toy_result, tmp_path, onnx_stack):
        records = load_phrasebank(phrasebank_dir)
        _, holdout = split_train_test(records, 0.8, seed=0)
        report = export_model(toy_result, holdout, tmp_path)
        assert (tmp_path / "encoder.onnx").is_file()
        assert (tmp_path / "classifier.onnx").is_file()
        assert report["parity_max_deviation"] <= 1e-4
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["export"]["parity_max_deviation"] == report["parity_max_deviation"]

    def test_encoder_graph_serves_primary_pipeline(
        self, phrasebank_dir, toy_result, tmp_path, onnx_stack
    ):
        # the exported files are the interface to the inference package
        fedtone_embedding = pytest.importorskip("fedtone.embedding")
        fedtone_tokenizer = pytest.importorskip("fedtone.tokenizer")
        records = load_phrasebank(phrasebank_dir)
        _, holdout = split_train_test(records, 0.8, seed=0)
        export_model(toy_result, holdout, tmp_path)

        backend = fedtone_embedding.OnnxEncoderBackend(tmp_path / "encoder.onnx")
        vocab = fedtone_tokenizer.WordPieceVocab.from_file(tmp_path / "vocab.txt")
        seq = fedtone_tokenizer.tokenize(holdout[0].text, vocab)
        states = backend.last4_hidden_states(seq)
        assert states.shape[0] == 4
        assert states.shape[1] == seq.attention_length
