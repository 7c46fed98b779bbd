"""Command-line interface: pipeline wiring, file outputs, exit codes."""

from __future__ import annotations

import json

import pytest

from viewgrade import io
from viewgrade.cli import main
from viewgrade.model import validate_dataset

TINY_CONFIG = {
    "synth": {
        "n_graders": 10,
        "n_submissions": 8,
        "reviews_per_grader": 4,
        "n_views": 2,
        "view_weights": [1.0, 1.0],
        "bias_counts": [2, 2],
        "bias_offset_low": 1.5,
        "bias_offset_high": 2.5,
    },
    "engine": {"iterations": 5},
    "n_runs": 2,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


@pytest.fixture
def dataset_file(tmp_path, config_file):
    out = tmp_path / "gen"
    assert main(["generate", "--config", str(config_file), "--seed", "5",
                 "--out", str(out)]) == 0
    return out / "dataset.json"


class TestGenerate:
    def test_writes_dataset_and_profile(self, tmp_path, config_file):
        out = tmp_path / "gen"
        code = main(["generate", "--config", str(config_file), "--out", str(out)])
        assert code == 0
        dataset = io.load_dataset(out / "dataset.json")
        assert validate_dataset(dataset) == []
        profile = json.loads((out / "profile.json").read_text())
        assert len(profile["profile"]) == 10 * 2

    def test_seed_makes_output_reproducible(self, tmp_path, config_file):
        for name in ("a", "b"):
            main(["generate", "--config", str(config_file), "--seed", "3",
                  "--out", str(tmp_path / name)])
        assert (tmp_path / "a" / "dataset.json").read_bytes() == (
            tmp_path / "b" / "dataset.json"
        ).read_bytes()

    def test_defaults_apply_without_config(self, tmp_path):
        out = tmp_path / "gen"
        assert main(["generate", "--out", str(out)]) == 0
        dataset = io.load_dataset(out / "dataset.json")
        assert len(dataset.graph.edges) == 300


class TestAggregate:
    @pytest.mark.parametrize("model", ["AVG", "DM1", "DM2"])
    def test_models_produce_consensus(self, tmp_path, dataset_file, model):
        out = tmp_path / f"agg_{model}"
        code = main(["aggregate", "--dataset", str(dataset_file), "--model", model,
                     "--out", str(out)])
        assert code == 0
        result = io.load_consensus(out / "consensus.json")
        assert len(result.overall) == 8

    def test_dm2_without_truth_fails_validation(self, tmp_path, dataset_file):
        dataset = io.load_dataset(dataset_file)
        from viewgrade.model import Dataset

        bare = Dataset(views=dataset.views, graph=dataset.graph,
                       grades=dataset.grades, truth=None)
        bare_path = tmp_path / "bare.json"
        io.save_dataset(bare, bare_path)
        code = main(["aggregate", "--dataset", str(bare_path), "--model", "DM2",
                     "--out", str(tmp_path / "agg")])
        assert code == 1

    def test_missing_dataset_is_a_config_error(self, tmp_path):
        code = main(["aggregate", "--dataset", str(tmp_path / "nope.json"),
                     "--model", "AVG", "--out", str(tmp_path)])
        assert code == 2

    def test_invalid_dataset_fails_validation(self, tmp_path):
        doc = {
            "views": [{"id": "v1", "label": "one", "scale_min": 0.0,
                       "scale_max": 10.0, "weight": 1.0}],
            "edges": [{"submission": "s1", "grader": "a"},
                      {"submission": "s1", "grader": "b"},
                      {"submission": "s2", "grader": "a"}],
            "grades": [
                {"submission": "s1", "grader": "a", "view": "v1", "value": 5.0},
                {"submission": "s1", "grader": "b", "view": "v1", "value": 5.0},
                {"submission": "s2", "grader": "a", "view": "v1", "value": 5.0},
            ],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code = main(["aggregate", "--dataset", str(path), "--model", "DM1",
                     "--out", str(tmp_path)])
        assert code == 1

    def test_corrupt_json_fails_validation(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code = main(["aggregate", "--dataset", str(path), "--model", "AVG",
                     "--out", str(tmp_path)])
        assert code == 1


class TestBiasPipeline:
    def test_report_then_debias_then_aggregate(self, tmp_path, dataset_file):
        report_out = tmp_path / "rep"
        assert main(["bias-report", "--dataset", str(dataset_file),
                     "--out", str(report_out)]) == 0
        rows = io.read_table(report_out / "bias_reports.csv")
        assert len(rows) == 20
        assert set(rows[0]) == set(io.BIAS_TABLE_FIELDS)

        debias_out = tmp_path / "deb"
        assert main(["debias", "--dataset", str(dataset_file),
                     "--strategy", "mean_diff", "--out", str(debias_out)]) == 0
        cleaned = io.load_dataset(debias_out / "debiased_dataset.json")
        assert validate_dataset(cleaned) == []

        agg_out = tmp_path / "agg"
        assert main(["aggregate", "--dataset",
                     str(debias_out / "debiased_dataset.json"),
                     "--model", "DM1", "--out", str(agg_out)]) == 0

        eval_out = tmp_path / "eval"
        assert main(["evaluate", "--consensus", str(agg_out / "consensus.json"),
                     "--dataset", str(dataset_file), "--model-label", "DM2",
                     "--out", str(eval_out)]) == 0
        metrics = io.read_table(eval_out / "metrics.csv")
        assert [row["scope"] for row in metrics] == ["v1", "v2", "overall"]
        assert all(row["model"] == "DM2" for row in metrics)

    def test_debias_rejects_unknown_strategy_flag(self, dataset_file, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["debias", "--dataset", str(dataset_file), "--strategy", "magic",
                  "--out", str(tmp_path)])
        assert excinfo.value.code == 2


class TestEvaluate:
    def test_requires_truth(self, tmp_path, dataset_file):
        from viewgrade.model import Dataset

        dataset = io.load_dataset(dataset_file)
        bare = Dataset(views=dataset.views, graph=dataset.graph,
                       grades=dataset.grades, truth=None)
        bare_path = tmp_path / "bare.json"
        io.save_dataset(bare, bare_path)
        agg_out = tmp_path / "agg"
        main(["aggregate", "--dataset", str(dataset_file), "--model", "AVG",
              "--out", str(agg_out)])
        code = main(["evaluate", "--consensus", str(agg_out / "consensus.json"),
                     "--dataset", str(bare_path), "--out", str(tmp_path / "ev")])
        assert code == 1


class TestExperimentCommand:
    def test_prints_summary_and_writes_artifacts(self, tmp_path, config_file, capsys):
        out = tmp_path / "exp"
        code = main(["experiment", "--config", str(config_file), "--out", str(out)])
        assert code == 0
        captured = capsys.readouterr().out
        assert "model" in captured and "AVG" in captured
        assert (out / "metrics.csv").exists()
        rows = io.read_table(out / "metrics.csv")
        assert len(rows) == 9

    def test_byte_identical_reruns_and_worker_counts(self, tmp_path, config_file):
        main(["experiment", "--config", str(config_file), "--out", str(tmp_path / "x")])
        main(["experiment", "--config", str(config_file), "--out", str(tmp_path / "y")])
        main(["experiment", "--config", str(config_file), "--workers", "2",
              "--out", str(tmp_path / "z")])
        x = (tmp_path / "x" / "metrics.csv").read_bytes()
        assert x == (tmp_path / "y" / "metrics.csv").read_bytes()
        assert x == (tmp_path / "z" / "metrics.csv").read_bytes()

    def test_head_displays_per_run_lines(self, config_file, capsys):
        code = main(["experiment", "--config", str(config_file), "--head", "1"])
        assert code == 0
        captured = capsys.readouterr().out
        assert "run" in captured
        assert " 0 " in captured

    def test_malformed_config_is_a_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{oops")
        assert main(["experiment", "--config", str(path)]) == 2

    def test_unknown_config_field_is_a_config_error(self, tmp_path):
        path = tmp_path / "typo.json"
        path.write_text(json.dumps({"run_count": 3}))
        assert main(["experiment", "--config", str(path)]) == 2

    def test_negative_seed_is_a_config_error(self, config_file):
        assert main(["experiment", "--config", str(config_file), "--seed", "-4"]) == 2


class TestBiasSweepCommand:
    def test_sweep_writes_table(self, tmp_path, config_file, capsys):
        out = tmp_path / "sweep"
        code = main(["bias-sweep", "--config", str(config_file),
                     "--counts-view1", "1,3", "--counts-view2", "1,3",
                     "--out", str(out)])
        assert code == 0
        rows = io.read_table(out / "sweep.csv")
        assert len(rows) == 4
        assert "DM1" in capsys.readouterr().out

    def test_bad_counts_are_a_config_error(self, config_file):
        assert main(["bias-sweep", "--config", str(config_file),
                     "--counts-view1", "1,zz", "--counts-view2", "1,2"]) == 2
