"""Canonical file formats: round-trips, exact field names, table headers."""

from __future__ import annotations

import json

import pytest

from viewgrade import io
from viewgrade.bias import BiasPattern, BiasReport, DebiasStrategy
from viewgrade.engine import ConsensusResult, Estimate
from viewgrade.metrics import MetricsReport
from viewgrade.model import Dataset, GradeRecord, ReviewGraph, TruthTable, ViewSpec
from viewgrade.synth import GroundTruthProfile, SynthConfig, generate


def sample_dataset(with_truth=True):
    dataset, _ = generate(
        SynthConfig(
            n_graders=6, n_submissions=5, reviews_per_grader=3, n_views=2,
            view_weights=(1.0, 0.5), bias_counts=(1, 1), seed=3,
        )
    )
    if not with_truth:
        return Dataset(
            views=dataset.views, graph=dataset.graph, grades=dataset.grades, truth=None
        )
    return dataset


class TestDatasetDocuments:
    def test_round_trip_is_exact(self, tmp_path):
        dataset = sample_dataset()
        path = tmp_path / "dataset.json"
        io.save_dataset(dataset, path)
        loaded = io.load_dataset(path)
        assert loaded == dataset

    def test_top_level_keys_are_canonical(self):
        doc = io.dataset_to_dict(sample_dataset())
        assert set(doc) == {"views", "edges", "grades", "truth"}
        assert set(doc["views"][0]) == {"id", "label", "scale_min", "scale_max", "weight"}
        assert set(doc["edges"][0]) == {"submission", "grader"}
        assert set(doc["grades"][0]) == {"submission", "grader", "view", "value"}
        assert set(doc["truth"][0]) == {"submission", "view", "value"}

    def test_truth_is_optional(self, tmp_path):
        dataset = sample_dataset(with_truth=False)
        doc = io.dataset_to_dict(dataset)
        assert "truth" not in doc
        path = tmp_path / "dataset.json"
        io.save_dataset(dataset, path)
        assert io.load_dataset(path) == dataset

    def test_full_precision_numbers(self, tmp_path):
        value = 0.1 + 0.2  # 0.30000000000000004
        dataset = Dataset(
            views=(ViewSpec("v1", "view", 0.0, 1.0, 1.0),),
            graph=ReviewGraph.from_edges([("s1", "a"), ("s1", "b"), ("s2", "a"), ("s2", "b")]),
            grades=tuple(
                GradeRecord(g, s, "v1", value)
                for s in ("s1", "s2")
                for g in ("a", "b")
            ),
            truth=TruthTable({("s1", "v1"): value, ("s2", "v1"): value}),
        )
        path = tmp_path / "dataset.json"
        io.save_dataset(dataset, path)
        loaded = io.load_dataset(path)
        assert loaded.grades[0].grade == value
        assert loaded.truth.get("s1", "v1") == value

    def test_missing_field_raises_format_error(self):
        with pytest.raises(io.FormatError, match="missing field"):
            io.dataset_from_dict({"views": [{"id": "v1"}], "edges": [], "grades": []})

    def test_writes_are_deterministic(self, tmp_path):
        dataset = sample_dataset()
        io.save_dataset(dataset, tmp_path / "a.json")
        io.save_dataset(dataset, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestConsensusDocuments:
    result = ConsensusResult(
        view_grades={
            ("s1", "v1"): Estimate(5.0, 2.0),
            ("s2", "v1"): Estimate(7.0, 2.0),
        },
        overall={"s1": 5.0, "s2": 7.0},
        grader_variances={("a", "v1"): 4.0, ("b", "v1"): 4.0},
    )

    def test_round_trip(self, tmp_path):
        path = tmp_path / "consensus.json"
        io.save_consensus(self.result, path)
        assert io.load_consensus(path) == self.result

    def test_canonical_keys(self):
        doc = io.consensus_to_dict(self.result)
        assert set(doc) == {"view_grades", "overall", "grader_variances"}
        assert set(doc["view_grades"][0]) == {"submission", "view", "value", "variance"}
        assert set(doc["overall"][0]) == {"submission", "value"}
        assert set(doc["grader_variances"][0]) == {"grader", "view", "variance"}


class TestProfileDocuments:
    def test_profile_shape(self, tmp_path):
        profile = GroundTruthProfile(
            true_variances={("a", "v1"): 0.5, ("b", "v1"): 1.25},
            injected_offsets={("a", "v1"): 0.0, ("b", "v1"): -1.5},
        )
        path = tmp_path / "profile.json"
        io.save_profile(profile, path, meta={"seed": 7})
        doc = json.loads(path.read_text())
        assert set(doc) == {"profile", "meta"}
        assert doc["profile"] == [
            {"grader": "a", "view": "v1", "true_variance": 0.5, "injected_offset": 0.0},
            {"grader": "b", "view": "v1", "true_variance": 1.25, "injected_offset": -1.5},
        ]


class TestTables:
    def test_comment_meta_then_header(self, tmp_path):
        path = tmp_path / "table.csv"
        io.write_table(
            path,
            ("a", "b"),
            [{"a": 1, "b": 2.5}],
            meta={"artifact": "demo", "config": {"x": 1}},
        )
        lines = path.read_text().splitlines()
        assert lines[0] == "# artifact: demo"
        assert lines[1] == '# config: {"x":1}'
        assert lines[2] == "a,b"
        assert io.read_table(path) == [{"a": "1", "b": "2.5"}]

    def test_bias_table_rows(self):
        report = BiasReport(
            grader_id="g1",
            view_id="v1",
            sample_count=6,
            mean_diff=1.0,
            std_diff=0.2,
            pattern=BiasPattern.POSITIVE,
            diffs=(0.8, 0.9, 1.0, 1.0, 1.1, 1.2),
        )
        unflagged = BiasReport("g2", "v1", 6, 0.0, 0.5, BiasPattern.NONE, (0.0,) * 6)
        rows = io.bias_table_rows([report, unflagged], DebiasStrategy.MIN_DIFF)
        assert list(rows[0]) == list(io.BIAS_TABLE_FIELDS)
        assert rows[0]["correction_applied"] == 0.8
        assert rows[1]["correction_applied"] == ""
        assert rows[0]["pattern"] == "positive"

    def test_metrics_table_layout(self):
        rows = io.metrics_table_rows(
            [MetricsReport(model="AVG", scope="v1", rho=0.9, sigma=0.2, rmse=0.25, n=50)],
            k=2.0,
            n_runs=100,
        )
        assert list(rows[0]) == list(io.METRICS_TABLE_FIELDS)
        assert rows[0]["k"] == 2.0
        assert rows[0]["n_runs"] == 100
