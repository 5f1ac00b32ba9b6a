from __future__ import annotations

import json
import pathlib

import pytest

from surrogate_learning.config import validate_config
from surrogate_learning.errors import ConfigError
from surrogate_learning.experiments import run_config, run_experiment

CONFIG_DIR = pathlib.Path(__file__).parent.parent / "configs"

SMALL_CORPUS = {"n_master": 3000, "n_update": 200, "name_pool_size": 300}


def _config(experiment: str, **blocks: dict) -> dict:
    return validate_config({"experiment": experiment, **blocks})


class TestCiOracleFuzz:
    def test_identities_hold(self):
        report = run_config(_config("ci-oracle-fuzz", datagen={"fuzz_trials": 100}))
        assert report.passed, report.failures
        assert report.metrics["trials"] == 100
        assert report.metrics["general_max_error"] < 1e-10
        assert report.metrics["ci_max_deviation"] < 1e-12
        assert report.metrics["monotone_violations"] == 0

    def test_rejects_inverted_cardinality_range(self):
        config = _config(
            "ci-oracle-fuzz", datagen={"fuzz_k_min": 8, "fuzz_k_max": 4}
        )
        with pytest.raises(ConfigError):
            run_config(config)

    def test_same_seed_same_report(self):
        config = _config("ci-oracle-fuzz", datagen={"fuzz_trials": 20})
        assert run_config(config).to_json() == run_config(config).to_json()

    @pytest.mark.slow
    def test_shipped_config_passes(self):
        report = run_experiment(CONFIG_DIR / "ci-oracle-fuzz.json")
        assert report.passed, report.failures
        assert report.metrics["trials"] == 1000
        assert report.metrics["general_max_error"] < 1e-10
        assert report.metrics["special_max_error"] < 1e-12
        assert report.metrics["missing_x1_max_error"] < 1e-12
        assert report.metrics["monotone_pairs"] > 99_000
        assert report.metrics["monotone_violations"] == 0


class TestExamples:
    @pytest.mark.parametrize("experiment", ["example1-posterior", "example2-scoring"])
    def test_accuracy_close_to_bayes_optimum(self, experiment):
        report = run_config(_config(experiment, datagen={"n_samples": 200_000}))
        assert report.passed, report.failures
        assert report.metrics["accuracy_gap"] < 0.01
        assert report.metrics["posterior_mean_abs_error"] < 0.05
        assert len(report.sweep) == 21

    def test_example2_counts_hundred_percent_recall(self):
        report = run_config(
            _config("example2-scoring", datagen={"n_samples": 20_000})
        )
        assert report.metrics["p_x1_given_y1"] == 1.0

    def test_logistic_predictor(self):
        report = run_config(
            _config(
                "example1-posterior",
                predictor={"kind": "logistic", "max_epochs": 500},
                datagen={"n_samples": 20_000},
            )
        )
        assert 0.5 < report.metrics["accuracy"] <= 1.0

    @pytest.mark.slow
    @pytest.mark.parametrize("experiment", ["example1-posterior", "example2-scoring"])
    def test_shipped_config_passes(self, experiment):
        assert run_experiment(CONFIG_DIR / f"{experiment}.json").passed


class TestLinkage:
    def test_report_contents(self):
        report = run_config(_config("linkage-synthetic", datagen=SMALL_CORPUS))
        assert report.metrics["update_records"] == 200
        assert report.metrics["evaluated_updates"] == 160
        assert report.threshold is not None
        assert report.config_echo["datagen"]["n_master"] == 3000

    def test_baselines_are_reported(self):
        report = run_config(
            _config(
                "linkage-baseline-comparison",
                datagen=SMALL_CORPUS,
                linkage={"baseline_fractions": [0.3]},
            )
        )
        (baseline,) = report.metrics["baselines"]
        assert baseline["labeled_fraction"] == 0.3
        assert baseline["evaluated"] == 140

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "experiment", ["linkage-synthetic", "linkage-baseline-comparison"]
    )
    def test_shipped_config_passes(self, experiment):
        report = run_experiment(CONFIG_DIR / f"{experiment}.json")
        assert report.passed, report.failures


class TestRunExperiment:
    def test_writes_report_files(self, tmp_path):
        path = tmp_path / "fuzz.json"
        path.write_text(
            json.dumps({"experiment": "ci-oracle-fuzz", "datagen": {"fuzz_trials": 10}})
        )
        report = run_experiment(path, tmp_path / "out", seed=3)
        assert report.seed == 3
        written = json.loads((tmp_path / "out" / "ci-oracle-fuzz.json").read_text())
        assert written["seed"] == 3
        assert written["passed"] is True
        assert (tmp_path / "out" / "ci-oracle-fuzz.txt").exists()

    def test_failed_checks_are_returned(self, tmp_path):
        path = tmp_path / "strict.json"
        path.write_text(
            json.dumps(
                {
                    "experiment": "example1-posterior",
                    "datagen": {"n_samples": 20_000},
                    "eval": {"accuracy_tolerance": 0.0},
                }
            )
        )
        report = run_experiment(path)
        assert not report.passed
        assert report.failures == ["accuracy within tolerance of the Bayes optimum"]
