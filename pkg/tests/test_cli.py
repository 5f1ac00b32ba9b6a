from __future__ import annotations

import csv
import json

import pytest

from surrogate_learning.cli import main
from surrogate_learning.const import (
    EXIT_ACCEPTANCE_FAILURE,
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
)
from surrogate_learning.oracle import DiscreteJoint
from surrogate_learning.records import LinkageCorpus


@pytest.fixture
def corpus_config(tmp_path):
    path = tmp_path / "corpus.json"
    path.write_text(
        json.dumps(
            {
                "experiment": "linkage-synthetic",
                "seed": 5,
                "datagen": {"n_master": 600, "n_update": 60, "name_pool_size": 80},
            }
        )
    )
    return path


def _rows(path):
    with path.open(newline="") as f:
        return list(csv.DictReader(f))


class TestExitCodes:
    def test_eval_requires_config(self, tmp_path):
        assert main(["--out-dir", str(tmp_path), "eval"]) == EXIT_CONFIG_ERROR

    def test_missing_config(self, tmp_path):
        code = main(["--config", str(tmp_path / "none.json"), "eval"])
        assert code == EXIT_CONFIG_ERROR

    def test_unknown_experiment(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"experiment": "example3"}))
        assert main(["--config", str(path), "eval"]) == EXIT_CONFIG_ERROR

    def test_failed_acceptance(self, tmp_path):
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
        code = main(["--config", str(path), "--out-dir", str(tmp_path), "eval"])
        assert code == EXIT_ACCEPTANCE_FAILURE
        assert (tmp_path / "example1-posterior.json").exists()

    def test_missing_input_file(self, tmp_path):
        code = main(["--out-dir", str(tmp_path), "fit", "--sample", "nowhere.csv"])
        assert code == EXIT_IO_ERROR

    def test_malformed_sample(self, tmp_path):
        sample = tmp_path / "sample.csv"
        sample.write_text("x1,x2,y\n1,not-a-number,0\n")
        code = main(["--out-dir", str(tmp_path), "fit", "--sample", str(sample)])
        assert code == EXIT_IO_ERROR

    @pytest.mark.parametrize(
        "document", ["{not json", '{"kind": "forest"}', '{"kind": "histogram"}', "[]"]
    )
    def test_unreadable_model(self, tmp_path, document):
        sample = tmp_path / "sample.csv"
        sample.write_text("x1,x2,y\n1,0.5,1\n0,-0.5,0\n")
        model = tmp_path / "model.json"
        model.write_text(document)
        args = ["score", "--sample", str(sample), "--model", str(model)]
        code = main(["--out-dir", str(tmp_path), *args, "--conditionals", "0.4", "0.8"])
        assert code == EXIT_IO_ERROR

    @pytest.mark.parametrize(
        "master", ["id,first\nM1,Ann\n", "id,last,grad_year\nM1,Smith,later\n"]
    )
    def test_unreadable_corpus(self, tmp_path, master):
        (tmp_path / "master.csv").write_text(master)
        (tmp_path / "update.csv").write_text("id,last\nU1,Smith\n")
        code = main(["--out-dir", str(tmp_path), "link", "--corpus", str(tmp_path)])
        assert code == EXIT_IO_ERROR

    def test_usage_error(self):
        with pytest.raises(SystemExit):
            main(["score"])


class TestGenerate:
    def test_corpus(self, tmp_path, corpus_config):
        out = tmp_path / "corpus"
        assert main(["--config", str(corpus_config), "--out-dir", str(out), "gen"]) == 0
        corpus = LinkageCorpus.read_csv(out)
        assert len(corpus.master) == 600
        assert len(corpus.update) == 60

    def test_seed_flag_changes_output(self, tmp_path, corpus_config):
        for seed in ("1", "2"):
            args = ["--config", str(corpus_config), "--seed", seed]
            main([*args, "--out-dir", str(tmp_path / seed), "gen"])
        first = (tmp_path / "1" / "master.csv").read_bytes()
        assert first != (tmp_path / "2" / "master.csv").read_bytes()

    def test_joint(self, tmp_path):
        assert main(["--out-dir", str(tmp_path), "gen", "joint", "-k", "5"]) == EXIT_OK
        joint = DiscreteJoint.from_json((tmp_path / "joint.json").read_text())
        assert joint.k == 5


class TestFitAndScore:
    def test_example_pipeline(self, tmp_path):
        out = str(tmp_path)
        assert main(["--out-dir", out, "gen", "example2", "-n", "5000"]) == EXIT_OK
        sample = tmp_path / "sample.csv"
        assert len(_rows(sample)) == 5000

        assert main(["--out-dir", out, "fit", "--sample", str(sample)]) == EXIT_OK
        model = json.loads((tmp_path / "model.json").read_text())
        assert model["kind"] == "histogram"

        args = ["--out-dir", out, "score", "--sample", str(sample)]
        args += ["--model", str(tmp_path / "model.json"), "--labeled", str(sample)]
        code = main([*args, "--mode", "hundred_percent_recall"])
        assert code == EXIT_OK
        rows = _rows(tmp_path / "scores.csv")
        assert len(rows) == 5000
        assert all(0.0 <= float(r["score"]) <= 1.0 for r in rows)
        assert all(float(r["score"]) == 0.0 for r in rows if r["x1"] == "0")

    def test_explicit_conditionals(self, tmp_path):
        out = str(tmp_path)
        main(["--out-dir", out, "gen", "example1", "-n", "2000"])
        main(["--out-dir", out, "fit", "--sample", str(tmp_path / "sample.csv")])
        args = ["--out-dir", out, "score", "--sample", str(tmp_path / "sample.csv")]
        args += ["--model", str(tmp_path / "model.json")]
        code = main([*args, "--conditionals", "0.4", "0.8"])
        assert code == EXIT_OK
        assert len(_rows(tmp_path / "scores.csv")) == 2000


class TestLinkCommand:
    def test_link_generated_corpus(self, tmp_path, corpus_config, capsys):
        corpus_dir = tmp_path / "corpus"
        main(["--config", str(corpus_config), "--out-dir", str(corpus_dir), "gen"])
        args = ["--config", str(corpus_config), "--out-dir", str(tmp_path / "link")]
        code = main([*args, "link", "--corpus", str(corpus_dir)])
        assert code == EXIT_OK
        assert "precision" in capsys.readouterr().out
        rows = _rows(tmp_path / "link" / "decisions.csv")
        assert [r["update_id"] for r in rows] == [f"U{i:05d}" for i in range(60)]

    def test_baseline(self, tmp_path, corpus_config):
        args = ["--config", str(corpus_config), "--out-dir", str(tmp_path)]
        code = main([*args, "link", "--baseline", "0.5"])
        assert code == EXIT_OK
        assert (tmp_path / "decisions.csv").exists()


class TestFuzzCommand:
    def test_writes_report(self, tmp_path, capsys):
        args = ["--seed", "3", "--out-dir", str(tmp_path)]
        code = main([*args, "fuzz", "--trials", "25"])
        assert code == EXIT_OK
        report = json.loads((tmp_path / "ci-oracle-fuzz.json").read_text())
        assert report["metrics"]["trials"] == 25
        assert report["seed"] == 3
        assert "ci-oracle-fuzz" in capsys.readouterr().out


class TestDemoCommand:
    def test_runs_both_examples(self, tmp_path):
        code = main(["--out-dir", str(tmp_path), "demo", "-n", "200000"])
        assert code == EXIT_OK
        for name in ("example1-posterior", "example2-scoring"):
            report = json.loads((tmp_path / f"{name}.json").read_text())
            assert report["metrics"]["target_samples"] > 0
