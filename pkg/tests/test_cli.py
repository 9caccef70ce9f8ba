import hashlib
import json
from pathlib import Path

import pytest

from csrminer.cli import main
from csrminer.config import config_hash, load_config, ENV_CONFIG


def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def small_run_config(tmp_path: Path, **extra) -> Path:
    cfg = {
        "seed": 5,
        "target": "customer-service",
        "split_met": False,
        "models": ["linear", "cart"],
        "min_class_size": 10,
        "kfold": 4,
        "sensitivity": {"enabled": True, "models": ["linear"]},
        "model_params": {"cart": {"max_depth": 5, "min_leaf": 5}},
        "synth": {
            "n_records": 500,
            "class_proportions": {"met_some": 0.3, "met": 0.45, "exceeded": 0.25},
            "n_agents": 20,
            "n_products": 4,
            "n_months": 12,
            "noise_sd": 0.7,
        },
    }
    cfg.update(extra)
    p = tmp_path / "config.json"
    p.write_text(json.dumps(cfg))
    return p


def make_records(tmp_path: Path, config: Path) -> Path:
    out = tmp_path / "data"
    assert main(["synth", "--config", str(config), "--out", str(out)]) == 0
    return out / "records.csv"


class TestSynthCommand:
    def test_paper_defaults_row_count(self, tmp_path):
        out = tmp_path / "synth"
        rc = main(
            [
                "synth",
                "--paper-defaults",
                "--target",
                "customer-service",
                "--seed",
                "7",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = (out / "records.csv").read_text().splitlines()
        assert len(lines) == 14671 + 1
        assert (out / "ground_truth.txt").exists()

    def test_n_zero_usage_error(self, tmp_path):
        rc = main(["synth", "--n", "0", "--out", str(tmp_path / "x")])
        assert rc == 1

    def test_determinism_identical_hash(self, tmp_path):
        cfg = small_run_config(tmp_path)
        a = make_records(tmp_path / "a", cfg)
        b = make_records(tmp_path / "b", cfg)
        assert sha(a) == sha(b)


class TestScoreCommand:
    def write_calls(self, tmp_path, rows):
        p = tmp_path / "calls.csv"
        p.write_text("agent_id,month,kind,product_id,scores\n" + "\n".join(rows) + "\n")
        return p

    def test_worked_example_scores_267(self, tmp_path):
        calls = self.write_calls(
            tmp_path, ["1,09/01/2001,customer-service,226,3 4 1 0 0 0 0 0 0 0 0"]
        )
        out = tmp_path / "scored"
        assert main(["score", "--input", str(calls), "--out", str(out)]) == 0
        body = (out / "scored.csv").read_text().splitlines()
        assert body[1] == "1,09/01/2001,customer-service,1,3,2.67,met_some,"

    def test_all_zero_row_skipped_with_log(self, tmp_path):
        calls = self.write_calls(
            tmp_path,
            [
                "1,09/01/2001,customer-service,226,0 0 0 0 0 0 0 0 0 0 0",
                "2,09/01/2001,customer-service,226,5 5 5 5 5 0 0 0 0 0 0",
            ],
        )
        out = tmp_path / "scored"
        assert main(["score", "--input", str(calls), "--out", str(out)]) == 0
        scored = (out / "scored.csv").read_text()
        assert "AllQuestionsNotApplicable" in (out / "score_skipped.csv").read_text()
        assert ",far_exceeded," in scored

    def test_boundary_475_far_exceeded(self, tmp_path):
        # 8 business-need questions averaging exactly 4.75
        calls = self.write_calls(
            tmp_path, ["9,01/01/2002,business-need,3927,5 5 5 5 5 5 4 4"]
        )
        out = tmp_path / "scored"
        assert main(["score", "--input", str(calls), "--out", str(out)]) == 0
        assert ",4.75,far_exceeded," in (out / "scored.csv").read_text()

    def test_bad_header_is_data_error(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        assert main(["score", "--input", str(p), "--out", str(tmp_path / "o")]) == 2


class TestCleanCommand:
    def test_clean_writes_retained_and_log(self, tmp_path):
        cfg = small_run_config(tmp_path)
        records = make_records(tmp_path, cfg)
        # append an invalid record by hand
        with records.open("a") as fh:
            fh.write("999,01/01/2001,0,1,3.2,3.2,100,-0.5,1,0.1\n")
        out = tmp_path / "cleaned"
        rc = main(
            [
                "clean",
                "--input",
                str(records),
                "--target",
                "customer-service",
                "--min-class-size",
                "10",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        log = (out / "rejections.csv").read_text()
        assert "NegativeTimeManagement" in log
        retained = (out / "retained.csv").read_text().splitlines()
        assert len(retained) == 501  # header + 500 valid rows

    def test_missing_input_is_data_error(self, tmp_path):
        rc = main(
            ["clean", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]
        )
        assert rc == 2


class TestRunCommand:
    def test_report_files_and_matrix_shape(self, tmp_path):
        cfg = small_run_config(tmp_path)
        records = make_records(tmp_path, cfg)
        out = tmp_path / "report"
        rc = main(
            ["run", "--input", str(records), "--config", str(cfg), "--out", str(out)]
        )
        assert rc == 0
        for name in (
            "rejections.csv",
            "matrix.csv",
            "matrix.txt",
            "sensitivity.csv",
            "sensitivity.txt",
            "manifest.json",
            "scaling.json",
        ):
            assert (out / name).exists(), name
        rows = (out / "matrix.csv").read_text().strip().splitlines()
        # 3 classes x 2 kinds + header
        assert len(rows) == 1 + 3 * 2
        models = list((out / "models").glob("*.json"))
        assert len(models) == 3 * 2

    def test_models_flag_limits_columns(self, tmp_path):
        cfg = small_run_config(tmp_path, sensitivity={"enabled": False, "models": []})
        records = make_records(tmp_path, cfg)
        out = tmp_path / "report"
        rc = main(
            [
                "run",
                "--input",
                str(records),
                "--config",
                str(cfg),
                "--models",
                "cart",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        rows = (out / "matrix.csv").read_text().strip().splitlines()
        assert len(rows) == 1 + 3  # single kind column

    def test_input_never_mutated(self, tmp_path):
        cfg = small_run_config(tmp_path, sensitivity={"enabled": False, "models": []})
        records = make_records(tmp_path, cfg)
        before = sha(records)
        out = tmp_path / "report"
        main(["run", "--input", str(records), "--config", str(cfg), "--out", str(out)])
        assert sha(records) == before

    def test_manifest_reproduces_run(self, tmp_path):
        cfg = small_run_config(tmp_path, sensitivity={"enabled": False, "models": []})
        records = make_records(tmp_path, cfg)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["run", "--input", str(records), "--config", str(cfg), "--out", str(out1)]) == 0
        manifest = out1 / "manifest.json"
        assert main(["run", "--input", str(records), "--config", str(manifest), "--out", str(out2)]) == 0
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        assert files1 == files2
        for rel in files1:
            assert sha(out1 / rel) == sha(out2 / rel), rel


class TestConfig:
    def test_env_var_fallback(self, tmp_path, monkeypatch):
        p = small_run_config(tmp_path, seed=99)
        monkeypatch.setenv(ENV_CONFIG, str(p))
        cfg = load_config()
        assert cfg["seed"] == 99

    def test_flag_overrides_config(self, tmp_path):
        p = small_run_config(tmp_path, seed=99)
        cfg = load_config(str(p), {"seed": 3})
        assert cfg["seed"] == 3

    def test_split_met_resolves_by_target(self):
        assert load_config(None, {"target": "customer-service"})["split_met"] is True
        assert load_config(None, {"target": "business-need"})["split_met"] is False

    def test_hash_stable_under_key_order(self):
        a = {"x": 1, "y": {"b": 2, "a": 3}}
        b = {"y": {"a": 3, "b": 2}, "x": 1}
        assert config_hash(a) == config_hash(b)

    def test_unknown_model_is_usage_error(self, tmp_path):
        rc = main(
            [
                "evaluate",
                "--input",
                "whatever.csv",
                "--models",
                "nonsense",
                "--out",
                str(tmp_path / "o"),
            ]
        )
        assert rc == 1


def test_console_entry_point(tmp_path):
    import subprocess, sys

    proc = subprocess.run(
        [sys.executable, "-m", "csrminer.cli", "synth", "--n", "0", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "usage error" in proc.stderr
