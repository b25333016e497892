"""Tests for the command-line interface."""

import csv

import pytest

from spikebayes.cli import main
from spikebayes.config import ExperimentConfig, default_config_text


# --- Helper functions ---

def _run(tmp_path, *args):
    main(["--out-dir", str(tmp_path), *args])


def _rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


class TestConfigCommand:
    def test_prints_resolved_config(self, capsys):
        main(["config"])
        out = capsys.readouterr().out
        assert "kernel = 'gaussian'" in out
        assert f"# config hash: {ExperimentConfig().config_hash}" in out

    def test_seed_flag_changes_hash(self, capsys):
        main(["--seed", "5", "config"])
        out = capsys.readouterr().out
        assert "seed = 5" in out
        assert ExperimentConfig().config_hash not in out

    def test_template(self, capsys):
        main(["config", "--template"])
        assert capsys.readouterr().out == default_config_text()

    def test_config_file(self, tmp_path, capsys):
        path = tmp_path / "exp.cfg"
        path.write_text("runs = 3\n", encoding="utf-8")
        main(["--config", str(path), "--set", "n_test=100", "config"])
        out = capsys.readouterr().out
        assert "runs = 3" in out and "n_test = 100" in out


class TestErrors:
    def test_bad_override_exits_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--set", "n_test=0", "config"])
        assert info.value.code == 2
        assert "Error: config field 'n_test'" in capsys.readouterr().err

    def test_unknown_key_exits_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--set", "bogus=1", "config"])
        assert info.value.code == 2
        assert "'bogus'" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["--config", str(tmp_path / "missing.cfg"), "config"])
        assert info.value.code == 2

    def test_unknown_figure_is_rejected_by_argparse(self):
        with pytest.raises(SystemExit) as info:
            main(["figure", "fig9"])
        assert info.value.code == 2

    def test_missing_dataset_exits_1(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            _run(tmp_path, "bandwidth-scan", "--dataset", str(tmp_path / "none.csv"))
        assert info.value.code == 1
        assert "Error:" in capsys.readouterr().err

    def test_malformed_dataset_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("nonsense\n", encoding="utf-8")
        (tmp_path / "bad.manifest.csv").write_text("a,b,c\n1,2,3\n", encoding="utf-8")
        with pytest.raises(SystemExit) as info:
            _run(tmp_path, "bandwidth-scan", "--dataset", str(bad))
        assert info.value.code == 1
        err = capsys.readouterr().err
        assert "Error:" in err and "not a dataset manifest" in err

    def test_empty_events_file_exits_1(self, tmp_path, capsys):
        _run(tmp_path, "--set", "L=20", "simulate")
        events = tmp_path / "dataset.csv"
        events.write_text("", encoding="utf-8")
        with pytest.raises(SystemExit) as info:
            _run(tmp_path, "bandwidth-scan", "--dataset", str(events))
        assert info.value.code == 1
        assert "expected header" in capsys.readouterr().err

    def test_verbose_and_quiet_exclusive(self):
        with pytest.raises(SystemExit):
            main(["--verbose", "--quiet", "config"])


class TestCommands:
    def test_simulate_then_scan(self, tmp_path, capsys):
        settings = ["--set", "L=20", "--set", "T=5", "--set", "folds=2",
                    "--set", "bandwidth_grid=[0.5, 1, 2]"]
        _run(tmp_path, *settings, "simulate")
        dataset = tmp_path / "dataset.csv"
        assert dataset.exists()
        assert (tmp_path / "dataset.manifest.csv").exists()
        assert "Written:" in capsys.readouterr().err

        _run(tmp_path, *settings, "bandwidth-scan", "--dataset", str(dataset))
        out = capsys.readouterr().out
        assert "omega1: h = " in out and "omega2: h = " in out
        estimate = _rows(tmp_path / "estimate.csv")
        assert estimate[0] == ["class", "t", "p_hat", "lambda_hat", "tau_hat", "h"]
        assert _rows(tmp_path / "cv.csv")[0] == ["class", "h", "fold", "log_likelihood"]

    def test_simulate_output_flag(self, tmp_path):
        target = tmp_path / "sub" / "train.csv"
        _run(tmp_path, "--set", "L=5", "simulate", "-o", str(target))
        assert target.exists()
        assert (tmp_path / "sub" / "train.manifest.csv").exists()

    def test_bayes_risk(self, tmp_path, capsys):
        _run(tmp_path, "--set", "T=2", "--set", "n_test=100", "--set", "runs=2", "bayes-risk")
        out = capsys.readouterr().out
        assert out.startswith("Bayes risk at T=2: ")
        assert "Bhattacharyya bound: " in out
        risk = _rows(tmp_path / "bayes_risk.csv")
        assert len(risk) == 1 + 2
        assert risk[1][0] == ExperimentConfig(T=2.0, n_test=100, runs=2).config_hash
        assert _rows(tmp_path / "theory.csv")[0] == ["T", "quantity", "value", "class", "seed"]

    def test_plugin_risk(self, tmp_path, capsys):
        _run(tmp_path, "--set", "L=20", "--set", "T=5", "--set", "n_test=50",
             "--set", "runs=1", "--set", "bandwidth_grid=[1]", "plugin-risk")
        out = capsys.readouterr().out
        assert "Plug-in risk at T=5, L=20: " in out
        assert "Decision agreement: " in out
        rows = _rows(tmp_path / "plugin_risk.csv")
        assert [r[1] for r in rows[1:]] == ["plugin", "bayes"]
        assert rows[1][8:] == ["1.0", "1.0"]

    def test_figure(self, tmp_path):
        _run(tmp_path, "--set", "T_grid=[1, 2]", "--set", "phi_pairs=[[pi/16, pi/4]]",
             "--set", "n_test=50", "--set", "runs=2", "figure", "bayes-risk-vs-T")
        rows = _rows(tmp_path / "bayes-risk-vs-T.csv")
        assert len(rows) == 1 + 4

    def test_validate(self, tmp_path, capsys):
        _run(tmp_path, "validate", "--check", "config_pair")
        assert capsys.readouterr().out.startswith("PASS: 2 checks")
        assert (tmp_path / "validation.json").exists()
