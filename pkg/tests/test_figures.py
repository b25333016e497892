"""Tests for the figure harness."""

import csv
import math

import pytest

from spikebayes.config import ExperimentConfig, build_config
from spikebayes.diagnostics import DiagnosticLog
from spikebayes.errors import FigureError
from spikebayes.figures import FIGURE_COLUMNS, FIGURES, figure_rows, run_figure


# --- Helper functions ---

def _tiny(tmp_path=None, **overrides):
    values = {
        "phi_pairs": [[math.pi / 16, math.pi / 4]],
        "T_grid": [1, 2],
        "T": 2,
        "L_grid": [20],
        "bandwidth_L_grid": [20],
        "L": 20,
        "n_test": 40,
        "runs": 2,
        "bandwidth_grid": [1.0],
        "failure_T_grid": [0.5, 2.0],
    }
    if tmp_path is not None:
        values["out_dir"] = str(tmp_path)
    values.update(overrides)
    return build_config(values)


def _by(rows, **match):
    index = {name: i for i, name in enumerate(FIGURE_COLUMNS)}
    return [r for r in rows if all(r[index[k]] == v for k, v in match.items())]


class TestFigureIds:
    def test_known_ids(self):
        assert set(FIGURES) == {"bayes-risk-vs-T", "risk-vs-T-by-L", "bandwidth-vs-T",
                                "risk-vs-L-by-phi", "gaussian-failure"}

    def test_unknown_id(self):
        with pytest.raises(FigureError, match="unknown figure id 'fig9'"):
            figure_rows("fig9", ExperimentConfig())


class TestBayesRiskVsT:
    def test_rows(self):
        config = _tiny()
        rows = figure_rows("bayes-risk-vs-T", config)
        assert len(rows) == 2 * 2
        assert all(len(r) == len(FIGURE_COLUMNS) for r in rows)
        assert {r[0] for r in rows} == {"bayes-risk-vs-T"}
        assert {r[1] for r in rows} == {config.config_hash}
        assert {r[3] for r in rows} == {"phi2/phi1=4"}

        risks = _by(rows, rule="bayes", quantity="risk")
        bounds = _by(rows, rule="bhattacharyya", quantity="bound")
        assert [r[6] for r in risks] == [1.0, 2.0]
        for risk, bound in zip(risks, bounds):
            assert 0.0 <= risk[9] <= 1.0
            assert risk[10] is not None
            assert 0.0 < bound[9] <= 0.5
            assert bound[10] is None
        # The bound shrinks with the window.
        assert bounds[1][9] < bounds[0][9]

    def test_points_have_distinct_seeds(self):
        rows = figure_rows("bayes-risk-vs-T", _tiny())
        assert len({r[2] for r in _by(rows, rule="bayes")}) == 2

    def test_seed_changes_values(self):
        a = figure_rows("bayes-risk-vs-T", _tiny())
        b = figure_rows("bayes-risk-vs-T", _tiny(seed=2))
        assert [r[2] for r in a] != [r[2] for r in b]


class TestDeterminism:
    def test_csv_independent_of_threads(self, tmp_path):
        one = run_figure("bayes-risk-vs-T", _tiny(tmp_path / "one", threads=1))
        two = run_figure("bayes-risk-vs-T", _tiny(tmp_path / "two", threads=2))
        assert one.name == "bayes-risk-vs-T.csv"
        assert one.read_bytes() == two.read_bytes()

    def test_header(self, tmp_path):
        path = run_figure("bayes-risk-vs-T", _tiny(tmp_path))
        with open(path, newline="", encoding="utf-8") as f:
            header = next(csv.reader(f))
        assert tuple(header) == FIGURE_COLUMNS


class TestPluginFigures:
    def test_risk_vs_L_by_phi(self):
        rows = figure_rows("risk-vs-L-by-phi", _tiny(runs=1))
        # One Bayes reference point (risk + bound) and one plug-in point.
        assert len(rows) == 2 + 5
        plugin = _by(rows, rule="plugin")
        assert {r[5] for r in plugin} == {"risk", "agreement", "h1", "h2"}
        assert all(r[7] == 20 for r in plugin)
        assert _by(plugin, quantity="h1")[0][9] == 1.0
        assert 0.0 <= _by(plugin, quantity="agreement")[0][9] <= 1.0

    def test_risk_vs_T_by_L(self):
        rows = figure_rows("risk-vs-T-by-L", _tiny(runs=1))
        assert len(rows) == 2 * 5
        assert {r[3] for r in rows} == {"L=20"}

    @pytest.mark.slow
    def test_bandwidth_vs_T(self):
        config = _tiny(runs=2, bandwidth_grid=[0.5, 1.0, 2.0], folds=2, T_grid=[5])
        rows = figure_rows("bandwidth-vs-T", config)
        h1 = _by(rows, quantity="h1")
        assert len(h1) == 1
        assert 0.5 <= h1[0][9] <= 2.0
        loglik = _by(rows, quantity="loglik1")
        assert [r[8] for r in loglik] == [0.5, 1.0, 2.0]


class TestGaussianFailure:
    def test_rows_and_assumption_diagnostic(self):
        diagnostics = DiagnosticLog()
        config = _tiny(runs=1, n_test=20, bandwidth_grid=[0.1])
        rows = figure_rows("gaussian-failure", config, diagnostics)
        plugin_rows = [r for r in rows if r[4] != "bounds"]
        bound_rows = _by(rows, rule="bounds")
        assert len(plugin_rows) == 2 * 5
        assert len(bound_rows) == 2 * 2 * 2
        assert {r[3] for r in bound_rows} == {"omega1", "omega2"}
        # The bump has decayed far below the shape floor by T = 2.
        delta_at_2 = [r[9] for r in _by(bound_rows, quantity="delta") if r[6] == 2.0]
        assert all(d < 1e-12 for d in delta_at_2)
        assert len(diagnostics.by_category("assumption_a1")) == 2
