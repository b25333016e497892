"""Tests for the Bayes rule, its theoretical report and its Monte Carlo risk."""

import math

import numpy as np
import pytest

from spikebayes.bayes import (
    BayesRule,
    LLNRow,
    RiskReport,
    decide,
    decide_homogeneous,
    decide_log_form,
    decide_many,
    decide_product_form,
    decide_shape_form,
    decision_statistic,
    default_lln_epsilon,
    estimate_bayes_risk,
    evaluation_stream,
    lln_diagnostic,
    log_likelihood_ratio,
    theoretical_report,
)
from spikebayes.errors import AssumptionError
from spikebayes.intensity import GaussianBump, Harmonic, Homogeneous, Scaled, Tabulated
from spikebayes.simulate import ClassLabel, SpikeTrain, draw_labeled_samples


# --- Helper functions ---

def _protocol_rule(T=10.0, priors=(0.5, 0.5)):
    return BayesRule(Harmonic(math.pi / 16), Harmonic(math.pi / 4), priors, T)


def _scaled_rule(d=2.0, mu=4.0, T=10.0):
    return BayesRule(Homogeneous(d), Scaled(Homogeneous(d), mu), (0.5, 0.5), T)


def _train(*times, T=10.0):
    return SpikeTrain(np.array(times, dtype=float), T)


class TestBayesRule:
    def test_derived_quantities(self):
        rule = BayesRule(Homogeneous(2.0), Homogeneous(3.0), (0.25, 0.75), 4.0)
        assert rule.tau1 == pytest.approx(8.0)
        assert rule.tau2 == pytest.approx(12.0)
        assert rule.kappa == pytest.approx(math.log(3.0))
        assert rule.gamma == pytest.approx(-4.0 + math.log(3.0))

    def test_log_ratio(self):
        rule = BayesRule(Homogeneous(2.0), Homogeneous(8.0), (0.5, 0.5), 1.0)
        assert rule.log_ratio(0.3) == pytest.approx(math.log(0.25))

    def test_log_ratio_rejects_zero_intensity(self):
        rule = BayesRule(Tabulated((0.0, 1.0, 2.0), (1.0, 0.0, 1.0)), Homogeneous(1.0), (0.5, 0.5), 2.0)
        with pytest.raises(AssumptionError):
            rule.log_ratio(1.0)

    def test_invalid_priors(self):
        with pytest.raises(ValueError):
            BayesRule(Homogeneous(1.0), Homogeneous(2.0), (0.6, 0.6), 1.0)

    def test_with_window(self):
        rule = _protocol_rule().with_window(5.0)
        assert rule.window_T == 5.0
        assert rule.model(ClassLabel.OMEGA_2) == Harmonic(math.pi / 4)
        assert rule.tau(ClassLabel.OMEGA_1) == rule.tau1


class TestDecisions:
    def test_empty_train_equal_rates_ties_to_omega1(self):
        rule = BayesRule(Homogeneous(1.0), Homogeneous(1.0), (0.5, 0.5), 3.0)
        assert decide(rule, SpikeTrain(np.empty(0), 3.0)) is ClassLabel.OMEGA_1

    def test_empty_train_favours_lower_rate(self):
        rule = BayesRule(Homogeneous(1.0), Homogeneous(2.0), (0.5, 0.5), 3.0)
        assert decide(rule, SpikeTrain(np.empty(0), 3.0)) is ClassLabel.OMEGA_1
        rule = BayesRule(Homogeneous(2.0), Homogeneous(1.0), (0.5, 0.5), 3.0)
        assert decide(rule, SpikeTrain(np.empty(0), 3.0)) is ClassLabel.OMEGA_2

    def test_many_events_favour_higher_rate(self):
        rule = BayesRule(Homogeneous(1.0), Homogeneous(4.0), (0.5, 0.5), 2.0)
        x = SpikeTrain(np.linspace(0.1, 2.0, 12), 2.0)
        assert decide(rule, x) is ClassLabel.OMEGA_2

    def test_log_likelihood_ratio(self):
        rule = BayesRule(Homogeneous(2.0), Homogeneous(1.0), (0.5, 0.5), 10.0)
        assert log_likelihood_ratio(rule, _train(1.0, 2.0, 3.0)) == pytest.approx(3 * math.log(2.0))

    def test_window_mismatch(self):
        with pytest.raises(ValueError, match="window"):
            decide(_protocol_rule(T=10.0), _train(1.0, T=5.0))

    def test_three_forms_agree(self):
        rule = _protocol_rule(priors=(0.3, 0.7))
        samples = draw_labeled_samples(rule.lambda1, rule.lambda2, rule.priors, 300, 10.0, seed=3)
        for s in samples:
            label = decide_log_form(rule, s.train)
            assert decide_shape_form(rule, s.train) is label
            assert decide_product_form(rule, s.train) is label

    def test_decision_statistic_threshold(self):
        rule = _scaled_rule()
        w, eta = decision_statistic(rule, _train(1.0, 2.0))
        # equal shapes: W = 0; eta = tau1 - tau2 + N log(tau2/tau1)
        assert w == pytest.approx(0.0, abs=1e-12)
        assert eta == pytest.approx(20.0 - 80.0 + 2 * math.log(4.0))

    @pytest.mark.parametrize("count", [0, 1, 5, 20, 60])
    def test_homogeneous_reduction(self, count):
        rule = BayesRule(Homogeneous(1.3), Homogeneous(2.9), (0.4, 0.6), 7.0)
        x = SpikeTrain(7.0 * np.arange(1, count + 1) / (count + 1), 7.0)
        assert decide(rule, x) is decide_homogeneous(1.3, 2.9, 7.0, (0.4, 0.6), count)

    def test_homogeneous_rejects_zero_rate(self):
        with pytest.raises(AssumptionError):
            decide_homogeneous(0.0, 1.0, 1.0, (0.5, 0.5), 3)

    def test_decide_many(self):
        rule = _protocol_rule()
        trains = [_train(1.0), _train(2.0, 3.0)]
        assert decide_many(rule, trains) == [decide(rule, x) for x in trains]


class TestTheoreticalReport:
    def test_scaled_pair_quantities(self):
        report = theoretical_report(_scaled_rule())
        assert report.available
        assert report.kl12 == pytest.approx(0.0, abs=1e-10)
        assert report.c_mu == pytest.approx(2.5 - 2.0)
        first = report.classes[ClassLabel.OMEGA_1]
        second = report.classes[ClassLabel.OMEGA_2]
        assert first.variance == pytest.approx(20.0 * math.log(4.0) ** 2)
        assert second.variance == pytest.approx(80.0 * math.log(4.0) ** 2)
        assert first.theta == pytest.approx(2.0 * math.log(4.0) ** 2)

    def test_thresholds_inside_interval(self):
        report = theoretical_report(_protocol_rule(priors=(0.3, 0.7)))
        for entry in report.classes.values():
            assert entry.alpha_in_interval

    def test_variance_decomposition(self):
        report = theoretical_report(_protocol_rule())
        for entry in report.classes.values():
            assert entry.variance_decomposed == pytest.approx(entry.variance, rel=1e-6)
            assert entry.variance_lower <= entry.variance * (1 + 1e-9)
            assert entry.variance <= entry.variance_upper

    def test_bounds_informative_for_separated_classes(self):
        report = theoretical_report(_protocol_rule(T=20.0))
        first = report.classes[ClassLabel.OMEGA_1]
        second = report.classes[ClassLabel.OMEGA_2]
        assert first.epsilon < 0 < second.epsilon
        assert math.isfinite(first.chebyshev_constant)
        assert report.exponential_bound < 1.0
        assert report.c1 is not None and report.c1 > 0

    def test_identical_classes_give_trivial_bounds(self):
        model = Harmonic(0.3)
        report = theoretical_report(BayesRule(model, model, (0.5, 0.5), 5.0))
        assert report.classes[ClassLabel.OMEGA_2].chebyshev_constant == math.inf
        assert report.classes[ClassLabel.OMEGA_2].exponential_rate == 0.0
        assert report.bhattacharyya == pytest.approx(0.5)

    def test_constant_pair_has_no_c_constants(self):
        model = Homogeneous(2.0)
        report = theoretical_report(BayesRule(model, model, (0.5, 0.5), 5.0))
        assert report.c1 is None and report.c2 is None
        assert "undefined" in report.note

    def test_a1_violation(self):
        rule = BayesRule(GaussianBump(300.0, 20.0), GaussianBump(600.0, 40.0), (0.5, 0.5), 10.0)
        report = theoretical_report(rule)
        assert not report.available
        assert report.note == "A1 violated"
        assert report.kl12 is None
        assert not report.classes

    def test_rows(self):
        rows = theoretical_report(_protocol_rule()).rows()
        names = {(name, cls) for name, _, cls in rows}
        assert ("tau1", "") in names
        assert ("alpha", "omega1") in names
        assert ("exponential_rate", "omega2") in names


class TestRiskReport:
    def test_statistics(self):
        report = RiskReport("bayes", 10.0, 100, 1, (0.1, 0.2, 0.3))
        assert report.runs == 3
        assert report.mean == pytest.approx(0.2)
        assert report.se == pytest.approx(0.1 / math.sqrt(3))

    def test_single_run_binomial_error(self):
        report = RiskReport("bayes", 10.0, 400, 1, (0.2,))
        assert report.se == pytest.approx(math.sqrt(0.2 * 0.8 / 400))

    def test_evaluation_stream(self):
        assert evaluation_stream(3) == ("test", 3)


class TestEstimateBayesRisk:
    def test_identical_classes_give_half(self):
        model = Harmonic(math.pi / 16)
        report = estimate_bayes_risk(BayesRule(model, model, (0.5, 0.5), 5.0), 4000, 1, seed=1)
        assert abs(report.mean - 0.5) <= 4 * report.se

    def test_reproducible_and_thread_independent(self):
        rule = _protocol_rule(T=5.0)
        a = estimate_bayes_risk(rule, 300, 3, seed=2, threads=1)
        b = estimate_bayes_risk(rule, 300, 3, seed=2, threads=2)
        assert a.risks == b.risks

    def test_risk_below_bhattacharyya_bound(self):
        rule = _protocol_rule(T=10.0)
        report = estimate_bayes_risk(rule, 2000, 3, seed=3)
        assert report.mean <= theoretical_report(rule).bhattacharyya + 2 * report.se

    @pytest.mark.slow
    def test_risk_decays_with_window(self):
        short = estimate_bayes_risk(_protocol_rule(T=2.0), 5000, 4, seed=4)
        long = estimate_bayes_risk(_protocol_rule(T=20.0), 5000, 4, seed=4)
        assert long.mean < short.mean

    @pytest.mark.parametrize("n_test, runs", [(0, 1), (10, 0)])
    def test_invalid_sizes(self, n_test, runs):
        with pytest.raises(ValueError):
            estimate_bayes_risk(_protocol_rule(), n_test, runs, seed=1)


class TestLLNDiagnostic:
    def test_rows_respect_bound(self):
        rule = _protocol_rule()
        rows = lln_diagnostic(rule, ClassLabel.OMEGA_1, (5.0, 20.0), 1000, seed=6, epsilon=0.1)
        assert [r.window_T for r in rows] == [5.0, 20.0]
        for row in rows:
            assert isinstance(row, LLNRow)
            assert row.tail_frequency <= row.bound + 4 * row.tail_se + 1e-12

    def test_identical_inhomogeneous_classes_have_zero_bound(self):
        model = Harmonic(0.3)
        rule = BayesRule(model, model, (0.5, 0.5), 5.0)
        rows = lln_diagnostic(rule, ClassLabel.OMEGA_1, (5.0,), 200, seed=0)
        assert rows[0].theta == 0.0
        assert rows[0].mean_abs == 0.0
        assert rows[0].tail_frequency == 0.0
        assert rows[0].bound == 0.0

    @pytest.mark.parametrize("label", [ClassLabel.OMEGA_1, ClassLabel.OMEGA_2])
    def test_mean_deviation_shrinks_with_window(self, label):
        rows = lln_diagnostic(_scaled_rule(), label, (5.0, 20.0, 80.0), 400, seed=12, epsilon=0.1)
        means = [r.mean_abs for r in rows]
        assert means[0] > means[1] > means[2]

    def test_identical_classes_have_zero_noise(self):
        model = Homogeneous(2.0)
        rule = BayesRule(model, model, (0.5, 0.5), 5.0)
        assert default_lln_epsilon(rule) == 0.1
        rows = lln_diagnostic(rule, ClassLabel.OMEGA_2, (5.0,), 50, seed=1)
        assert rows[0].mean_abs == pytest.approx(0.0, abs=1e-12)
        assert rows[0].tail_frequency == 0.0
        assert rows[0].bound == 0.0

    def test_invalid_epsilon(self):
        with pytest.raises(ValueError, match="epsilon"):
            lln_diagnostic(_protocol_rule(), ClassLabel.OMEGA_1, (5.0,), 10, seed=1, epsilon=0.0)
