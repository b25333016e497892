"""Tests for thinning, seeds, training sets and the martingale helpers."""

import math

import numpy as np
import pytest

from spikebayes.intensity import GaussianBump, Harmonic, Homogeneous, integrate
from spikebayes.simulate import (
    ClassLabel,
    LabeledSample,
    SpikeTrain,
    TrainingSet,
    check_priors,
    compensator,
    derive_rng,
    derive_seed,
    draw_labeled_samples,
    dominating_rate,
    generate_training_set,
    martingale_variance,
    sample_poisson,
    stochastic_integral,
)


# --- Helper functions ---

def _train(*times, T=10.0):
    return SpikeTrain(np.array(times, dtype=float), T)


def _counts(model, T, n, seed):
    return np.array([sample_poisson(model, T, derive_rng(seed, i)).count for i in range(n)])


class TestSpikeTrain:
    def test_valid_train(self):
        x = _train(0.5, 1.0, 9.0)
        assert x.count == 3
        assert x.count_in(0.5, 9.0) == 2

    def test_empty_train(self):
        x = SpikeTrain(np.empty(0), 5.0)
        assert x.count == 0

    def test_event_at_window_end_allowed(self):
        assert _train(10.0).count == 1

    @pytest.mark.parametrize("times", [(0.0, 1.0), (1.0, 11.0), (2.0, 1.0), (1.0, 1.0)])
    def test_invalid_times(self, times):
        with pytest.raises(ValueError):
            _train(*times)

    def test_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            SpikeTrain(np.empty(0), 0.0)

    def test_times_are_read_only(self):
        x = _train(1.0, 2.0)
        with pytest.raises(ValueError):
            x.times[0] = 0.5

    def test_equality(self):
        assert _train(1.0, 2.0) == _train(1.0, 2.0)
        assert _train(1.0, 2.0) != _train(1.0, 3.0)
        assert _train(1.0, T=5.0) != _train(1.0, T=6.0)


class TestPriors:
    def test_valid(self):
        assert check_priors([0.3, 0.7]) == (0.3, 0.7)

    @pytest.mark.parametrize("priors", [(0.5, 0.6), (1.0, 0.0), (0.5,), (0.2, 0.3, 0.5)])
    def test_invalid(self, priors):
        with pytest.raises(ValueError):
            check_priors(priors)


class TestSeeds:
    def test_same_key_same_stream(self):
        a = derive_rng(7, "train", 3).random(5)
        b = derive_rng(7, "train", 3).random(5)
        assert np.array_equal(a, b)

    def test_different_keys_differ(self):
        a = derive_rng(7, "train", 3).random(5)
        b = derive_rng(7, "train", 4).random(5)
        c = derive_rng(7, "test", 3).random(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_derived_seed_is_stable_and_non_negative(self):
        assert derive_seed(1, "cv", 0) == derive_seed(1, "cv", 0)
        assert derive_seed(1, "cv", 0) != derive_seed(1, "cv", 1)
        assert derive_seed(1, "cv", 0) >= 0

    def test_negative_key_rejected(self):
        with pytest.raises(ValueError):
            derive_rng(1, -2)


class TestSamplePoisson:
    def test_events_inside_window_and_increasing(self):
        x = sample_poisson(Harmonic(math.pi / 16), 10.0, 3)
        assert x.window_T == 10.0
        assert np.all(x.times > 0) and np.all(x.times <= 10.0)
        assert np.all(np.diff(x.times) > 0)

    def test_deterministic_for_seed(self):
        model = Harmonic(math.pi / 4)
        assert sample_poisson(model, 10.0, 11) == sample_poisson(model, 10.0, 11)

    def test_zero_rate_gives_empty_train(self):
        assert sample_poisson(Homogeneous(0.0), 3.0, 1).count == 0

    def test_homogeneous_count_moments(self):
        counts = _counts(Homogeneous(2.0), 10.0, 4000, seed=5)
        se = math.sqrt(20.0 / counts.size)
        assert abs(counts.mean() - 20.0) <= 4 * se
        assert abs(counts.var(ddof=1) - 20.0) <= 4 * math.sqrt((20.0 + 2 * 400.0) / counts.size)

    @pytest.mark.parametrize("model", [Harmonic(math.pi / 16), GaussianBump(300.0, 20.0)],
                             ids=lambda m: m.label)
    def test_mean_count_matches_integral(self, model):
        T = 2.0
        counts = _counts(model, T, 3000, seed=9)
        expected = integrate(model, 0.0, T)
        assert abs(counts.mean() - expected) <= 4 * math.sqrt(expected / counts.size)

    def test_dominating_rate_exceeds_maximum(self):
        assert dominating_rate(Homogeneous(2.0), 5.0) == pytest.approx(2.002)


class TestTrainingSets:
    def test_sizes_and_labels(self):
        data = generate_training_set(Harmonic(0.2), Harmonic(0.8), (0.5, 0.5), 50, 5.0, seed=4)
        assert data.L == 50
        assert data.L1 + data.L2 == 50
        assert len(data.trains(ClassLabel.OMEGA_1)) == data.L1
        assert data.class_count(ClassLabel.OMEGA_2) == data.L2
        assert data.seed == 4

    def test_reproducible_across_thread_counts(self):
        args = (Harmonic(0.2), Harmonic(0.8), (0.3, 0.7), 20, 5.0, 8)
        serial = generate_training_set(*args, threads=1)
        pooled = generate_training_set(*args, threads=2)
        assert [s.label for s in serial.samples] == [s.label for s in pooled.samples]
        assert all(a.train == b.train for a, b in zip(serial.samples, pooled.samples))

    def test_extreme_priors_pick_one_class(self):
        samples = draw_labeled_samples(Homogeneous(1.0), Homogeneous(2.0), (1 - 1e-6, 1e-6),
                                       50, 1.0, seed=2)
        assert all(s.label is ClassLabel.OMEGA_1 for s in samples)

    def test_streams_are_independent(self):
        a = draw_labeled_samples(Homogeneous(3.0), Homogeneous(3.0), (0.5, 0.5), 5, 4.0, 1, "train")
        b = draw_labeled_samples(Homogeneous(3.0), Homogeneous(3.0), (0.5, 0.5), 5, 4.0, 1, ("test", 0))
        assert any(x.train != y.train for x, y in zip(a, b))

    def test_window_mismatch_rejected(self):
        sample = LabeledSample(_train(1.0, T=2.0), ClassLabel.OMEGA_1)
        with pytest.raises(ValueError, match="window"):
            TrainingSet((sample,), 3.0, (0.5, 0.5))

    def test_size_must_be_positive(self):
        with pytest.raises(ValueError):
            generate_training_set(Homogeneous(1.0), Homogeneous(1.0), (0.5, 0.5), 0, 1.0, 1)

    def test_other_label(self):
        assert ClassLabel.OMEGA_1.other is ClassLabel.OMEGA_2
        assert ClassLabel.OMEGA_2.other is ClassLabel.OMEGA_1


class TestMartingale:
    def test_compensator_of_constant(self):
        assert compensator(lambda t: 1.0, Homogeneous(2.0), 5.0) == pytest.approx(10.0)

    def test_stochastic_integral(self):
        x = _train(1.0, 2.0, 3.0, T=4.0)
        # sum g(t_i) - int g lambda = 6 - 2 * 8
        value = stochastic_integral(x, lambda t: np.asarray(t), Homogeneous(2.0))
        assert value == pytest.approx(6.0 - 16.0)

    def test_empty_train(self):
        x = SpikeTrain(np.empty(0), 4.0)
        assert stochastic_integral(x, np.cos, Homogeneous(1.0), compensator_value=2.5) == -2.5

    def test_variance_formula(self):
        assert martingale_variance(lambda t: 3.0, Homogeneous(2.0), 5.0) == pytest.approx(90.0)

    def test_zero_mean_and_variance_by_simulation(self):
        model = Harmonic(math.pi / 16)
        T, n = 10.0, 3000
        comp = compensator(np.sin, model, T)
        values = np.array([
            stochastic_integral(sample_poisson(model, T, derive_rng(21, i)), np.sin, model, comp)
            for i in range(n)
        ])
        variance = martingale_variance(np.sin, model, T)
        assert abs(values.mean()) <= 4 * math.sqrt(variance / n)
        assert values.var(ddof=1) == pytest.approx(variance, rel=0.1)
