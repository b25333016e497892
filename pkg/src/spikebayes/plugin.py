"""The kernel plug-in classifier and its paired Monte Carlo risk.

The plug-in rule is the shape form of the Bayes rule with the true
shapes, intensity factors and priors replaced by kernel estimates and
the empirical class frequencies L1/L, L2/L:

    omega_1  iff  sum log(p1_hat / p2_hat)(t_i)
                  >= tau1_hat - tau2_hat + N log(tau2_hat / tau1_hat) + log(L2 / L1)

Estimated shapes are floored at 1e-12 before the ratio.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from spikebayes.bayes import BayesRule, RiskReport, decide, evaluation_stream
from spikebayes.diagnostics import Diagnostic, DiagnosticLog
from spikebayes.errors import DegenerateModelError
from spikebayes.intensity import IntensityModel
from spikebayes.kernel import (
    DEFAULT_BANDWIDTH_GRID,
    DEFAULT_FOLDS,
    CVTrace,
    KernelFamily,
    KernelShapeEstimate,
    cross_validate_bandwidths,
    fit,
)
from spikebayes.parallel import parallel_map
from spikebayes.simulate import (
    ClassLabel,
    SpikeTrain,
    TrainingSet,
    check_priors,
    derive_seed,
    draw_labeled_samples,
)

logger = logging.getLogger(__name__)

SHAPE_CLIP = 1e-12
MAX_REGENERATIONS = 100


class ShapeSource(Protocol):
    def shape(self, t): ...


@dataclass(frozen=True)
class PluginClassifier:
    """Plug-in rule from estimated (or true) shapes, factors and priors."""
    shape1: ShapeSource
    shape2: ShapeSource
    tau1: float
    tau2: float
    priors: tuple[float, float]
    window_T: float

    def __post_init__(self) -> None:
        for name, tau in (("tau1", self.tau1), ("tau2", self.tau2)):
            if not tau > 0:
                raise DegenerateModelError(
                    f"{name} = {tau!r}: a class with no training events cannot be classified"
                )
        object.__setattr__(self, "priors", check_priors(self.priors))

    @classmethod
    def from_estimate(cls, estimate: KernelShapeEstimate) -> PluginClassifier:
        first = estimate[ClassLabel.OMEGA_1]
        second = estimate[ClassLabel.OMEGA_2]
        L = first.L + second.L
        return cls(first, second, first.tau_hat, second.tau_hat,
                   (first.L / L, second.L / L), estimate.window_T)

    @classmethod
    def from_truth(cls, rule: BayesRule) -> PluginClassifier:
        return cls(rule.shape1, rule.shape2, rule.tau1, rule.tau2, rule.priors, rule.window_T)

    @property
    def threshold_offset(self) -> float:
        """tau1 - tau2 + log(pi2 / pi1); eta = offset + N log(tau2 / tau1)."""
        return self.tau1 - self.tau2 + math.log(self.priors[1] / self.priors[0])


def _log_shape_ratio(c: PluginClassifier, times: np.ndarray) -> np.ndarray:
    p1 = np.maximum(np.asarray(c.shape1.shape(times), dtype=float), SHAPE_CLIP)
    p2 = np.maximum(np.asarray(c.shape2.shape(times), dtype=float), SHAPE_CLIP)
    return np.log(p1) - np.log(p2)


def classify_many(c: PluginClassifier, trains: Sequence[SpikeTrain]) -> list[ClassLabel]:
    """Plug-in decisions for a batch; shapes are evaluated once over all events."""
    for x in trains:
        if x.window_T != c.window_T:
            raise ValueError(
                f"train window {x.window_T!r} does not match classifier window {c.window_T!r}"
            )
    counts = [x.count for x in trains]
    if sum(counts):
        ratios = _log_shape_ratio(c, np.concatenate([x.times for x in trains if x.count]))
    else:
        ratios = np.empty(0)
    log_tau = math.log(c.tau2 / c.tau1)
    labels = []
    start = 0
    for n in counts:
        w = float(np.sum(ratios[start:start + n])) if n else 0.0
        start += n
        eta = c.threshold_offset + n * log_tau
        labels.append(ClassLabel.OMEGA_1 if w >= eta else ClassLabel.OMEGA_2)
    return labels


def classify(c: PluginClassifier, x: SpikeTrain) -> ClassLabel:
    return classify_many(c, [x])[0]


# --- Risk ---

@dataclass(frozen=True)
class PluginRiskReport:
    """Plug-in risk with the Bayes risk measured on the same test draws."""
    plugin: RiskReport
    bayes: RiskReport
    agreement: tuple[float, ...]
    class_sizes: tuple[tuple[int, int], ...]

    @property
    def agreement_rate(self) -> float:
        return float(np.mean(self.agreement))

    @property
    def gap(self) -> float:
        return self.plugin.mean - self.bayes.mean


@dataclass(frozen=True)
class _PluginRunTask:
    rule: BayesRule
    L: int
    family: KernelFamily
    grid: tuple[float, ...]
    folds: int
    n_test: int
    seed: int
    run: int


@dataclass(frozen=True)
class _PluginRun:
    plugin_risk: float
    bayes_risk: float
    agreement: float
    bandwidths: tuple[float, float]
    class_sizes: tuple[int, int]
    diagnostics: tuple[Diagnostic, ...]


def draw_training_set(rule: BayesRule, L: int, seed: int, run: int,
                      notes: list[Diagnostic]) -> TrainingSet:
    """Training set for one run; redrawn while either class is empty."""
    for attempt in range(MAX_REGENERATIONS):
        samples = draw_labeled_samples(
            rule.lambda1, rule.lambda2, rule.priors, L, rule.window_T,
            seed, ("train", run, attempt),
        )
        data = TrainingSet(tuple(samples), rule.window_T, rule.priors, seed)
        if data.L1 and data.L2:
            return data
        notes.append(Diagnostic(
            "class_regenerated",
            f"training set with L1={data.L1}, L2={data.L2} regenerated",
            f"run {run}",
        ))
    raise DegenerateModelError(
        f"no training set with both classes after {MAX_REGENERATIONS} draws (L={L})"
    )


def select_bandwidth(data: TrainingSet, label: ClassLabel, family: KernelFamily,
                     grid: Sequence[float], folds: int, seed: int, run: int,
                     notes: list[Diagnostic]) -> tuple[float, CVTrace | None]:
    """CV bandwidth for one class of one run, with the small-class fallbacks.

    Folds shrink to the class size (at least 2); a single-sample class
    gets the geometric midpoint of the grid.
    """
    context = f"run {run} class {label.name}"
    if len(grid) == 1:
        return float(grid[0]), None
    n = data.class_count(label)
    if n < 2:
        h = math.sqrt(min(grid) * max(grid))
        notes.append(Diagnostic("bandwidth_fallback",
                                f"{n} sample(s); using grid midpoint h={h:.4g}", context))
        return h, None
    if n < folds:
        folds = max(2, n)
        notes.append(Diagnostic("folds_reduced", f"{n} samples; folds reduced to {folds}", context))
    try:
        trace = cross_validate_bandwidths(data, label, family, grid, folds,
                                          derive_seed(seed, "cv", run))
    except DegenerateModelError as exc:
        h = max(grid)
        notes.append(Diagnostic("bandwidth_fallback", f"{exc}; using h={h:.4g}", context))
        return h, None
    if trace.at_grid_edge:
        notes.append(Diagnostic("bandwidth_edge",
                                f"selected h={trace.chosen:.4g} at the edge of the grid", context))
    return trace.chosen, trace


def _plugin_run(task: _PluginRunTask) -> _PluginRun:
    rule = task.rule
    notes: list[Diagnostic] = []
    data = draw_training_set(rule, task.L, task.seed, task.run, notes)
    h1, _ = select_bandwidth(data, ClassLabel.OMEGA_1, task.family, task.grid,
                             task.folds, task.seed, task.run, notes)
    h2, _ = select_bandwidth(data, ClassLabel.OMEGA_2, task.family, task.grid,
                             task.folds, task.seed, task.run, notes)
    classifier = PluginClassifier.from_estimate(fit(data, task.family, (h1, h2)))

    tests = draw_labeled_samples(
        rule.lambda1, rule.lambda2, rule.priors, task.n_test, rule.window_T,
        task.seed, evaluation_stream(task.run),
    )
    trains = [s.train for s in tests]
    plugin_labels = classify_many(classifier, trains)
    bayes_labels = [decide(rule, x) for x in trains]
    truth = [s.label for s in tests]
    n = task.n_test
    return _PluginRun(
        plugin_risk=sum(p is not y for p, y in zip(plugin_labels, truth)) / n,
        bayes_risk=sum(b is not y for b, y in zip(bayes_labels, truth)) / n,
        agreement=sum(p is b for p, b in zip(plugin_labels, bayes_labels)) / n,
        bandwidths=(h1, h2),
        class_sizes=(data.L1, data.L2),
        diagnostics=tuple(notes),
    )


def estimate_plugin_risk(lambda1: IntensityModel, lambda2: IntensityModel,
                         priors: Sequence[float], L: int, T: float,
                         family: KernelFamily | str, n_test: int, runs: int, seed: int,
                         grid: Sequence[float] = DEFAULT_BANDWIDTH_GRID,
                         folds: int = DEFAULT_FOLDS, threads: int = 1,
                         diagnostics: DiagnosticLog | None = None) -> PluginRiskReport:
    """Monte Carlo risk of the plug-in rule, paired with the Bayes rule.

    Each run draws a fresh training set, selects (h1, h2) by
    cross-validation, fits, and classifies n_test fresh trains.  The
    test draws of run r are the ones estimate_bayes_risk uses for run r
    under the same seed.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test}")
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    rule = BayesRule(lambda1, lambda2, tuple(priors), T)
    family = KernelFamily(family)
    tasks = [
        _PluginRunTask(rule, L, family, tuple(float(h) for h in grid), folds, n_test, seed, r)
        for r in range(runs)
    ]
    results = parallel_map(_plugin_run, tasks, threads)

    if diagnostics is not None:
        for result in results:
            for note in result.diagnostics:
                diagnostics.add(note.category, note.message, note.context)

    bandwidths = tuple(r.bandwidths for r in results)
    plugin = RiskReport("plugin", rule.window_T, n_test, seed,
                        tuple(r.plugin_risk for r in results), L, bandwidths)
    bayes = RiskReport("bayes", rule.window_T, n_test, seed,
                       tuple(r.bayes_risk for r in results), L, bandwidths)
    report = PluginRiskReport(plugin, bayes, tuple(r.agreement for r in results),
                              tuple(r.class_sizes for r in results))
    logger.info("plugin risk T=%g L=%d seed=%d: %.4f (bayes %.4f, agreement %.3f)",
                T, L, seed, plugin.mean, bayes.mean, report.agreement_rate)
    return report
