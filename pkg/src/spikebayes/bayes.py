"""The optimal Bayes rule for two Poisson classes, its theory and its risk.

Notation
--------
tau_i        expected count of class i on [0, T]
p_i          shape density, lambda_i = tau_i p_i
kappa        log(pi2 / pi1)
gamma        tau1 - tau2 + kappa
g(t)         log(lambda1(t) / lambda2(t))

A train x = (t_1..t_N) is assigned to omega_1 iff sum g(t_i) >= gamma.
Equivalent forms (product of ratios, shape statistic W_T >= eta_T, the
homogeneous count threshold) are exposed for cross-checking.  Ties go to
omega_1 in every form.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from spikebayes.errors import AssumptionError, QuadratureError
from spikebayes.intensity import (
    IntensityBounds,
    IntensityModel,
    ShapeDecomposition,
    Homogeneous,
    Scaled,
    bhattacharyya_bound,
    joint_bounds,
    kl_divergence,
    kl_variation,
    shape_decompose,
    verify_bounds,
)
from spikebayes.parallel import parallel_map
from spikebayes.simulate import (
    ClassLabel,
    SpikeTrain,
    check_priors,
    compensator,
    derive_rng,
    draw_labeled_samples,
    martingale_variance,
    sample_poisson,
    stochastic_integral,
)

logger = logging.getLogger(__name__)

# exp() argument clamp for the product form.
_EXP_CLAMP = 700.0
_SANDWICH_RTOL = 1e-8
DEFAULT_LLN_EPSILON = 0.1


# --- Rule ---

@dataclass(frozen=True)
class BayesRule:
    """Bayes rule for the class pair (lambda1, lambda2) on [0, window_T]."""
    lambda1: IntensityModel
    lambda2: IntensityModel
    priors: tuple[float, float]
    window_T: float
    shape1: ShapeDecomposition = field(init=False, repr=False)
    shape2: ShapeDecomposition = field(init=False, repr=False)
    tau1: float = field(init=False)
    tau2: float = field(init=False)
    kappa: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        priors = check_priors(self.priors)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "window_T", float(self.window_T))
        shape1 = shape_decompose(self.lambda1, self.window_T)
        shape2 = shape_decompose(self.lambda2, self.window_T)
        object.__setattr__(self, "shape1", shape1)
        object.__setattr__(self, "shape2", shape2)
        object.__setattr__(self, "tau1", shape1.tau)
        object.__setattr__(self, "tau2", shape2.tau)
        kappa = math.log(priors[1] / priors[0])
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "gamma", shape1.tau - shape2.tau + kappa)

    def with_window(self, T: float) -> BayesRule:
        return BayesRule(self.lambda1, self.lambda2, self.priors, T)

    def model(self, label: ClassLabel) -> IntensityModel:
        return self.lambda1 if label is ClassLabel.OMEGA_1 else self.lambda2

    def tau(self, label: ClassLabel) -> float:
        return self.tau1 if label is ClassLabel.OMEGA_1 else self.tau2

    def log_ratio(self, t):
        """g(t) = log(lambda1(t) / lambda2(t)), vectorized."""
        l1 = np.asarray(self.lambda1.rate_at(t), dtype=float)
        l2 = np.asarray(self.lambda2.rate_at(t), dtype=float)
        if np.any(l1 <= 0) or np.any(l2 <= 0):
            raise AssumptionError(
                "zero class intensity at an evaluation time; "
                f"{self.lambda1.label} / {self.lambda2.label} violate A1"
            )
        return np.log(l1) - np.log(l2)

    def _check(self, x: SpikeTrain) -> None:
        if x.window_T != self.window_T:
            raise ValueError(
                f"train window {x.window_T!r} does not match rule window {self.window_T!r}"
            )


# --- Decisions ---

def log_likelihood_ratio(rule: BayesRule, x: SpikeTrain) -> float:
    """sum_i g(t_i); zero for an empty train."""
    rule._check(x)
    if x.count == 0:
        return 0.0
    return float(np.sum(rule.log_ratio(x.times)))


def decide_log_form(rule: BayesRule, x: SpikeTrain) -> ClassLabel:
    """omega_1 iff sum g(t_i) >= gamma."""
    if log_likelihood_ratio(rule, x) >= rule.gamma:
        return ClassLabel.OMEGA_1
    return ClassLabel.OMEGA_2


def decide(rule: BayesRule, x: SpikeTrain) -> ClassLabel:
    """Bayes decision for one train.

    For N = 0 this reduces to tau2 - tau1 >= log(pi2/pi1).
    """
    return decide_log_form(rule, x)


def decide_many(rule: BayesRule, trains: Sequence[SpikeTrain]) -> list[ClassLabel]:
    return [decide(rule, x) for x in trains]


def decision_statistic(rule: BayesRule, x: SpikeTrain) -> tuple[float, float]:
    """(W_T, eta_T): W_T = sum log(p1/p2)(t_i), eta_T = tau1 - tau2 + N log(tau2/tau1) + kappa."""
    rule._check(x)
    shift = math.log(rule.tau1 / rule.tau2)
    w = 0.0
    if x.count:
        w = float(np.sum(rule.log_ratio(x.times) - shift))
    eta = rule.tau1 - rule.tau2 + x.count * math.log(rule.tau2 / rule.tau1) + rule.kappa
    return w, eta


def decide_shape_form(rule: BayesRule, x: SpikeTrain) -> ClassLabel:
    w, eta = decision_statistic(rule, x)
    return ClassLabel.OMEGA_1 if w >= eta else ClassLabel.OMEGA_2


def decide_product_form(rule: BayesRule, x: SpikeTrain) -> ClassLabel:
    """prod(lambda1/lambda2)(t_i) * exp(int(lambda2 - lambda1)) >= pi2/pi1.

    The product is formed as exp of a clamped log.
    """
    log_value = log_likelihood_ratio(rule, x) - (rule.tau1 - rule.tau2)
    value = math.exp(min(max(log_value, -_EXP_CLAMP), _EXP_CLAMP))
    threshold = math.exp(rule.kappa)
    return ClassLabel.OMEGA_1 if value >= threshold else ClassLabel.OMEGA_2


def decide_homogeneous(rate1: float, rate2: float, T: float,
                       priors: Sequence[float], count: int) -> ClassLabel:
    """Count threshold for constant rates: N log(l1/l2) + T(l2 - l1) >= log(pi2/pi1)."""
    if rate1 <= 0 or rate2 <= 0:
        raise AssumptionError(f"homogeneous rates must be > 0, got {rate1!r}, {rate2!r}")
    pi1, pi2 = check_priors(priors)
    lhs = count * math.log(rate1 / rate2) + T * (rate2 - rate1)
    return ClassLabel.OMEGA_1 if lhs >= math.log(pi2 / pi1) else ClassLabel.OMEGA_2


# --- Theory ---

@dataclass(frozen=True)
class ClassTheory:
    """Deterministic quantities for trains drawn from one class."""
    label: ClassLabel
    alpha: float
    alpha_lower: float
    alpha_upper: float
    variance: float                 # Var U_T by direct quadrature of g^2 lambda_i
    variance_decomposed: float      # same value from (K, V, tau1/tau2)
    variance_lower: float           # tau_i (int g p_i)^2
    variance_upper: float | None    # tau_i log^2(C/delta)
    theta: float                    # Var U_T / T
    epsilon: float                  # (alpha + kappa) / T
    chebyshev_constant: float       # a_T (omega_1) or b_T (omega_2)
    exponential_rate: float         # A_T (omega_1) or B_T (omega_2)

    @property
    def alpha_in_interval(self) -> bool:
        tol = _SANDWICH_RTOL * max(1.0, abs(self.alpha))
        return self.alpha_lower - tol <= self.alpha <= self.alpha_upper + tol


@dataclass(frozen=True)
class TheoreticalRiskReport:
    """Threshold, variance and risk-bound quantities for a Bayes rule."""
    window_T: float
    priors: tuple[float, float]
    tau1: float
    tau2: float
    kappa: float
    bounds: IntensityBounds
    d: float
    bhattacharyya: float
    available: bool
    kl12: float | None = None
    kl21: float | None = None
    variation12: float | None = None
    variation21: float | None = None
    classes: dict[ClassLabel, ClassTheory] = field(default_factory=dict)
    u: float | None = None
    chebyshev_bound: float | None = None
    exponential_bound: float | None = None
    c1: float | None = None
    c2: float | None = None
    c_mu: float | None = None
    note: str = ""

    def rows(self) -> list[tuple[str, float, str]]:
        """(quantity, value, class) triples; class is "" for pair-level values."""
        out: list[tuple[str, float, str]] = [
            ("tau1", self.tau1, ""),
            ("tau2", self.tau2, ""),
            ("kappa", self.kappa, ""),
            ("delta", self.bounds.delta, ""),
            ("C", self.bounds.C, ""),
            ("d", self.d, ""),
            ("bhattacharyya_bound", self.bhattacharyya, ""),
        ]
        for name in ("kl12", "kl21", "variation12", "variation21", "u",
                     "chebyshev_bound", "exponential_bound", "c1", "c2", "c_mu"):
            value = getattr(self, name)
            if value is not None:
                out.append((name, value, ""))
        for label, entry in self.classes.items():
            tag = f"omega{label.value}"
            for name in ("alpha", "alpha_lower", "alpha_upper", "variance",
                         "variance_decomposed", "variance_lower", "variance_upper",
                         "theta", "epsilon", "chebyshev_constant", "exponential_rate"):
                value = getattr(entry, name)
                if value is not None:
                    out.append((name, value, tag))
        return out


def _class_theory(rule: BayesRule, label: ClassLabel, k12: float, k21: float,
                  v12: float, v21: float, u: float | None) -> ClassTheory:
    tau1, tau2, T = rule.tau1, rule.tau2, rule.window_T
    log_ratio_tau = math.log(tau1 / tau2)
    model = rule.model(label)
    variance = martingale_variance(rule.log_ratio, model, T)

    if label is ClassLabel.OMEGA_1:
        alpha = tau1 - tau2 + tau1 * math.log(tau2 / tau1) - tau1 * k12
        lower = -((tau1 - tau2) ** 2) / tau2 - tau1 * k12
        upper = -tau1 * k12
        decomposed = tau1 * (v12 + 2.0 * log_ratio_tau * k12 + log_ratio_tau ** 2)
        mean_g = k12 + log_ratio_tau
    else:
        alpha = tau1 - tau2 + tau2 * math.log(tau2 / tau1) + tau2 * k21
        lower = tau2 * k21
        upper = (tau1 - tau2) ** 2 / tau1 + tau2 * k21
        decomposed = tau2 * (v21 - 2.0 * log_ratio_tau * k21 + log_ratio_tau ** 2)
        mean_g = log_ratio_tau - k21

    tau_i = rule.tau(label)
    theta = variance / T
    epsilon = (alpha + rule.kappa) / T
    # Misclassification needs U_T below T*epsilon (omega_1) or above it (omega_2).
    informative = epsilon < 0 if label is ClassLabel.OMEGA_1 else epsilon > 0
    if informative:
        cheb = theta / epsilon ** 2
        rate = epsilon ** 2 / (2.0 * theta + (u or 0.0) * abs(epsilon))
    else:
        cheb = math.inf
        rate = 0.0

    entry = ClassTheory(
        label=label,
        alpha=alpha,
        alpha_lower=lower,
        alpha_upper=upper,
        variance=variance,
        variance_decomposed=decomposed,
        variance_lower=tau_i * mean_g ** 2,
        variance_upper=None if u is None else tau_i * u ** 2,
        theta=theta,
        epsilon=epsilon,
        chebyshev_constant=cheb,
        exponential_rate=rate,
    )
    if not entry.alpha_in_interval:
        raise QuadratureError(
            f"threshold {alpha:.12g} for class {label.name} outside "
            f"[{lower:.12g}, {upper:.12g}]; quadrature did not converge"
        )
    return entry


def _proportional_ratio(rule: BayesRule) -> float | None:
    l1, l2 = rule.lambda1, rule.lambda2
    if isinstance(l2, Scaled) and l2.base == l1:
        return l2.factor
    if isinstance(l1, Scaled) and l1.base == l2:
        return 1.0 / l1.factor
    if isinstance(l1, Homogeneous) and isinstance(l2, Homogeneous) and l1.rate > 0:
        return l2.rate / l1.rate
    return None


def theoretical_report(rule: BayesRule, bounds: IntensityBounds | None = None,
                       d: float | None = None) -> TheoreticalRiskReport:
    """All deterministic risk quantities of `rule`.

    Args:
        rule: The Bayes rule.
        bounds: Joint (delta, C) bounds; scanned from both intensities
            when omitted.
        d: The A2 rate; defaults to the scanned d_hat.

    Returns:
        The report.  When A1 fails the divergence and bound fields are
        None and `available` is False.
    """
    T = rule.window_T
    if bounds is None:
        bounds = joint_bounds(verify_bounds(rule.lambda1, T), verify_bounds(rule.lambda2, T))
    if d is None:
        d = bounds.d_hat
    bhatt = bhattacharyya_bound(rule.lambda1, rule.lambda2, T, rule.priors)
    mu = _proportional_ratio(rule)
    c_mu = None if mu is None else (mu + 1.0) / 2.0 - math.sqrt(mu)

    common = dict(
        window_T=T, priors=rule.priors, tau1=rule.tau1, tau2=rule.tau2,
        kappa=rule.kappa, bounds=bounds, d=d, bhattacharyya=bhatt, c_mu=c_mu,
    )
    if not bounds.a1_holds:
        logger.warning("A1 violated on [0, %g] (delta=%.3g); bound fields unavailable",
                       T, bounds.delta)
        return TheoreticalRiskReport(available=False, note="A1 violated", **common)

    k12 = kl_divergence(rule.shape1, rule.shape2)
    k21 = kl_divergence(rule.shape2, rule.shape1)
    v12 = kl_variation(rule.shape1, rule.shape2)
    v21 = kl_variation(rule.shape2, rule.shape1)
    u = bounds.log_ratio

    classes = {
        label: _class_theory(rule, label, k12, k21, v12, v21, u)
        for label in ClassLabel
    }
    pi1, pi2 = rule.priors
    first, second = classes[ClassLabel.OMEGA_1], classes[ClassLabel.OMEGA_2]
    chebyshev = (pi1 * first.chebyshev_constant + pi2 * second.chebyshev_constant) / T
    exponential = (pi1 * math.exp(-first.exponential_rate * T)
                   + pi2 * math.exp(-second.exponential_rate * T))

    c1 = c2 = None
    note = ""
    if u > 0 and d > 0:
        c1 = (1.0 / d) * (math.log(bounds.C / bounds.delta) / math.log(bounds.delta / bounds.C)) ** 2
        c2 = d * (1.0 / 3.0) * (math.log(bounds.delta / bounds.C) / math.log(bounds.C / bounds.delta)) ** 2
    else:
        note = "c1, c2 undefined for delta == C or d == 0"

    return TheoreticalRiskReport(
        available=True,
        kl12=k12, kl21=k21, variation12=v12, variation21=v21,
        classes=classes, u=u,
        chebyshev_bound=chebyshev, exponential_bound=exponential,
        c1=c1, c2=c2, note=note,
        **common,
    )


# --- Monte Carlo risk ---

@dataclass(frozen=True)
class RiskReport:
    """Misclassification rate of one rule over independent runs."""
    rule: str                   # "bayes" or "plugin"
    window_T: float
    n_test: int
    seed: int
    risks: tuple[float, ...]
    L: int | None = None
    bandwidths: tuple[tuple[float, float], ...] = ()

    @property
    def runs(self) -> int:
        return len(self.risks)

    @property
    def mean(self) -> float:
        return float(np.mean(self.risks))

    @property
    def se(self) -> float:
        """Across-run standard error; binomial error for a single run."""
        if self.runs >= 2:
            return float(np.std(self.risks, ddof=1) / math.sqrt(self.runs))
        p = self.mean
        return math.sqrt(p * (1.0 - p) / self.n_test)


def evaluation_stream(run: int) -> tuple[str, int]:
    """Stream key for the test draws of one run; shared by all rules."""
    return ("test", run)


@dataclass(frozen=True)
class _BayesRunTask:
    rule: BayesRule
    n_test: int
    seed: int
    run: int


def _bayes_run(task: _BayesRunTask) -> float:
    rule = task.rule
    samples = draw_labeled_samples(
        rule.lambda1, rule.lambda2, rule.priors, task.n_test, rule.window_T,
        task.seed, evaluation_stream(task.run),
    )
    errors = sum(1 for s in samples if decide(rule, s.train) is not s.label)
    return errors / task.n_test


def estimate_bayes_risk(rule: BayesRule, n_test: int, runs: int, seed: int,
                        threads: int = 1) -> RiskReport:
    """Monte Carlo Bayes risk: mean misclassification rate over `runs` test sets."""
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test}")
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    tasks = [_BayesRunTask(rule, n_test, seed, r) for r in range(runs)]
    risks = parallel_map(_bayes_run, tasks, threads)
    report = RiskReport("bayes", rule.window_T, n_test, seed, tuple(risks))
    logger.info("bayes risk T=%g seed=%d: %.4f +/- %.4f", rule.window_T, seed,
                report.mean, report.se)
    return report


# --- Law of large numbers ---

@dataclass(frozen=True)
class LLNRow:
    window_T: float
    label: ClassLabel
    epsilon: float
    mean_abs: float          # MC mean of |U_T / T|
    tail_frequency: float    # MC P(|U_T / T| >= epsilon)
    tail_se: float           # binomial standard error of tail_frequency
    theta: float             # Var U_T / T
    bound: float             # 2 exp(-T eps^2 / (2 theta + u eps))


def default_lln_epsilon(rule: BayesRule) -> float:
    """Midpoint of the per-class |epsilon_T|, or 0.1 when both vanish."""
    report = theoretical_report(rule)
    if not report.available:
        return DEFAULT_LLN_EPSILON
    mid = sum(abs(c.epsilon) for c in report.classes.values()) / 2.0
    return mid if mid > 0 else DEFAULT_LLN_EPSILON


def lln_diagnostic(rule: BayesRule, label: ClassLabel, T_grid: Sequence[float],
                   replicates: int, seed: int,
                   epsilon: float | None = None) -> list[LLNRow]:
    """Monte Carlo behaviour of U_T / T for trains of class `label`, per window."""
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if epsilon is None:
        epsilon = default_lln_epsilon(rule)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")

    model = rule.model(label)
    rows = []
    for k, T in enumerate(T_grid):
        local = rule.with_window(T)
        bounds = joint_bounds(verify_bounds(local.lambda1, T), verify_bounds(local.lambda2, T))
        u = bounds.log_ratio
        comp = compensator(local.log_ratio, model, T)
        theta = martingale_variance(local.log_ratio, model, T) / T
        values = np.empty(replicates)
        for i in range(replicates):
            train = sample_poisson(model, T, derive_rng(seed, "lln", int(label), k, i))
            values[i] = stochastic_integral(train, local.log_ratio, model, comp) / T
        absolute = np.abs(values)
        freq = float(np.mean(absolute >= epsilon))
        # theta == 0 means g vanishes wherever the class fires: U_T is identically zero.
        if theta > 0:
            bound = 2.0 * math.exp(-T * epsilon ** 2 / (2.0 * theta + u * epsilon))
        else:
            bound = 0.0
        rows.append(LLNRow(
            window_T=float(T), label=label, epsilon=epsilon,
            mean_abs=float(np.mean(absolute)), tail_frequency=freq,
            tail_se=math.sqrt(freq * (1.0 - freq) / replicates),
            theta=theta, bound=bound,
        ))
        logger.debug("lln %s T=%g: mean|U/T|=%.4g tail=%.4g bound=%.4g",
                     label.name, T, rows[-1].mean_abs, freq, bound)
    return rows
