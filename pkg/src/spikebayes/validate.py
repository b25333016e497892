"""Validation suite: Monte Carlo and quadrature oracles across modules.

Each check returns one or more Check records.  A failed check never
raises; the report passes iff no record has status "fail".  Expected
warnings (the Gaussian-bump pair violating A1 and A2) are recorded with
status "warn" and `expected=True`.

Tolerances are stated in standard errors of the Monte Carlo estimate so
that changing the master seed keeps the verdicts.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import tempfile
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spikebayes.bayes import (
    BayesRule,
    decide,
    decide_homogeneous,
    decide_log_form,
    decide_product_form,
    decide_shape_form,
    estimate_bayes_risk,
    lln_diagnostic,
    theoretical_report,
)
from spikebayes.config import ExperimentConfig
from spikebayes.diagnostics import Diagnostic
from spikebayes.errors import SpikeBayesError
from spikebayes.figures import run_figure
from spikebayes.intensity import (
    Harmonic,
    Homogeneous,
    IntensityModel,
    Scaled,
    bhattacharyya_bound,
    kl_divergence,
    kl_variation,
    shape_decompose,
    verify_bounds,
)
from spikebayes.kernel import (
    ClassShapeEstimate,
    KernelFamily,
    KernelSpec,
    expected_estimate,
    pointwise_mse,
    shape_mass,
    single_intensity_estimate,
    sup_error,
    variance_estimate,
)
from spikebayes.plugin import estimate_plugin_risk, select_bandwidth
from spikebayes.simulate import (
    ClassLabel,
    SpikeTrain,
    compensator,
    derive_rng,
    derive_seed,
    draw_labeled_samples,
    generate_training_set,
    sample_poisson,
    stochastic_integral,
)

logger = logging.getLogger(__name__)

PASS, FAIL, WARN, INFO = "pass", "fail", "warn", "info"
REPORT_NAME = "validation.json"
DETERMINISM_THREADS = (1, 8)

# Reference pair of the simulation protocol.
PROTOCOL_PAIR = (Harmonic(math.pi / 16), Harmonic(math.pi / 4))


@dataclass(frozen=True)
class Check:
    name: str
    status: str
    detail: str
    expected: bool = False


@dataclass
class ValidationReport:
    config_hash: str
    seed: int
    quick: bool
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "quick": self.quick,
            "passed": self.passed,
            "checks": [dataclasses.asdict(c) for c in self.checks],
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    def summary(self) -> str:
        lines = [f"{'PASS' if self.passed else 'FAIL'}: {len(self.checks)} checks"]
        for c in self.checks:
            flag = " (expected)" if c.expected else ""
            lines.append(f"  [{c.status}] {c.name}: {c.detail}{flag}")
        return "\n".join(lines)


def _verdict(name: str, ok: bool, detail: str) -> Check:
    return Check(name, PASS if ok else FAIL, detail)


@dataclass(frozen=True)
class _Sizes:
    replicates: int
    n_test: int
    runs: int
    pairs: int
    seeds: int


def _sizes(config: ExperimentConfig, quick: bool) -> _Sizes:
    if quick:
        return _Sizes(max(1000, config.replicates // 10), max(500, config.n_test // 10),
                      max(2, config.runs // 5), 10, 5)
    return _Sizes(config.replicates, config.n_test, config.runs, 100, 20)


# --- Simulation ---

def check_poisson_sampler(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    """Counts of Homogeneous(2) on [0, 10]: mean, variance, disjoint-interval independence."""
    rate, T, n = 2.0, 10.0, sizes.replicates
    seed = derive_seed(config.seed, "validate", "poisson")
    model = Homogeneous(rate)
    counts = np.empty(n)
    left = np.empty(n)
    right = np.empty(n)
    for i in range(n):
        x = sample_poisson(model, T, derive_rng(seed, i))
        counts[i] = x.count
        left[i] = x.count_in(0.0, T / 2)
        right[i] = x.count_in(T / 2, T)
    mean = rate * T
    mean_se = math.sqrt(mean / n)
    var_se = math.sqrt((mean + 2.0 * mean ** 2) / n)
    corr = float(np.corrcoef(left, right)[0, 1])
    sample_mean = float(counts.mean())
    sample_var = float(counts.var(ddof=1))
    return [
        _verdict("poisson_mean", abs(sample_mean - mean) <= 4 * mean_se,
                 f"mean {sample_mean:.4f} vs {mean:g} (SE {mean_se:.4f})"),
        _verdict("poisson_variance", abs(sample_var - mean) <= 4 * var_se,
                 f"variance {sample_var:.4f} vs {mean:g} (SE {var_se:.4f})"),
        _verdict("poisson_independence", abs(corr) <= 4 / math.sqrt(n),
                 f"corr(N(0,5], N(5,10]) = {corr:.4f}"),
    ]


def check_martingale_variance(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    """Var U_T against tau_i log^2(mu) for a constant pair with ratio mu."""
    d, mu, T = 2.0, 4.0, 10.0
    rule = BayesRule(Homogeneous(d), Scaled(Homogeneous(d), mu), (0.5, 0.5), T)
    seed = derive_seed(config.seed, "validate", "martingale")
    checks = []
    for label in ClassLabel:
        model = rule.model(label)
        comp = compensator(rule.log_ratio, model, T)
        values = np.array([
            stochastic_integral(sample_poisson(model, T, derive_rng(seed, int(label), i)),
                                rule.log_ratio, model, comp)
            for i in range(sizes.replicates)
        ])
        expected = rule.tau(label) * math.log(mu) ** 2
        var = float(values.var(ddof=1))
        normalized = var / T
        rate = d if label is ClassLabel.OMEGA_1 else d * mu
        checks.append(_verdict(
            f"martingale_variance_omega{label.value}",
            abs(var - expected) <= 0.05 * expected
            and abs(normalized - rate * math.log(mu) ** 2) <= 0.05 * rate * math.log(mu) ** 2,
            f"Var U_T {var:.4f} vs {expected:.4f}; normalized {normalized:.4f}",
        ))
    report = theoretical_report(rule)
    for label, entry in report.classes.items():
        checks.append(_verdict(
            f"variance_decomposition_omega{label.value}",
            math.isclose(entry.variance, entry.variance_decomposed, rel_tol=1e-6),
            f"quadrature {entry.variance:.8g}, decomposition {entry.variance_decomposed:.8g}",
        ))
    return checks


# --- Bayes rule ---

def _random_harmonic_rule(rng: np.random.Generator, T: float | None = None) -> BayesRule:
    phi1, phi2 = rng.uniform(0.0, math.pi, size=2)
    pi1 = float(rng.uniform(0.2, 0.8))
    window = float(rng.uniform(1.0, 20.0)) if T is None else T
    return BayesRule(Harmonic(float(phi1)), Harmonic(float(phi2)), (pi1, 1.0 - pi1), window)


def check_decision_forms(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    seed = derive_seed(config.seed, "validate", "forms")
    rng = derive_rng(seed, "pairs")
    per_pair = max(100, sizes.replicates // 10)
    mismatches = errors = total = 0
    for k in range(10):
        rule = _random_harmonic_rule(rng, T=10.0)
        samples = draw_labeled_samples(rule.lambda1, rule.lambda2, rule.priors, per_pair,
                                       rule.window_T, seed, ("forms", k))
        for s in samples:
            total += 1
            try:
                forms = {decide_log_form(rule, s.train), decide_shape_form(rule, s.train),
                         decide_product_form(rule, s.train)}
            except SpikeBayesError:
                errors += 1
                continue
            mismatches += len(forms) > 1
    return [_verdict("decision_forms", mismatches == 0 and errors == 0,
                     f"{total} trains, {mismatches} disagreements, {errors} errors")]


def check_homogeneous_reduction(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    rng = derive_rng(config.seed, "validate", "homogeneous")
    mismatches = 0
    for _ in range(50):
        r1, r2 = (float(v) for v in rng.uniform(0.5, 5.0, size=2))
        T = float(rng.uniform(1.0, 20.0))
        pi1 = float(rng.uniform(0.1, 0.9))
        rule = BayesRule(Homogeneous(r1), Homogeneous(r2), (pi1, 1.0 - pi1), T)
        for n in range(101):
            x = SpikeTrain(T * np.arange(1, n + 1) / (n + 1), T)
            if decide(rule, x) is not decide_homogeneous(r1, r2, T, rule.priors, n):
                mismatches += 1
    return [_verdict("homogeneous_reduction", mismatches == 0,
                     f"50 rate pairs x N in 0..100, {mismatches} disagreements")]


def check_threshold_sandwich(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    rng = derive_rng(config.seed, "validate", "sandwich")
    outside = 0
    for _ in range(sizes.pairs):
        try:
            report = theoretical_report(_random_harmonic_rule(rng))
        except SpikeBayesError:
            outside += 2
            continue
        outside += sum(not c.alpha_in_interval for c in report.classes.values())
    return [_verdict("threshold_sandwich", outside == 0,
                     f"{sizes.pairs} random pairs, {outside} thresholds outside their interval")]


def check_divergence_inequality(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    """K <= sqrt(V) for random harmonic pairs."""
    rng = derive_rng(config.seed, "validate", "divergence")
    pairs = sizes.pairs * 10
    violations = 0
    for _ in range(pairs):
        phi1, phi2 = (float(v) for v in rng.uniform(0.0, math.pi, size=2))
        T = float(rng.uniform(1.0, 20.0))
        p = shape_decompose(Harmonic(phi1), T)
        q = shape_decompose(Harmonic(phi2), T)
        if kl_divergence(p, q) > math.sqrt(kl_variation(p, q)) + 1e-9:
            violations += 1
    return [_verdict("divergence_inequality", violations == 0,
                     f"{pairs} random pairs, {violations} violations")]


def check_lln_tail(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    rule = BayesRule(*PROTOCOL_PAIR, (0.5, 0.5), 10.0)
    seed = derive_seed(config.seed, "validate", "lln")
    T_grid = (5.0, 20.0, 80.0)
    checks = []
    for eps in config.epsilons:
        worst = -math.inf
        for label in ClassLabel:
            rows = lln_diagnostic(rule, label, T_grid, sizes.replicates, seed, eps)
            for row in rows:
                worst = max(worst, row.tail_frequency - row.bound - 4 * row.tail_se)
        checks.append(_verdict(f"lln_tail_eps={eps:g}", worst <= 0.0,
                               f"max(frequency - bound - 4 SE) = {worst:.4g}"))

    # Constant rates 2 and 8, the martingale_variance pair.
    scaled = BayesRule(Homogeneous(2.0), Scaled(Homogeneous(2.0), 4.0), (0.5, 0.5), 10.0)
    means = {
        label: [r.mean_abs for r in lln_diagnostic(scaled, label, T_grid, sizes.replicates, seed)]
        for label in ClassLabel
    }
    decreasing = all(m[0] > m[1] > m[2] for m in means.values())
    checks.append(_verdict(
        "lln_mean_decreasing", decreasing,
        "; ".join(f"{label.name}: " + " ".join(f"{m:.4f}" for m in values)
                  for label, values in means.items()),
    ))
    return checks


def check_risk_decay(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    phi1 = math.pi / 16
    grid = (2.0, 5.0, 10.0, 20.0)
    seed = derive_seed(config.seed, "validate", "risk")
    curves = {}
    above_bound = 0
    for ratio in (2, 16):
        reports = []
        for T in grid:
            rule = BayesRule(Harmonic(phi1), Harmonic(ratio * phi1), (0.5, 0.5), T)
            report = estimate_bayes_risk(rule, sizes.n_test, sizes.runs, seed, config.threads)
            if report.mean > bhattacharyya_bound(rule.lambda1, rule.lambda2, T) + 2 * report.se:
                above_bound += 1
            reports.append(report)
        curves[ratio] = reports
    decays = all(r[-1].mean < r[0].mean for r in curves.values())
    ordered = all(
        far.mean <= near.mean + 2 * math.hypot(far.se, near.se)
        for near, far in zip(curves[2], curves[16])
    )
    detail = ", ".join(
        f"ratio {ratio}: " + " ".join(f"{r.mean:.4f}" for r in reports)
        for ratio, reports in curves.items()
    )
    return [
        _verdict("risk_decay", decays, detail),
        _verdict("risk_ordering", ordered, "ratio 16 curve below ratio 2 curve"),
        _verdict("bhattacharyya_bound", above_bound == 0, f"{above_bound} grid points above the bound"),
    ]


def check_degenerate_risk(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    model = PROTOCOL_PAIR[0]
    rule = BayesRule(model, model, (0.5, 0.5), 10.0)
    report = estimate_bayes_risk(rule, sizes.n_test, sizes.runs,
                                 derive_seed(config.seed, "validate", "degenerate"), config.threads)
    return [_verdict("degenerate_risk", abs(report.mean - 0.5) <= 4 * report.se,
                     f"risk {report.mean:.4f} (SE {report.se:.4f})")]


# --- Kernel estimation ---

MOMENT_TRAINS = 100
MOMENT_REPLICATES = 10_000


def aggregated_intensity_draws(model: IntensityModel, spec: KernelSpec, points: np.ndarray, L: int,
                               replicates: int, T: float, seed: int) -> np.ndarray:
    """Replicates of the L-train aggregated intensity estimate at `points`.

    The union of L independent trains of `model` is one Poisson train of
    rate L * lambda, so each replicate is that train's single-sample
    estimate divided by L.
    """
    pooled = Scaled(model, float(L))
    return np.array([
        single_intensity_estimate(sample_poisson(pooled, T, derive_rng(seed, i)), spec, points) / L
        for i in range(replicates)
    ])


def epanechnikov_window_mass(times: np.ndarray, h: float, T: float) -> float:
    """Closed-form int_0^T of the Epanechnikov shape estimate for events `times`."""
    def cdf(u):
        u = np.clip(u, -1.0, 1.0)
        return 0.5 + 0.75 * u - 0.25 * u ** 3

    times = np.asarray(times, dtype=float)
    return float(np.mean(cdf((T - times) / h) - cdf(-times / h)))


def check_kernel_mass(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    T, h = 10.0, 0.5
    spec = KernelSpec(KernelFamily.EPANECHNIKOV, h)
    seed = derive_seed(config.seed, "validate", "mass")
    interior = boundary = 0.0
    for i in range(sizes.pairs):
        x = sample_poisson(PROTOCOL_PAIR[i % 2], T, derive_rng(seed, i))
        if x.count == 0:
            continue
        inside = x.times[(x.times >= h) & (x.times <= T - h)]
        if inside.size:
            interior = max(interior, abs(shape_mass(SpikeTrain(inside, T), spec) - 1.0))
        boundary = max(boundary, abs(shape_mass(x, spec)
                                     - epanechnikov_window_mass(x.times, h, T)))
    return [
        _verdict("kernel_mass_interior", interior < 1e-8,
                 f"max |mass - 1| = {interior:.3g} over {sizes.pairs} trains"),
        _verdict("kernel_mass_boundary", boundary < 1e-8,
                 f"max |mass - truncated mass| = {boundary:.3g}"),
    ]


def check_kernel_moments(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    T = 10.0
    model = PROTOCOL_PAIR[0]
    points = np.array([2.0, 3.5, 5.0, 6.5, 8.0])
    L = MOMENT_TRAINS
    n = max(MOMENT_REPLICATES, sizes.replicates)
    checks = []
    for family in KernelFamily:
        spec = KernelSpec(family, 0.5)
        seed = derive_seed(config.seed, "validate", "kernel", family.value)
        values = aggregated_intensity_draws(model, spec, points, L, n, T, seed)
        mean_ok = var_ok = True
        for j, t in enumerate(points):
            expected = expected_estimate(model, spec, float(t), T)
            variance = variance_estimate(model, spec, float(t), L, T)
            mean_ok &= abs(values[:, j].mean() - expected) <= 4 * math.sqrt(variance / n)
            var_ok &= abs(values[:, j].var(ddof=1) - variance) <= 0.1 * variance
        detail = f"{n} aggregated estimates (L={L}) at {len(points)} points"
        checks.append(_verdict(f"kernel_mean_{family.value}", bool(mean_ok), detail))
        checks.append(_verdict(f"kernel_variance_{family.value}", bool(var_ok), detail))

    c, h, L = 2.0, 0.5, 10
    spec = KernelSpec(KernelFamily.EPANECHNIKOV, h)
    value = variance_estimate(Homogeneous(c), spec, 5.0, L, T)
    checks.append(_verdict("epanechnikov_variance_constant",
                           math.isclose(value, 0.6 * c / (L * h), rel_tol=1e-6),
                           f"{value:.8g} vs {0.6 * c / (L * h):.8g}"))
    return checks


def check_uniform_consistency(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    T = 10.0
    model = PROTOCOL_PAIR[0]
    medians = {}
    for L in (50, 500):
        spec = KernelSpec(KernelFamily.GAUSSIAN, L ** -0.2)
        errors = []
        for s in range(sizes.seeds):
            seed = derive_seed(config.seed, "validate", "uniform", L, s)
            trains = [sample_poisson(model, T, derive_rng(seed, j)) for j in range(L)]
            estimate = ClassShapeEstimate.from_trains(ClassLabel.OMEGA_1, trains, spec, T)
            errors.append(sup_error(estimate, model, T))
        medians[L] = float(np.median(errors))
    return [_verdict("uniform_consistency", medians[500] < medians[50],
                     f"median sup-error {medians[50]:.4f} (L=50), {medians[500]:.4f} (L=500)")]


def check_mse_rate(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    """Pointwise MSE at t = 5 with h = L^(-1/5) drops from L=50 to L=800."""
    T, t = 10.0, 5.0
    model = PROTOCOL_PAIR[0]
    mse = {}
    for L in (50, 800):
        spec = KernelSpec(KernelFamily.GAUSSIAN, L ** -0.2)
        estimates = []
        for s in range(sizes.seeds):
            seed = derive_seed(config.seed, "validate", "mse", L, s)
            trains = [sample_poisson(model, T, derive_rng(seed, j)) for j in range(L)]
            estimates.append(ClassShapeEstimate.from_trains(ClassLabel.OMEGA_1, trains, spec, T))
        mse[L] = pointwise_mse(estimates, model, t)
    return [_verdict("mse_rate", mse[800] < mse[50],
                     f"MSE at t={t:g}: {mse[50]:.4g} (L=50), {mse[800]:.4g} (L=800)")]


def check_bandwidth_trend(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    lambda1, lambda2 = PROTOCOL_PAIR
    medians = {}
    edges = 0
    for L in (20, 200):
        chosen = []
        for s in range(sizes.seeds):
            seed = derive_seed(config.seed, "validate", "bandwidth", L, s)
            data = generate_training_set(lambda1, lambda2, (0.5, 0.5), L, config.T, seed)
            notes: list[Diagnostic] = []
            h, _ = select_bandwidth(data, ClassLabel.OMEGA_1, config.kernel,
                                    config.bandwidth_grid, config.folds, seed, 0, notes)
            edges += sum(n.category == "bandwidth_edge" for n in notes)
            chosen.append(h)
        medians[L] = float(np.median(chosen))
    checks = [_verdict("bandwidth_trend", medians[200] <= medians[20],
                       f"median h1 {medians[20]:.4g} (L=20), {medians[200]:.4g} (L=200)")]
    if edges:
        checks.append(Check("bandwidth_edge", WARN, f"{edges} selections at the edge of the grid"))
    return checks


# --- Plug-in rule ---

def check_plugin_consistency(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    lambda1, lambda2 = PROTOCOL_PAIR
    seed = derive_seed(config.seed, "validate", "plugin")
    reports = {
        L: estimate_plugin_risk(lambda1, lambda2, (0.5, 0.5), L, 10.0, config.kernel,
                                sizes.n_test, sizes.runs, seed, config.bandwidth_grid,
                                config.folds, config.threads)
        for L in (10, 200)
    }
    large, small = reports[200], reports[10]
    below = [L for L, r in reports.items()
             if r.plugin.mean < r.bayes.mean - 2 * r.plugin.se]
    return [
        _verdict("plugin_close_to_bayes", abs(large.gap) <= 0.05,
                 f"L=200: plugin {large.plugin.mean:.4f}, bayes {large.bayes.mean:.4f}"),
        _verdict("plugin_gap_shrinks", large.gap <= small.gap,
                 f"gap {small.gap:.4f} (L=10), {large.gap:.4f} (L=200)"),
        _verdict("plugin_not_below_bayes", not below, f"below paired bayes at L in {below}"),
        Check("plugin_agreement", INFO, f"L=200 agreement {large.agreement_rate:.3f}"),
    ]


def check_gaussian_failure(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    first, second = config.failure_pair
    T_grid = config.failure_T_grid
    checks = []
    for label, model in zip(ClassLabel, (first, second)):
        bounds = verify_bounds(model, max(T_grid))
        if not bounds.a1_holds:
            checks.append(Check(f"failure_a1_omega{label.value}", WARN,
                                f"{model.label}: minimum rate {bounds.delta:.3g}", expected=True))
        rates = [verify_bounds(model, T).d_hat for T in (min(T_grid), max(T_grid))]
        if rates[1] < rates[0] / 2:
            checks.append(Check(f"failure_a2_omega{label.value}", WARN,
                                f"average rate falls from {rates[0]:.4g} to {rates[1]:.4g}",
                                expected=True))

    seed = derive_seed(config.seed, "validate", "failure")
    late = sorted(T_grid)[-2:]
    reports = [
        estimate_plugin_risk(first, second, config.priors, config.L, T, config.kernel,
                             sizes.n_test, sizes.runs, seed, config.bandwidth_grid,
                             config.folds, config.threads)
        for T in late
    ]
    a, b = reports
    tolerance = 3 * math.hypot(a.plugin.se, b.plugin.se)
    checks.append(_verdict(
        "failure_plateau", abs(a.plugin.mean - b.plugin.mean) <= tolerance,
        f"plugin risk {a.plugin.mean:.4f} (T={late[0]:g}), {b.plugin.mean:.4f} (T={late[1]:g})",
    ))
    gap = b.gap
    checks.append(_verdict("failure_gap", gap > 0.02, f"plugin - bayes = {gap:.4f} at T={late[1]:g}"))
    return checks


# --- Harness ---

def check_config_pair(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    checks = []
    for label, model in zip(ClassLabel, (config.class1, config.class2)):
        bounds = verify_bounds(model, config.T)
        if bounds.a1_holds:
            checks.append(Check(f"config_a1_omega{label.value}", PASS,
                                f"{model.label}: rate in [{bounds.delta:.4g}, {bounds.C:.4g}]"))
        else:
            checks.append(Check(f"config_a1_omega{label.value}", WARN,
                                f"{model.label}: minimum rate {bounds.delta:.3g}", expected=True))
    return checks


def check_determinism(config: ExperimentConfig, sizes: _Sizes) -> list[Check]:
    small = dataclasses.replace(
        config, T_grid=(2.0, 5.0), L_grid=(20,), n_test=200, runs=2,
        phi_pairs=config.phi_pairs[:1], bandwidth_grid=config.bandwidth_grid[::3],
    )
    checks = []
    with tempfile.TemporaryDirectory() as tmp:
        for figure in ("bayes-risk-vs-T", "risk-vs-T-by-L"):
            outputs = []
            for threads in DETERMINISM_THREADS:
                run = dataclasses.replace(small, threads=threads, out_dir=str(Path(tmp) / str(threads)))
                outputs.append(run_figure(figure, run).read_bytes())
            checks.append(_verdict(f"determinism_{figure}", outputs[0] == outputs[1],
                                   f"threads {DETERMINISM_THREADS[0]} vs {DETERMINISM_THREADS[1]}"))
    return checks


CHECKS: dict[str, Callable[[ExperimentConfig, _Sizes], list[Check]]] = {
    "config_pair": check_config_pair,
    "poisson_sampler": check_poisson_sampler,
    "decision_forms": check_decision_forms,
    "homogeneous_reduction": check_homogeneous_reduction,
    "martingale_variance": check_martingale_variance,
    "threshold_sandwich": check_threshold_sandwich,
    "divergence_inequality": check_divergence_inequality,
    "lln_tail": check_lln_tail,
    "risk_decay": check_risk_decay,
    "degenerate_risk": check_degenerate_risk,
    "kernel_mass": check_kernel_mass,
    "kernel_moments": check_kernel_moments,
    "uniform_consistency": check_uniform_consistency,
    "mse_rate": check_mse_rate,
    "bandwidth_trend": check_bandwidth_trend,
    "plugin_consistency": check_plugin_consistency,
    "gaussian_failure": check_gaussian_failure,
    "determinism": check_determinism,
}

SLOW_CHECKS = (
    "uniform_consistency", "mse_rate", "bandwidth_trend", "plugin_consistency", "gaussian_failure",
)


def run_validation(config: ExperimentConfig, quick: bool = False,
                   only: tuple[str, ...] = ()) -> ValidationReport:
    """Run the suite (or the checks named in `only`).

    `quick` shrinks sample sizes and skips the slow checks; skipped
    checks are listed with status "info".
    """
    unknown = [name for name in only if name not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check(s): {', '.join(unknown)} (expected: {', '.join(CHECKS)})")
    sizes = _sizes(config, quick)
    report = ValidationReport(config.config_hash, config.seed, quick)
    for name, check in CHECKS.items():
        if only and name not in only:
            continue
        if quick and name in SLOW_CHECKS:
            report.checks.append(Check(name, INFO, "skipped in quick mode"))
            continue
        logger.info("validate: %s", name)
        try:
            report.checks.extend(check(config, sizes))
        except SpikeBayesError as exc:
            report.checks.append(Check(name, FAIL, f"{type(exc).__name__}: {exc}"))
    logger.info("validation %s: %d checks", "passed" if report.passed else "failed",
                len(report.checks))
    return report


def validate(config: ExperimentConfig, quick: bool = False,
             only: tuple[str, ...] = ()) -> tuple[ValidationReport, Path]:
    """Run the suite and write <out_dir>/validation.json."""
    report = run_validation(config, quick, only)
    path = report.write(Path(config.out_dir) / REPORT_NAME)
    return report, path
