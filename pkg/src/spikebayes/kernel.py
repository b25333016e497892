"""Kernel estimates of intensities and shape densities.

Single sample (events t_1..t_N):
    lambda_hat(t) = sum_l K_h(t - t_l),    p_hat(t) = lambda_hat(t) / N
with K_h(u) = K(u / h) / h and p_hat = 0 for an empty train.

Aggregated over the L_i training trains of one class:
    tau_hat   = mean count
    p_hat_i   = (1 / L_i) sum_j p_hat^[j]
    lambda_hat_i = (1 / L_i) sum_j lambda_hat^[j]

Bandwidths are chosen per class by K-fold cross-validation of the
held-out log-likelihood of event times.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import norm

from spikebayes.errors import DegenerateModelError
from spikebayes.intensity import IntensityModel, quadrature_breakpoints
from spikebayes.parallel import parallel_map
from spikebayes.quadrature import integrate_piecewise
from spikebayes.simulate import ClassLabel, SpikeTrain, TrainingSet, derive_rng

logger = logging.getLogger(__name__)

CV_DENSITY_FLOOR = 1e-300
DEFAULT_BANDWIDTH_GRID = tuple(np.logspace(-1, 1, 10).tolist())
DEFAULT_FOLDS = 5
_CHUNK = 512


class KernelFamily(str, Enum):
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"

    def density(self, u):
        u = np.asarray(u, dtype=float)
        if self is KernelFamily.GAUSSIAN:
            return norm.pdf(u)
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)

    @property
    def support_radius(self) -> float:
        """|u| beyond which K is treated as zero (Gaussian tail < 1e-22)."""
        return 1.0 if self is KernelFamily.EPANECHNIKOV else 10.0

    @property
    def squared_integral(self) -> float:
        """int K(u)^2 du."""
        if self is KernelFamily.EPANECHNIKOV:
            return 0.6
        return 1.0 / (2.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    bandwidth: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth!r}")

    def scaled(self, u):
        """K_h(u) = K(u / h) / h."""
        h = self.bandwidth
        return self.family.density(np.asarray(u, dtype=float) / h) / h

    @property
    def radius(self) -> float:
        return self.family.support_radius * self.bandwidth


def _kernel_sum(points: np.ndarray, weights: np.ndarray, spec: KernelSpec, t) -> np.ndarray:
    """sum_e weights[e] K_h(t - points[e]) for sorted `points`, evaluated at every t."""
    query = np.asarray(t, dtype=float)
    flat = query.reshape(-1)
    out = np.zeros(flat.size)
    if points.size == 0 or flat.size == 0:
        return out.reshape(query.shape)
    order = np.argsort(flat, kind="stable")
    ordered = flat[order]
    radius = spec.radius
    for start in range(0, ordered.size, _CHUNK):
        block = ordered[start:start + _CHUNK]
        lo = np.searchsorted(points, block[0] - radius, side="left")
        hi = np.searchsorted(points, block[-1] + radius, side="right")
        if hi <= lo:
            continue
        values = spec.scaled(block[:, None] - points[None, lo:hi])
        out[order[start:start + _CHUNK]] = values @ weights[lo:hi]
    return out.reshape(query.shape)


def _check_times(t, T: float) -> None:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > T):
        raise ValueError(f"evaluation time outside [0, {T:g}]")


def single_intensity_estimate(x: SpikeTrain, k: KernelSpec, t):
    """lambda_hat(t) = sum_l K_h(t - t_l) for one train; 0 for an empty train."""
    _check_times(t, x.window_T)
    result = _kernel_sum(x.times, np.ones(x.count), k, t)
    return float(result) if np.ndim(t) == 0 else result


def single_shape_estimate(x: SpikeTrain, k: KernelSpec, t):
    """p_hat(t) = lambda_hat(t) / N; the zero function when N = 0."""
    if x.count == 0:
        _check_times(t, x.window_T)
        return 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
    return single_intensity_estimate(x, k, t) / x.count


def shape_mass(x: SpikeTrain, k: KernelSpec) -> float:
    """int_0^T p_hat(t) dt for one train.

    1 when every kernel bump fits inside the window; mass falling past 0
    or T is lost, since no boundary correction is applied.
    """
    if x.count == 0:
        return 0.0
    T = x.window_T
    kinks = np.concatenate([x.times - k.radius, x.times, x.times + k.radius])
    breakpoints = [0.0, T, *np.clip(kinks, 0.0, T).tolist()]
    return integrate_piecewise(lambda t: single_shape_estimate(x, k, t), breakpoints)


# --- Aggregated estimates ---

@dataclass(frozen=True, eq=False)
class ClassShapeEstimate:
    """Aggregated kernel estimate for one class."""
    label: ClassLabel
    spec: KernelSpec
    window_T: float
    L: int
    tau_hat: float
    events: np.ndarray = field(repr=False)          # pooled, sorted
    shape_weights: np.ndarray = field(repr=False)   # 1 / (L N_j) per event

    @classmethod
    def from_trains(cls, label: ClassLabel, trains: Sequence[SpikeTrain],
                    spec: KernelSpec, window_T: float) -> ClassShapeEstimate:
        if not trains:
            raise DegenerateModelError(f"class {label.name} has no training samples")
        L = len(trains)
        counts = np.array([x.count for x in trains], dtype=float)
        if counts.sum() == 0:
            events = np.empty(0)
            weights = np.empty(0)
        else:
            events = np.concatenate([x.times for x in trains])
            weights = np.concatenate([np.full(x.count, 1.0 / (L * x.count)) for x in trains if x.count])
            order = np.argsort(events, kind="stable")
            events, weights = events[order], weights[order]
        return cls(label, spec, float(window_T), L, float(counts.mean()), events, weights)

    def shape(self, t):
        """p_hat_i(t)."""
        return _kernel_sum(self.events, self.shape_weights, self.spec, t)

    def intensity(self, t):
        """lambda_hat_i(t), the mean of the single-sample intensity estimates."""
        return _kernel_sum(self.events, np.full(self.events.size, 1.0 / self.L), self.spec, t)

    @property
    def bandwidth(self) -> float:
        return self.spec.bandwidth


@dataclass(frozen=True)
class KernelShapeEstimate:
    """Fitted estimates for both classes on one window."""
    window_T: float
    classes: dict[ClassLabel, ClassShapeEstimate]

    def __getitem__(self, label: ClassLabel) -> ClassShapeEstimate:
        return self.classes[label]

    @property
    def L1(self) -> int:
        return self.classes[ClassLabel.OMEGA_1].L

    @property
    def L2(self) -> int:
        return self.classes[ClassLabel.OMEGA_2].L

    @property
    def bandwidths(self) -> tuple[float, float]:
        return (self.classes[ClassLabel.OMEGA_1].bandwidth,
                self.classes[ClassLabel.OMEGA_2].bandwidth)

    def export_rows(self, points: int = 201) -> list[tuple[str, float, float, float, float, float]]:
        """(class, t, p_hat, lambda_hat, tau_hat, h) on a uniform grid."""
        grid = np.linspace(0.0, self.window_T, points)
        rows = []
        for label, est in self.classes.items():
            shape = est.shape(grid)
            lam = est.intensity(grid)
            for t, p, lh in zip(grid, shape, lam):
                rows.append((f"omega{label.value}", float(t), float(p), float(lh),
                             est.tau_hat, est.bandwidth))
        return rows


def fit(data: TrainingSet, family: KernelFamily | str,
        bandwidths: tuple[float, float]) -> KernelShapeEstimate:
    """Aggregated per-class estimates with bandwidths (h1, h2)."""
    family = KernelFamily(family)
    classes = {}
    for label, h in zip(ClassLabel, bandwidths):
        classes[label] = ClassShapeEstimate.from_trains(
            label, data.trains(label), KernelSpec(family, h), data.window_T,
        )
    return KernelShapeEstimate(data.window_T, classes)


# --- Theoretical moments ---

def _window_integral(integrand, model: IntensityModel, spec: KernelSpec, t: float, T: float) -> float:
    lo = max(0.0, t - spec.radius)
    hi = min(T, t + spec.radius)
    if hi <= lo:
        return 0.0
    h = spec.bandwidth
    panels = max(1, int(math.ceil((hi - lo) / h)))
    extra = tuple(np.linspace(lo, hi, panels + 1).tolist()) + (t - h, t, t + h)
    return integrate_piecewise(integrand, quadrature_breakpoints(lo, hi, model, extra=extra))


def expected_estimate(model: IntensityModel, spec: KernelSpec, t: float, T: float) -> float:
    """E lambda_hat(t) = int_0^T K_h(t - s) lambda(s) ds."""
    _check_times(t, T)
    return _window_integral(
        lambda s: float(spec.scaled(t - s)) * float(model.rate_at(s)), model, spec, t, T,
    )


def variance_estimate(model: IntensityModel, spec: KernelSpec, t: float, L: int, T: float) -> float:
    """Var of the aggregated lambda_hat(t): (1/(L h)) int_0^T h^-1 K^2((t-s)/h) lambda(s) ds."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    _check_times(t, T)
    h = spec.bandwidth
    inner = _window_integral(
        lambda s: float(spec.family.density((t - s) / h)) ** 2 / h * float(model.rate_at(s)),
        model, spec, t, T,
    )
    return inner / (L * h)


# --- Cross-validation ---

@dataclass(frozen=True)
class CVTrace:
    """Held-out log-likelihood for every (bandwidth, fold)."""
    label: ClassLabel
    grid: tuple[float, ...]
    folds: int
    scores: tuple[tuple[float, ...], ...]        # scores[i][f] for grid[i], fold f
    held_out_events: int
    disqualified: tuple[bool, ...]
    chosen: float
    at_grid_edge: bool

    @property
    def totals(self) -> tuple[float, ...]:
        return tuple(float(sum(row)) for row in self.scores)

    @property
    def normalized(self) -> tuple[float, ...]:
        """Total held-out log-likelihood per held-out event."""
        n = max(self.held_out_events, 1)
        return tuple(total / n for total in self.totals)

    def rows(self) -> list[tuple[float, int, float]]:
        return [(h, f, s) for h, row in zip(self.grid, self.scores) for f, s in enumerate(row)]


@dataclass(frozen=True)
class _FoldTask:
    trains: tuple[SpikeTrain, ...]
    assignment: tuple[int, ...]
    folds: int
    spec: KernelSpec
    window_T: float
    label: ClassLabel


def _fold_scores(task: _FoldTask) -> tuple[tuple[float, ...], bool]:
    """Per-fold scores for one bandwidth and whether every fold was fully clipped."""
    scores = []
    clipped_folds = 0
    scored_folds = 0
    for f in range(task.folds):
        fit_on = [x for x, a in zip(task.trains, task.assignment) if a != f]
        held = [x.times for x, a in zip(task.trains, task.assignment) if a == f]
        events = np.concatenate(held) if held else np.empty(0)
        if events.size == 0:
            scores.append(0.0)
            continue
        est = ClassShapeEstimate.from_trains(task.label, fit_on, task.spec, task.window_T)
        density = est.shape(events)
        clipped = density < CV_DENSITY_FLOOR
        scores.append(float(np.sum(np.log(np.maximum(density, CV_DENSITY_FLOOR)))))
        scored_folds += 1
        if np.all(clipped):
            clipped_folds += 1
    return tuple(scores), scored_folds > 0 and clipped_folds == scored_folds


def fold_assignment(n: int, folds: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Round-robin fold ids over a seeded shuffle of n samples."""
    assignment = np.empty(n, dtype=int)
    assignment[rng.permutation(n)] = np.arange(n) % folds
    return tuple(int(a) for a in assignment)


def cross_validate_bandwidths(data: TrainingSet, label: ClassLabel, family: KernelFamily | str,
                              grid: Sequence[float] = DEFAULT_BANDWIDTH_GRID,
                              folds: int = DEFAULT_FOLDS, seed: int = 0,
                              threads: int = 1) -> CVTrace:
    """K-fold held-out log-likelihood of class `label` over a bandwidth grid.

    Samples, not events, are split into folds.  Held-out densities are
    floored at 1e-300 before the log; a bandwidth is disqualified only
    when every fold is fully floored.  Ties go to the smaller bandwidth.

    Raises:
        ValueError: Empty grid, folds < 2 or fewer samples than folds.
        DegenerateModelError: Every bandwidth disqualified.
    """
    family = KernelFamily(family)
    ordered = sorted(float(h) for h in grid)
    if not ordered:
        raise ValueError("bandwidth grid is empty")
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    trains = tuple(data.trains(label))
    if len(trains) < folds:
        raise ValueError(
            f"class {label.name} has {len(trains)} samples, fewer than {folds} folds"
        )

    assignment = fold_assignment(len(trains), folds, derive_rng(seed, "cv", int(label)))
    tasks = [
        _FoldTask(trains, assignment, folds, KernelSpec(family, h), data.window_T, label)
        for h in ordered
    ]
    results = parallel_map(_fold_scores, tasks, threads)

    best_index = None
    best_total = -math.inf
    for i, (row, disqualified) in enumerate(results):
        total = sum(row)
        logger.debug("cv %s h=%.4g: %.6g%s", label.name, ordered[i], total,
                     " (disqualified)" if disqualified else "")
        if not disqualified and (best_index is None or total > best_total):
            best_index, best_total = i, total
    if best_index is None:
        raise DegenerateModelError(
            f"every bandwidth leaves all held-out events of class {label.name} uncovered"
        )

    at_edge = len(ordered) > 1 and best_index in (0, len(ordered) - 1)
    return CVTrace(
        label=label,
        grid=tuple(ordered),
        folds=folds,
        scores=tuple(row for row, _ in results),
        held_out_events=sum(x.count for x in trains),
        disqualified=tuple(d for _, d in results),
        chosen=ordered[best_index],
        at_grid_edge=at_edge,
    )


def select_bandwidth_cv(data: TrainingSet, label: ClassLabel, family: KernelFamily | str,
                        grid: Sequence[float] = DEFAULT_BANDWIDTH_GRID,
                        folds: int = DEFAULT_FOLDS, seed: int = 0) -> float:
    """CV-selected bandwidth; a single-point grid is returned as is."""
    if len(grid) == 1:
        return float(grid[0])
    return cross_validate_bandwidths(data, label, family, grid, folds, seed).chosen


# --- Error summaries ---

def sup_error(estimate: ClassShapeEstimate, model: IntensityModel, T: float,
              eps: float = 0.5, points: int = 200) -> float:
    """max |lambda_hat - lambda| on a uniform grid of [eps, T - eps]."""
    if not 0 <= eps < T / 2:
        raise ValueError(f"eps must lie in [0, T/2), got {eps!r}")
    grid = np.linspace(eps, T - eps, points)
    return float(np.max(np.abs(estimate.intensity(grid) - model.rate_at(grid))))


def pointwise_mse(estimates: Sequence[ClassShapeEstimate], model: IntensityModel, t: float) -> float:
    """Mean squared error of lambda_hat(t) across independently fitted estimates."""
    if not estimates:
        raise ValueError("no estimates given")
    truth = float(model.rate_at(t))
    errors = [(float(est.intensity(t)) - truth) ** 2 for est in estimates]
    return float(np.mean(errors))
