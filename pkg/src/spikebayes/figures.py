"""Figure data as long-format CSV.

Each figure id expands the config into a list of points (one risk or
bandwidth measurement each).  Points carry seeds derived from the master
seed and their position in the figure, so the CSV is byte-identical for
any worker count.

Columns: figure, config_hash, seed, series, rule, quantity, T, L, h, value, se
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from spikebayes.bayes import BayesRule, estimate_bayes_risk
from spikebayes.config import ExperimentConfig
from spikebayes.diagnostics import Diagnostic, DiagnosticLog
from spikebayes.errors import FigureError
from spikebayes.intensity import Harmonic, IntensityModel, bhattacharyya_bound, verify_bounds
from spikebayes.io import write_rows
from spikebayes.kernel import KernelFamily
from spikebayes.parallel import parallel_map
from spikebayes.plugin import draw_training_set, estimate_plugin_risk, select_bandwidth
from spikebayes.simulate import ClassLabel, derive_seed

logger = logging.getLogger(__name__)

FIGURE_COLUMNS = ("figure", "config_hash", "seed", "series", "rule", "quantity",
                  "T", "L", "h", "value", "se")


@dataclass(frozen=True)
class FigureRow:
    series: str
    rule: str
    quantity: str
    T: float
    value: float
    seed: int
    L: int | None = None
    h: float | None = None
    se: float | None = None


@dataclass(frozen=True)
class _Point:
    kind: str               # "bayes", "plugin", "bandwidth"
    series: str
    lambda1: IntensityModel
    lambda2: IntensityModel
    priors: tuple[float, float]
    T: float
    seed: int
    n_test: int
    runs: int
    L: int | None = None
    kernel: KernelFamily = KernelFamily.GAUSSIAN
    grid: tuple[float, ...] = ()
    folds: int = 5


def _phi_series(phi1: float, phi2: float) -> str:
    return f"phi2/phi1={phi2 / phi1:.6g}"


def _bayes_point(p: _Point) -> list[FigureRow]:
    rule = BayesRule(p.lambda1, p.lambda2, p.priors, p.T)
    report = estimate_bayes_risk(rule, p.n_test, p.runs, p.seed)
    bound = bhattacharyya_bound(p.lambda1, p.lambda2, p.T, p.priors)
    return [
        FigureRow(p.series, "bayes", "risk", p.T, report.mean, p.seed, se=report.se),
        FigureRow(p.series, "bhattacharyya", "bound", p.T, bound, p.seed),
    ]


def _plugin_point(p: _Point, notes: DiagnosticLog) -> list[FigureRow]:
    report = estimate_plugin_risk(
        p.lambda1, p.lambda2, p.priors, p.L, p.T, p.kernel, p.n_test, p.runs, p.seed,
        grid=p.grid, folds=p.folds, diagnostics=notes,
    )
    h1 = float(np.mean([h[0] for h in report.plugin.bandwidths]))
    h2 = float(np.mean([h[1] for h in report.plugin.bandwidths]))
    return [
        FigureRow(p.series, "plugin", "risk", p.T, report.plugin.mean, p.seed, L=p.L,
                  se=report.plugin.se),
        FigureRow(p.series, "bayes", "risk", p.T, report.bayes.mean, p.seed, L=p.L,
                  se=report.bayes.se),
        FigureRow(p.series, "plugin", "agreement", p.T, report.agreement_rate, p.seed, L=p.L),
        FigureRow(p.series, "plugin", "h1", p.T, h1, p.seed, L=p.L),
        FigureRow(p.series, "plugin", "h2", p.T, h2, p.seed, L=p.L),
    ]


def _bandwidth_point(p: _Point, log: DiagnosticLog) -> list[FigureRow]:
    rule = BayesRule(p.lambda1, p.lambda2, p.priors, p.T)
    chosen: dict[ClassLabel, list[float]] = {label: [] for label in ClassLabel}
    normalized: dict[ClassLabel, list[tuple[float, ...]]] = {label: [] for label in ClassLabel}
    notes: list[Diagnostic] = []
    for run in range(p.runs):
        data = draw_training_set(rule, p.L, p.seed, run, notes)
        for label in ClassLabel:
            h, trace = select_bandwidth(data, label, p.kernel, p.grid, p.folds, p.seed, run, notes)
            chosen[label].append(h)
            if trace is not None:
                normalized[label].append(trace.normalized)
    log.records.extend(notes)

    rows = []
    for label in ClassLabel:
        values = np.array(chosen[label])
        se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else None
        rows.append(FigureRow(p.series, "cv", f"h{label.value}", p.T, float(values.mean()),
                              p.seed, L=p.L, se=se))
        if normalized[label]:
            mean_ll = np.mean(np.array(normalized[label]), axis=0)
            for h, ll in zip(p.grid, mean_ll):
                rows.append(FigureRow(p.series, "cv", f"loglik{label.value}", p.T, float(ll),
                                      p.seed, L=p.L, h=h))
    return rows


def _evaluate(p: _Point) -> tuple[list[FigureRow], list[Diagnostic]]:
    log = DiagnosticLog()
    if p.kind == "bayes":
        rows = _bayes_point(p)
    elif p.kind == "plugin":
        rows = _plugin_point(p, log)
    else:
        rows = _bandwidth_point(p, log)
    context = f"{p.series} T={p.T:g}" + (f" L={p.L}" if p.L is not None else "")
    return rows, [Diagnostic(d.category, d.message, f"{context} {d.context}".strip())
                  for d in log.records]


# --- Figure layouts ---

def _bayes_risk_vs_T(config: ExperimentConfig) -> list[_Point]:
    points = []
    for i, (phi1, phi2) in enumerate(config.phi_pairs):
        for k, T in enumerate(config.T_grid):
            points.append(_Point(
                "bayes", _phi_series(phi1, phi2), Harmonic(phi1), Harmonic(phi2),
                config.priors, T, derive_seed(config.seed, "bayes-risk-vs-T", i, k),
                config.n_test, config.runs,
            ))
    return points


def _plugin_points(config: ExperimentConfig, figure: str, series: str,
                   lambda1: IntensityModel, lambda2: IntensityModel,
                   Ts, Ls, key: int = 0) -> list[_Point]:
    points = []
    for j, L in enumerate(Ls):
        for k, T in enumerate(Ts):
            points.append(_Point(
                "plugin", series.format(L=L), lambda1, lambda2, config.priors, T,
                derive_seed(config.seed, figure, key, j, k), config.n_test, config.runs,
                L=L, kernel=config.kernel, grid=config.bandwidth_grid, folds=config.folds,
            ))
    return points


def _risk_vs_T_by_L(config: ExperimentConfig) -> list[_Point]:
    return _plugin_points(config, "risk-vs-T-by-L", "L={L}", config.class1, config.class2,
                          config.T_grid, config.L_grid)


def _bandwidth_vs_T(config: ExperimentConfig) -> list[_Point]:
    points = []
    for j, L in enumerate(config.bandwidth_L_grid):
        for k, T in enumerate(config.T_grid):
            points.append(_Point(
                "bandwidth", f"L={L}", config.class1, config.class2, config.priors, T,
                derive_seed(config.seed, "bandwidth-vs-T", j, k), 0, config.runs,
                L=L, kernel=config.kernel, grid=config.bandwidth_grid, folds=config.folds,
            ))
    return points


def _risk_vs_L_by_phi(config: ExperimentConfig) -> list[_Point]:
    points = []
    for i, (phi1, phi2) in enumerate(config.phi_pairs):
        series = _phi_series(phi1, phi2)
        points.append(_Point(
            "bayes", series, Harmonic(phi1), Harmonic(phi2), config.priors, config.T,
            derive_seed(config.seed, "risk-vs-L-by-phi", "reference", i),
            config.n_test, config.runs,
        ))
        points.extend(_plugin_points(config, "risk-vs-L-by-phi", series, Harmonic(phi1),
                                     Harmonic(phi2), (config.T,), config.L_grid, key=i))
    return points


def _gaussian_failure(config: ExperimentConfig) -> list[_Point]:
    first, second = config.failure_pair
    return _plugin_points(config, "gaussian-failure", "L={L}", first, second,
                          config.failure_T_grid, (config.L,))


FIGURES = {
    "bayes-risk-vs-T": _bayes_risk_vs_T,
    "risk-vs-T-by-L": _risk_vs_T_by_L,
    "bandwidth-vs-T": _bandwidth_vs_T,
    "risk-vs-L-by-phi": _risk_vs_L_by_phi,
    "gaussian-failure": _gaussian_failure,
}


def _bound_rows(config: ExperimentConfig, seed: int) -> list[FigureRow]:
    """delta and d_hat per window for the failure pair."""
    rows = []
    for label, model in zip(ClassLabel, config.failure_pair):
        for T in config.failure_T_grid:
            bounds = verify_bounds(model, T)
            series = f"omega{label.value}"
            rows.append(FigureRow(series, "bounds", "delta", T, bounds.delta, seed))
            rows.append(FigureRow(series, "bounds", "d_hat", T, bounds.d_hat, seed))
    return rows


def figure_rows(figure_id: str, config: ExperimentConfig,
                diagnostics: DiagnosticLog | None = None) -> list[tuple]:
    """All CSV rows (FIGURE_COLUMNS order) of one figure."""
    layout = FIGURES.get(figure_id)
    if layout is None:
        raise FigureError(f"unknown figure id '{figure_id}' (expected one of: {', '.join(FIGURES)})")
    points = layout(config)
    logger.info("figure %s: %d points, seed %d, config %s",
                figure_id, len(points), config.seed, config.config_hash)
    results = parallel_map(_evaluate, points, config.threads)

    rows: list[FigureRow] = []
    for point_rows, notes in results:
        rows.extend(point_rows)
        if diagnostics is not None:
            for note in notes:
                diagnostics.add(note.category, note.message, f"{figure_id} {note.context}")
    if figure_id == "gaussian-failure":
        rows.extend(_bound_rows(config, config.seed))
        for label, model in zip(ClassLabel, config.failure_pair):
            bounds = verify_bounds(model, max(config.failure_T_grid))
            if not bounds.a1_holds and diagnostics is not None:
                diagnostics.add("assumption_a1",
                                f"{model.label}: minimum rate {bounds.delta:.3g}",
                                f"{figure_id} omega{label.value}")

    digest = config.config_hash
    return [
        (figure_id, digest, r.seed, r.series, r.rule, r.quantity, r.T, r.L, r.h, r.value, r.se)
        for r in rows
    ]


def run_figure(figure_id: str, config: ExperimentConfig,
               diagnostics: DiagnosticLog | None = None) -> Path:
    """Write <out_dir>/<figure_id>.csv and return its path."""
    rows = figure_rows(figure_id, config, diagnostics)
    path = write_rows(Path(config.out_dir) / f"{figure_id}.csv", FIGURE_COLUMNS, rows)
    logger.info("wrote %s (%d rows)", path, len(rows))
    return path
