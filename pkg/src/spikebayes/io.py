"""CSV adapters for datasets, intensities and experiment results.

All writers use "\\n" line endings and repr() floats so identical inputs
give byte-identical files.  Column layouts are documented in
docs/csv_schema.md.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from spikebayes.errors import DatasetError
from spikebayes.intensity import Tabulated
from spikebayes.simulate import ClassLabel, LabeledSample, SpikeTrain, TrainingSet

if TYPE_CHECKING:
    from spikebayes.bayes import RiskReport, TheoreticalRiskReport
    from spikebayes.kernel import CVTrace, KernelShapeEstimate

DATASET_COLUMNS = ("sample_id", "label", "event_time")
MANIFEST_HEADER = ("T", "L", "seed", "pi1", "pi2")
MANIFEST_COLUMNS = ("sample_id", "label", "count")
RISK_COLUMNS = ("config_id", "rule", "T", "L", "run", "risk", "n_test", "seed", "h1", "h2")
THEORY_COLUMNS = ("T", "quantity", "value", "class", "seed")
ESTIMATE_COLUMNS = ("class", "t", "p_hat", "lambda_hat", "tau_hat", "h")
CV_COLUMNS = ("class", "h", "fold", "log_likelihood")


def fmt(value) -> str:
    """Stable text for a CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def _read_rows(path: Path) -> list[list[str]]:
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        return [row for row in csv.reader(f) if row]


# --- Datasets ---

def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.csv")


def write_dataset(data: TrainingSet, path: str | Path) -> tuple[Path, Path]:
    """Events CSV (one row per event) plus the sidecar manifest.

    The manifest carries (T, L, seed, priors) and one row per sample, so
    empty trains survive the round trip.
    """
    events = []
    for j, sample in enumerate(data.samples):
        for t in sample.train.times:
            events.append((j, sample.label.value, float(t)))
    events_path = write_rows(path, DATASET_COLUMNS, events)

    mpath = manifest_path(path)
    mpath.parent.mkdir(parents=True, exist_ok=True)
    with open(mpath, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        writer.writerow([fmt(data.window_T), data.L, fmt(data.seed),
                         fmt(data.priors[0]), fmt(data.priors[1])])
        writer.writerow(MANIFEST_COLUMNS)
        for j, sample in enumerate(data.samples):
            writer.writerow([j, sample.label.value, sample.train.count])
    return events_path, mpath


def _cell(convert, text: str, where: str):
    try:
        return convert(text)
    except ValueError:
        raise DatasetError(f"{where}: bad value {text!r}") from None


def read_dataset(path: str | Path) -> TrainingSet:
    """Read a dataset written by write_dataset.

    Raises:
        FileNotFoundError: If the events file or its manifest is missing.
        DatasetError: If either file is malformed or the two disagree.
    """
    path = Path(path)
    mpath = manifest_path(path)
    manifest = _read_rows(mpath)
    if (len(manifest) < 3 or tuple(manifest[0]) != MANIFEST_HEADER
            or len(manifest[1]) != len(MANIFEST_HEADER) or tuple(manifest[2]) != MANIFEST_COLUMNS):
        raise DatasetError(f"{mpath}: not a dataset manifest")
    T_text, L_text, seed_text, pi1_text, pi2_text = manifest[1]
    T = _cell(float, T_text, f"{mpath} T")
    entries = manifest[3:]
    if len(entries) != _cell(int, L_text, f"{mpath} L"):
        raise DatasetError(f"manifest lists {len(entries)} samples but declares L={L_text}")

    rows = _read_rows(path)
    if not rows or tuple(rows[0]) != DATASET_COLUMNS:
        raise DatasetError(f"{path}: expected header {','.join(DATASET_COLUMNS)}")
    times: dict[int, list[float]] = {}
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(DATASET_COLUMNS):
            raise DatasetError(f"{path} row {n}: expected {len(DATASET_COLUMNS)} columns, got {len(row)}")
        sample_id, _label, event_time = row
        times.setdefault(_cell(int, sample_id, f"{path} row {n}"), []).append(
            _cell(float, event_time, f"{path} row {n}"))

    listed = set()
    samples = []
    for n, entry in enumerate(entries, start=4):
        if len(entry) != len(MANIFEST_COLUMNS):
            raise DatasetError(f"{mpath} row {n}: expected {len(MANIFEST_COLUMNS)} columns, got {len(entry)}")
        sample_id, label, count = entry
        j = _cell(int, sample_id, f"{mpath} row {n}")
        listed.add(j)
        events = times.get(j, [])
        if len(events) != _cell(int, count, f"{mpath} row {n}"):
            raise DatasetError(f"sample {j}: manifest count {count} but {len(events)} events")
        try:
            samples.append(LabeledSample(SpikeTrain(np.array(events), T),
                                         ClassLabel(_cell(int, label, f"{mpath} row {n}"))))
        except DatasetError:
            raise
        except ValueError as exc:
            raise DatasetError(f"sample {j}: {exc}") from exc
    unlisted = sorted(set(times) - listed)
    if unlisted:
        raise DatasetError(f"{path}: events for samples {unlisted} missing from the manifest")
    seed = _cell(int, seed_text, f"{mpath} seed") if seed_text else None
    priors = (_cell(float, pi1_text, f"{mpath} pi1"), _cell(float, pi2_text, f"{mpath} pi2"))
    try:
        return TrainingSet(tuple(samples), T, priors, seed)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc


# --- Intensities ---

def read_tabulated_intensity(path: str | Path) -> Tabulated:
    """Two-column CSV (t, lambda) with a header row."""
    path = Path(path)
    rows = _read_rows(path)
    if not rows:
        raise DatasetError(f"{path}: empty file")
    try:
        pairs = [(float(a), float(b)) for a, b in rows[1:]]
    except ValueError as exc:
        raise DatasetError(f"{path}: expected two numeric columns (t, lambda): {exc}") from exc
    return Tabulated(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


# --- Results ---

def risk_rows(report: RiskReport, config_id: str) -> list[tuple]:
    rows = []
    for run, risk in enumerate(report.risks):
        h1, h2 = report.bandwidths[run] if report.bandwidths else (None, None)
        rows.append((config_id, report.rule, report.window_T, report.L, run, risk,
                     report.n_test, report.seed, h1, h2))
    return rows


def write_risk_reports(reports: Sequence[RiskReport], path: str | Path, config_id: str) -> Path:
    rows = [row for report in reports for row in risk_rows(report, config_id)]
    return write_rows(path, RISK_COLUMNS, rows)


def write_theory(report: TheoreticalRiskReport, path: str | Path, seed: int | None = None) -> Path:
    rows = [(report.window_T, name, value, cls, seed) for name, value, cls in report.rows()]
    return write_rows(path, THEORY_COLUMNS, rows)


def write_estimate(estimate: KernelShapeEstimate, path: str | Path, points: int = 201) -> Path:
    return write_rows(path, ESTIMATE_COLUMNS, estimate.export_rows(points))


def write_cv_traces(traces: Sequence[CVTrace], path: str | Path) -> Path:
    rows = [
        (f"omega{trace.label.value}", h, fold, ll)
        for trace in traces
        for h, fold, ll in trace.rows()
    ]
    return write_rows(path, CV_COLUMNS, rows)
