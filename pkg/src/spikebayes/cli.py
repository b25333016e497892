"""CLI entry point for spikebayes: spike-train classification experiments."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from spikebayes.bayes import BayesRule, estimate_bayes_risk, theoretical_report
from spikebayes.config import (
    ExperimentConfig,
    apply_overrides,
    default_config_text,
    load_config,
)
from spikebayes.diagnostics import Diagnostic, DiagnosticLog
from spikebayes.errors import ConfigError, SpikeBayesError
from spikebayes.figures import FIGURES, run_figure
from spikebayes.io import (
    read_dataset,
    write_cv_traces,
    write_dataset,
    write_estimate,
    write_risk_reports,
    write_theory,
)
from spikebayes.kernel import fit
from spikebayes.plugin import estimate_plugin_risk, select_bandwidth
from spikebayes.simulate import ClassLabel, generate_training_set
from spikebayes.validate import CHECKS, validate

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikebayes",
        description="Bayes and kernel plug-in classification of spike trains",
    )
    parser.add_argument("--config", help="Experiment config file (default: built-in defaults)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (overrides config)")
    parser.add_argument("--out-dir", default=None, help="Output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=None,
                        help="Worker processes (results do not depend on it)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config key, e.g. --set 'T_grid=[1, 2, 5]' (repeatable)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Errors only")

    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Generate a labeled training set as CSV")
    simulate.add_argument("-o", "--output", help="Events CSV path (default: <out-dir>/dataset.csv)")

    sub.add_parser("bayes-risk", help="Monte Carlo Bayes risk and theoretical report at T")
    sub.add_parser("plugin-risk", help="Plug-in risk at (T, L), paired with the Bayes risk")

    scan = sub.add_parser("bandwidth-scan",
                          help="Cross-validate bandwidths and export the fitted estimate")
    scan.add_argument("--dataset", help="Events CSV written by `simulate` (default: generate one)")

    figure = sub.add_parser("figure", help="Write the CSV data of one figure")
    figure.add_argument("figure_id", choices=sorted(FIGURES), help="Figure id")

    check = sub.add_parser("validate", help="Run the validation suite")
    check.add_argument("--quick", action="store_true",
                       help="Smaller Monte Carlo sizes; skip the slow checks")
    check.add_argument("--check", action="append", default=[], choices=sorted(CHECKS),
                       help="Run only this check (repeatable)")

    show = sub.add_parser("config", help="Print the resolved configuration and its hash")
    show.add_argument("--template", action="store_true",
                      help="Print the commented default config file instead")
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    base_dir = Path(args.config).parent if args.config else Path(".")
    assignments = list(args.set)
    if args.seed is not None:
        assignments.append(f"seed = {args.seed}")
    if args.threads is not None:
        assignments.append(f"threads = {args.threads}")
    if args.out_dir is not None:
        assignments.append(f"out_dir = {_quoted(args.out_dir)}")
    return apply_overrides(config, assignments, base_dir)


def _quoted(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _report_diagnostics(diagnostics: DiagnosticLog) -> None:
    if diagnostics.records:
        print(diagnostics.summary(), file=sys.stderr)


# --- Commands ---

def _cmd_simulate(config: ExperimentConfig, args: argparse.Namespace) -> int:
    data = generate_training_set(config.class1, config.class2, config.priors, config.L,
                                 config.T, config.seed, config.threads)
    output = Path(args.output) if args.output else Path(config.out_dir) / "dataset.csv"
    events, manifest = write_dataset(data, output)
    print(f"Written: {events} ({data.L} trains, L1={data.L1}, L2={data.L2})", file=sys.stderr)
    print(f"Written: {manifest}", file=sys.stderr)
    return 0


def _cmd_bayes_risk(config: ExperimentConfig, args: argparse.Namespace) -> int:
    rule = BayesRule(config.class1, config.class2, config.priors, config.T)
    report = estimate_bayes_risk(rule, config.n_test, config.runs, config.seed, config.threads)
    out = Path(config.out_dir)
    write_risk_reports([report], out / "bayes_risk.csv", config.config_hash)
    theory = theoretical_report(rule)
    write_theory(theory, out / "theory.csv", config.seed)
    print(f"Bayes risk at T={config.T:g}: {report.mean:.4f} +/- {report.se:.4f} "
          f"({report.runs} runs x {report.n_test} trains)")
    print(f"Bhattacharyya bound: {theory.bhattacharyya:.4f}")
    if theory.available:
        print(f"Chebyshev bound: {theory.chebyshev_bound:.4g}, "
              f"exponential bound: {theory.exponential_bound:.4g}")
    else:
        print(f"Theoretical bounds unavailable: {theory.note}")
    print(f"Written: {out / 'bayes_risk.csv'}, {out / 'theory.csv'}", file=sys.stderr)
    return 0


def _cmd_plugin_risk(config: ExperimentConfig, args: argparse.Namespace) -> int:
    diagnostics = DiagnosticLog()
    report = estimate_plugin_risk(
        config.class1, config.class2, config.priors, config.L, config.T, config.kernel,
        config.n_test, config.runs, config.seed, config.bandwidth_grid, config.folds,
        config.threads, diagnostics,
    )
    path = write_risk_reports([report.plugin, report.bayes],
                              Path(config.out_dir) / "plugin_risk.csv", config.config_hash)
    print(f"Plug-in risk at T={config.T:g}, L={config.L}: "
          f"{report.plugin.mean:.4f} +/- {report.plugin.se:.4f}")
    print(f"Paired Bayes risk: {report.bayes.mean:.4f} +/- {report.bayes.se:.4f}")
    print(f"Decision agreement: {report.agreement_rate:.3f}")
    _report_diagnostics(diagnostics)
    print(f"Written: {path}", file=sys.stderr)
    return 0


def _cmd_bandwidth_scan(config: ExperimentConfig, args: argparse.Namespace) -> int:
    if args.dataset:
        data = read_dataset(args.dataset)
    else:
        data = generate_training_set(config.class1, config.class2, config.priors, config.L,
                                     config.T, config.seed, config.threads)
    notes: list[Diagnostic] = []
    bandwidths = []
    traces = []
    for label in ClassLabel:
        h, trace = select_bandwidth(data, label, config.kernel, config.bandwidth_grid,
                                    config.folds, config.seed, 0, notes)
        bandwidths.append(h)
        if trace is not None:
            traces.append(trace)
        print(f"omega{label.value}: h = {h:.4g} ({data.class_count(label)} trains)")
    estimate = fit(data, config.kernel, (bandwidths[0], bandwidths[1]))
    out = Path(config.out_dir)
    write_cv_traces(traces, out / "cv.csv")
    write_estimate(estimate, out / "estimate.csv")
    diagnostics = DiagnosticLog()
    for note in notes:
        diagnostics.add(note.category, note.message, note.context)
    _report_diagnostics(diagnostics)
    print(f"Written: {out / 'cv.csv'}, {out / 'estimate.csv'}", file=sys.stderr)
    return 0


def _cmd_figure(config: ExperimentConfig, args: argparse.Namespace) -> int:
    diagnostics = DiagnosticLog()
    path = run_figure(args.figure_id, config, diagnostics)
    _report_diagnostics(diagnostics)
    print(f"Written: {path}", file=sys.stderr)
    return 0


def _cmd_validate(config: ExperimentConfig, args: argparse.Namespace) -> int:
    report, path = validate(config, quick=args.quick, only=tuple(args.check))
    print(report.summary())
    print(f"Written: {path}", file=sys.stderr)
    return 0 if report.passed else 1


def _cmd_config(config: ExperimentConfig, args: argparse.Namespace) -> int:
    if args.template:
        print(default_config_text(), end="")
    else:
        print(config.canonical())
        print(f"# config hash: {config.config_hash}")
    return 0


COMMANDS = {
    "simulate": _cmd_simulate,
    "bayes-risk": _cmd_bayes_risk,
    "plugin-risk": _cmd_plugin_risk,
    "bandwidth-scan": _cmd_bandwidth_scan,
    "figure": _cmd_figure,
    "validate": _cmd_validate,
    "config": _cmd_config,
}


def main(argv: list[str] | None = None) -> None:
    args = _build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        config = _resolve_config(args)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(2)

    try:
        code = COMMANDS[args.command](config, args)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(2)
    except (SpikeBayesError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()
