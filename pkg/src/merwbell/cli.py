"""Command line entry point.

    merwbell evolve CONFIG [--steps T]
    merwbell stationary CONFIG
    merwbell measure CONFIG [--pair xy|yz|zx]
    merwbell bell CONFIG [--mode measured|unmeasured]
    merwbell simulate CONFIG [--seed S] [--samples N] [--workers W]

Common flags: ``--format text|json|csv`` and ``--output PATH``.  A relative
output path is resolved against ``$MERWBELL_OUTPUT_DIR`` when that is set.

Exit codes: 0 success, 2 usage or config error, 3 precondition error (for
example a periodic graph), 4 a statistical check failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import reports
from .config import FORMATS, ConfigError, ExperimentFile, load_experiment
from .measurement import (
    MERMIN_PAIRS,
    MeasurementError,
    MeasurementPair,
    bell_sum_measured,
    bell_sum_unmeasured,
    equality_probability,
    measurement_ensemble,
)
from .montecarlo import SamplerConfig, validate_all
from .path_ensemble import CountVector, PathEnsembleError, arrival_distribution, evolve_sequence
from .statespace import StateSpaceError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_STATISTICAL = 4

OUTPUT_DIR_ENV = "MERWBELL_OUTPUT_DIR"

log = logging.getLogger("merwbell")


class UsageError(Exception):
    pass


def _start(exp: ExperimentFile) -> CountVector:
    return CountVector(exp.walk.start_counts())


def cmd_evolve(exp: ExperimentFile, steps: int | None = None):
    steps = exp.steps if steps is None else steps
    if steps < 0:
        raise UsageError("--steps must be >= 0")
    rows = evolve_sequence(exp.graph, _start(exp), steps)
    return reports.evolve_records(exp.graph, rows), reports.evolve_text(exp.graph, rows, exp.label)


def cmd_stationary(exp: ExperimentFile):
    arrival = arrival_distribution(exp.graph, _start(exp), exact=exp.mode == "exact")
    return (reports.stationary_records(exp.graph, arrival),
            reports.stationary_text(exp.graph, arrival, exp.label))


def _pairs(exp: ExperimentFile, text: str | None):
    if text:
        pairs = tuple(MeasurementPair.parse(p) for p in text.split(","))
    elif exp.pairs is not None:
        pairs = exp.pairs
    elif exp.graph.n == 3:
        pairs = MERMIN_PAIRS
    else:
        raise UsageError("graphs with n != 3 need --pair or a 'pairs' list in the config")
    for p in pairs:
        p.check(exp.graph.n)
    return pairs


def cmd_measure(exp: ExperimentFile, pair: str | None = None):
    pairs = _pairs(exp, pair)
    arrival = arrival_distribution(exp.graph, _start(exp))
    records, text = [], []
    for p in pairs:
        ens = measurement_ensemble(exp.graph, arrival, p)
        outcome = equality_probability(ens)
        records += reports.measure_records(ens, outcome)
        text.append(reports.measure_text(ens, outcome, exp.label))
    return records, "\n".join(text)


def cmd_bell(exp: ExperimentFile, mode: str = "measured", pair: str | None = None):
    pairs = _pairs(exp, pair)
    arrival = arrival_distribution(exp.graph, _start(exp))
    if mode == "measured":
        bell = bell_sum_measured(exp.graph, arrival, pairs)
    else:
        bell = bell_sum_unmeasured(arrival, pairs)
    mermin = exp.graph.n == 3 and set(pairs) == set(MERMIN_PAIRS) and len(pairs) == 3
    return (reports.bell_records(bell, mode, mermin),
            reports.bell_text(bell, mode, mermin, exp.label))


def cmd_simulate(exp: ExperimentFile, sampler: SamplerConfig | None = None, exact_overrides=None):
    sampler = sampler or exp.sampler
    pairs = exp.pairs if exp.pairs is not None or exp.graph.n != 3 else None
    report = validate_all(exp.walk, sampler, exp.steps, pairs, exact_overrides)
    return report, reports.simulate_records(report), reports.simulate_text(report, exp.label)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment file (JSON)")
    common.add_argument("--format", choices=FORMATS, help="output format (default: from config, else text)")
    common.add_argument("--output", help="write to this file instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="merwbell", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common], help="exact path counts n_0 .. n_T")
    p.add_argument("--steps", type=int)
    sub.add_parser("stationary", parents=[common], help="limiting arrival distribution")
    p = sub.add_parser("measure", parents=[common], help="one-step measurement ensembles")
    p.add_argument("--pair", help="xy, yz, zx or i-j; comma separated for several (default: all)")
    p = sub.add_parser("bell", parents=[common], help="sum of pairwise equality probabilities")
    p.add_argument("--mode", choices=("measured", "unmeasured"), default="measured")
    p.add_argument("--pair", help="explicit pair list, comma separated")
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of every exact value")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)
    return parser


def _resolve_output(path: str | None) -> Path | None:
    if not path or path == "-":
        return None
    out = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not out.is_absolute():
        out = Path(base) / out
    return out


def _emit(command: str, fmt: str, records, text: str, path: Path | None):
    if fmt == "json":
        body = reports.to_jsonl(records)
    elif fmt == "csv":
        body = reports.to_csv(records, reports.CSV_TABLE[command])
    else:
        body = text
    if path is None:
        sys.stdout.write(body)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(body)


def main(argv=None, exact_overrides=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        exp = load_experiment(args.config)
        fmt = args.format or exp.output_format
        path = _resolve_output(args.output or exp.output_path)
        status = EXIT_OK
        if args.command == "evolve":
            records, text = cmd_evolve(exp, args.steps)
        elif args.command == "stationary":
            records, text = cmd_stationary(exp)
        elif args.command == "measure":
            records, text = cmd_measure(exp, args.pair)
        elif args.command == "bell":
            records, text = cmd_bell(exp, args.mode, args.pair)
        else:
            overrides = {k: v for k, v in (("seed", args.seed), ("samples", args.samples),
                                           ("workers", args.workers)) if v is not None}
            try:
                sampler = replace(exp.sampler, **overrides)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            report, records, text = cmd_simulate(exp, sampler, exact_overrides)
            if not report.passed:
                status = EXIT_STATISTICAL
        _emit(args.command, fmt, records, text, path)
        return status
    except (ConfigError, UsageError) as exc:
        print(f"merwbell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StateSpaceError, PathEnsembleError, MeasurementError) as exc:
        print(f"merwbell: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
