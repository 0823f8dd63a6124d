"""Command-line entry point wiring training, calibration, detection,
simulation and benchmarking.

Exit codes: 0 success, 1 usage error, 2 data error, 3 calibration error.
Diagnostics go to stderr; machine-readable output goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench, core, detector, streams
from .calibrate import threshold_for_far
from .localize import localize as _localize
from .exceptions import (
    ConfigError,
    ConvergenceError,
    CorruptModel,
    DegenerateDimension,
    DegenerateTrivialOnly,
    DimensionMismatch,
    InsufficientData,
    InvalidSpec,
    KnnidsError,
    NoPositiveRoot,
    ParseError,
    VersionMismatch,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CALIBRATION = 3

_DATA_ERRORS = (
    ParseError, DimensionMismatch, CorruptModel, VersionMismatch,
    InsufficientData, DegenerateDimension, InvalidSpec, ConfigError,
    OSError, json.JSONDecodeError,
)
_CALIBRATION_ERRORS = (
    NoPositiveRoot, DegenerateTrivialOnly, ConvergenceError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; our contract says 1."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="knnids", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    p = sub.add_parser("train", help="train a detector model from nominal CSV data")
    p.add_argument("--data", required=True, help="CSV matrix of nominal observations")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--ratio", type=float, default=1.0 / 3.0,
                   help="fraction of training data in the first partition half")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("calibrate", help="embed a decision threshold for a FAR target")
    p.add_argument("--model", required=True)
    p.add_argument("--beta", type=float, required=True, help="target false alarm rate")
    p.add_argument("--out", required=True)

    p = sub.add_parser("detect", help="scan JSONL streams, one detector per source")
    p.add_argument("--model", required=True)
    p.add_argument("--stream", required=True, help="JSONL stream file")
    p.add_argument("--localize", action="store_true",
                   help="flag attacked dimensions after each alarm")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="localization threshold (required with --localize)")
    p.add_argument("--h", type=float, default=None,
                   help="override the model's decision threshold")
    p.add_argument("--report", required=True, help="JSONL report file to write")

    p = sub.add_parser("simulate", help="generate a synthetic scenario stream")
    p.add_argument("--spec", required=True, help="scenario config (JSON)")
    p.add_argument("--out", required=True,
                   help="output path; .csv writes a matrix, anything else JSONL")

    p = sub.add_parser("bench", help="run the benchmark config and export CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    return parser


# --------------------------------------------------------------------------
# subcommands


def _cmd_train(args) -> int:
    instances = streams.ingest(args.data, "csv_matrix")
    if not instances:
        raise InsufficientData(f"no observations in {args.data}")
    params = detector.Hyperparams(k=args.k, s=args.s, gamma=args.gamma,
                                  alpha=args.alpha)
    model = detector.fit(core.as_matrix(instances), params,
                         ratio=args.ratio, seed=args.seed)
    streams.save_model(model, args.out)
    print(f"trained d={model.d} model: baseline_LM={model.baseline_LM!r} "
          f"phi={model.evidence_bound_phi!r} -> {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    if not 0.0 < args.beta < 1.0:
        raise _UsageError(f"--beta must be in (0, 1), got {args.beta}")
    model = streams.load_model(args.model)
    cal = threshold_for_far(model, args.beta)
    streams.save_model(model.with_threshold(cal.h, calibration=cal), args.out)
    print(f"calibrated beta={cal.beta!r}: omega0={cal.omega0!r} h={cal.h!r} "
          f"-> {args.out}")
    return EXIT_OK


def _cmd_detect(args) -> int:
    if args.localize and args.lam is None:
        raise _UsageError("--localize requires --lambda")
    model = streams.load_model(args.model)
    h = args.h if args.h is not None else model.params.h
    if h is None:
        raise _UsageError("model has no embedded threshold; calibrate or pass --h")
    instances = streams.ingest(args.stream, "jsonl_stream")
    by_source: dict[str, list] = {}
    for inst in instances:  # first-appearance order, one detector per source
        by_source.setdefault(inst.source_id, []).append(inst)
    n_alarms = 0
    with open(args.report, "w", encoding="utf-8") as fh:
        for source_id, insts in by_source.items():
            insts.sort(key=lambda i: i.t)
            report = detector.run_stream(insts, model, h=h, source_id=source_id)
            if report is None:
                continue
            n_alarms += 1
            record = {
                "source_id": source_id,
                "T": report.alarm_time_T,
                "q": report.onset_q,
                "final_stat": report.final_stat,
                "flagged_dims": [],
                "mean_contributions": [],
            }
            if args.localize:
                loc = _localize(report, args.lam)
                record["flagged_dims"] = list(loc.flagged)
                record["mean_contributions"] = list(loc.mean_contributions)
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"{n_alarms} alarm(s) over {len(by_source)} source(s) -> {args.report}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    spec = bench.scenario_from_dict(raw)
    X, _ = streams.generate(spec)
    if args.out.endswith(".csv"):
        streams.export_csv(X, args.out)
    else:
        source_id = str(raw.get("source_id", "sim"))
        streams.export_jsonl(streams.to_instances(X, source_id=source_id), args.out)
    print(f"{spec.horizon} ticks x {spec.d} dims -> {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = bench.load_config(args.config)
    results = bench.run_bench(config)
    paths = bench.export_results(results, args.out_dir)
    for path in paths:
        print(path)
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "calibrate": _cmd_calibrate,
    "detect": _cmd_detect,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise _UsageError("a subcommand is required")
        return _COMMANDS[args.subcommand](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _CALIBRATION_ERRORS as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KnnidsError) as exc:
        # invalid parameter combinations reaching domain validation
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
