"""
Command line interface.

    tracemethod infer X.csv Y.csv [options]
    tracemethod infer XY.csv --split-index 23 [options]
    tracemethod simulate --setting deterministic --dims 50,100,200 [options]

Exit codes: 0 on a verdict, 1 on I/O errors, 2 on degenerate input,
64 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .errors import DegenerateInputError, IngestError, InsufficientDataError, TraceMethodError
from .ingest import IngestOptions, ingest
from .report import RunReport
from .simulation import SETTINGS, SimulationConfig, run_experiment, tables_to_csv, tables_to_json, trials_to_csv
from .sparse_noisy import ScreeningConfig
from .trace_method import DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_ROTATIONS, epsilon_decide, infer

EXIT_OK = 0
EXIT_IO = 1
EXIT_DEGENERATE = 2
EXIT_USAGE = 64

log = logging.getLogger("tracemethod")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _unit_interval(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {s}")
    return v


def _dims(s):
    try:
        dims = [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid dimension grid {s!r}") from None
    if not dims or any(d < 2 for d in dims):
        raise argparse.ArgumentTypeError(f"invalid dimension grid {s!r}")
    return dims


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tracemethod", description="Trace-condition causal direction test.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--alpha", type=_unit_interval, default=DEFAULT_ALPHA)
    common.add_argument("--rotations", type=_positive_int, default=DEFAULT_ROTATIONS)
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive_int, default=1)

    pi = sub.add_parser("infer", parents=[common], help="test the causal direction between two CSV datasets")
    pi.add_argument("x_path", type=Path)
    pi.add_argument("y_path", type=Path, nargs="?")
    pi.add_argument("--split-index", type=_positive_int, help="split a single CSV at this column")
    pi.add_argument("--sparse", action="store_true", help="screening + OLS structure estimate")
    pi.add_argument("--screen-size", type=_positive_int, help="screened predictors per row (default ceil(k/3))")
    pi.add_argument("--screen-method", choices=("auto", "lars", "sis"), default="auto")
    pi.add_argument("--pseudo-count", action="store_true", help="use (count+1)/(N+1) p-values")
    pi.add_argument("--generic-rank", action="store_true", help="force covariance rank min(dim, k-1)")
    pi.add_argument("--standardize", action="store_true")
    pi.add_argument("--subsample-stride", type=_positive_int)
    pi.add_argument("--subsample-dims", type=_positive_int)
    pi.add_argument("--json", action="store_true", help="emit the JSON report")
    pi.add_argument("--timing", action="store_true", help="record wall-clock time in the report")
    pi.add_argument("-o", "--output", type=Path)
    pi.set_defaults(func=cmd_infer)

    ps = sub.add_parser("simulate", parents=[common], help="run a simulation campaign")
    ps.add_argument("--setting", choices=SETTINGS, required=True)
    ps.add_argument("--dims", type=_dims, required=True, help="comma separated dimensions")
    ps.add_argument("--trials", type=_positive_int, default=100)
    ps.add_argument("--k", type=_positive_int, help="sample count (default n // 2)")
    ps.add_argument("--sigma", type=float)
    ps.add_argument("--sparsity", type=float)
    ps.add_argument("--noise", choices=("rotated", "diagonal"))
    ps.add_argument("--format", choices=("csv", "json"), default="csv")
    ps.add_argument("--raw", type=Path, help="also write per-trial results (CSV)")
    ps.add_argument("-o", "--output", type=Path)
    ps.set_defaults(func=cmd_simulate)
    return p


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_infer(args) -> int:
    if args.y_path is None and args.split_index is None:
        raise UsageError("give a Y file or --split-index")
    opts = IngestOptions(
        subsample_stride=args.subsample_stride,
        subsample_dims=args.subsample_dims,
        standardize=args.standardize,
        seed=args.seed,
    )
    data = ingest(args.x_path, args.y_path, args.split_index, opts)
    screening = ScreeningConfig(target_size=args.screen_size, method=args.screen_method, threads=args.threads)
    t0 = time.perf_counter()
    result = infer(
        data,
        alpha=args.alpha,
        rotations=args.rotations,
        seed=args.seed,
        sparse=args.sparse,
        screening=screening,
        pseudo_count=args.pseudo_count,
        generic_rank=args.generic_rank,
        threads=args.threads,
    )
    elapsed = time.perf_counter() - t0
    inputs = dict(
        n=data.n,
        m=data.m,
        k=data.k,
        x_path=str(args.x_path),
        y_path=None if args.y_path is None else str(args.y_path),
        split_index=args.split_index,
        rotations=args.rotations,
        sparse=args.sparse,
        screen_size=args.screen_size,
        screen_method=args.screen_method,
        pseudo_count=args.pseudo_count,
        generic_rank=args.generic_rank,
        standardize=args.standardize,
        subsample_stride=args.subsample_stride,
        subsample_dims=args.subsample_dims,
    )
    report = RunReport.from_result(
        result,
        epsilon_decide(result.deltas, args.epsilon),
        inputs=inputs,
        seed=args.seed,
        timing={"seconds": elapsed} if args.timing else None,
    )
    _emit(report.to_json() if args.json else report.to_text(), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    overrides = dict(
        k=args.k,
        sigma=args.sigma,
        sparsity=args.sparsity,
        noise=args.noise,
        seed=args.seed,
        trials=args.trials,
        alpha=args.alpha,
        rotations=args.rotations,
        epsilon=args.epsilon,
    )
    try:
        configs = [SimulationConfig.for_setting(args.setting, n, **overrides) for n in args.dims]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    results = [run_experiment(c, threads=args.threads) for c in configs]
    if args.format == "json":
        header = dict(
            schema_version="1",
            version=__version__,
            setting=args.setting,
            seed=args.seed,
            dims=args.dims,
            trials=args.trials,
            alpha=args.alpha,
            rotations=args.rotations,
        )
        text = tables_to_json(results, header)
    else:
        text = tables_to_csv(results)
    _emit(text, args.output)
    if args.raw is not None:
        args.raw.write_text(trials_to_csv(results))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tracemethod: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateInputError, InsufficientDataError) as exc:
        print(f"tracemethod: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IngestError, OSError) as exc:
        print(f"tracemethod: {exc}", file=sys.stderr)
        return EXIT_IO
    except TraceMethodError as exc:
        print(f"tracemethod: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
