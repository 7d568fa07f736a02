"""Command-line front end.

Three subcommands share the problem options:

``sweep``
    solve every (D, P) pair and write one row per pair;
``eps-study``
    error against a reference and wall time for a list of epsilon values;
``surface``
    (D, P, rate) triples over a full grid.

Exit codes: 0 success, 1 configuration error, 2 at least one instance
failed, 3 validation mismatch.
"""

import argparse
import sys
from pathlib import Path

from .errors import InvalidInputError
from .experiments import (
    EPS_COLUMNS,
    SURFACE_COLUMNS,
    SweepConfig,
    build_source,
    emit_surface,
    grid,
    render_table,
    run_epsilon_study,
    run_sweep,
    sweep_columns,
)
from .solver import DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL
from .sources import dump_source

EXIT_OK, EXIT_CONFIG, EXIT_INSTANCE, EXIT_MISMATCH = 0, 1, 2, 3
DEFAULT_EPS_LIST = (1e-1, 5e-2, 1e-2, 5e-3, 1e-4)


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved here for
    # instance failures, so usage errors are mapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_problem_options(parser):
    src = parser.add_argument_group("source")
    src.add_argument("--source", choices=("binary", "gauss", "file"), default="binary")
    src.add_argument("--source-file", help="two-column 'x p' text file (with --source file)")
    src.add_argument("--p", type=float, default=0.1, help="P(X = 1) of the binary source")
    src.add_argument("--mu", type=float, default=0.0)
    src.add_argument("--sigma", type=float, default=2.0)
    src.add_argument("--S", type=float, default=8.0, help="truncation half-width")
    src.add_argument("--delta", type=float, default=0.5, help="grid spacing")
    src.add_argument("--rec-file", help="reconstruction alphabet, one point per line")
    src.add_argument("--dump-source", metavar="PATH", help="also write the source in file format")

    prob = parser.add_argument_group("problem")
    prob.add_argument(
        "--perception",
        choices=("w2", "tv", "kl", "cost-file"),
        help="perception measure (default: tv for binary, w2 otherwise); "
        "w2 thresholds bound the squared distance",
    )
    prob.add_argument("--cost-file", help="perception ground cost matrix (with cost-file)")
    prob.add_argument(
        "--distortion",
        choices=("hamming", "squared", "file"),
        help="per-letter distortion (default: hamming for binary, squared otherwise)",
    )
    prob.add_argument("--distortion-file", help="distortion matrix (with --distortion file)")
    dgroup = prob.add_mutually_exclusive_group(required=True)
    dgroup.add_argument("--D", type=float, nargs="+", metavar="D", help="explicit D values")
    dgroup.add_argument("--D-grid", type=float, nargs=3, metavar=("MIN", "MAX", "COUNT"))
    pgroup = prob.add_mutually_exclusive_group()
    pgroup.add_argument("--P", type=float, nargs="+", metavar="P", help="explicit P values")
    pgroup.add_argument("--P-grid", type=float, nargs=3, metavar=("MIN", "MAX", "COUNT"))
    pgroup.add_argument(
        "--no-perception", action="store_true", help="drop the perception constraint"
    )
    prob.add_argument(
        "--P-unsquared",
        action="store_true",
        help="w2 thresholds are distances; they are squared before use",
    )

    run = parser.add_argument_group("solver and output")
    run.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    run.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    run.add_argument("--tol", type=float, default=DEFAULT_TOL)
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--output", help="output file (default: stdout)")
    run.add_argument("--bits", action="store_true", help="report rates and errors in bits")
    run.add_argument(
        "--no-timing",
        action="store_true",
        help="write nan instead of wall times so reruns are byte-identical",
    )


def build_parser():
    parser = _Parser(
        prog="wbrdp",
        description="Rate-distortion-perception functions by alternating Sinkhorn iterations.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sweep = sub.add_parser("sweep", help="solve every (D, P) pair of a grid")
    _add_problem_options(sweep)
    sweep.add_argument(
        "--trace",
        action="store_true",
        help="write each instance's residual history to <stem>_trace_<k>.csv",
    )
    sweep.add_argument(
        "--validate", action="store_true", help="compare every row with the brute-force optimum"
    )
    sweep.add_argument("--validate-tol", type=float, default=5e-3)

    eps = sub.add_parser("eps-study", help="error and time for several epsilon values")
    _add_problem_options(eps)
    eps.add_argument("--eps-list", type=float, nargs="+", default=list(DEFAULT_EPS_LIST))

    surface = sub.add_parser("surface", help="(D, P, rate) triples over a full grid")
    _add_problem_options(surface)
    return parser


def _values(explicit, spec):
    if explicit is not None:
        return list(explicit)
    lo, hi, count = spec
    if count != int(count):
        raise ConfigError(f"grid count must be an integer, got {count!r}")
    return grid(lo, hi, int(count))


def config_from_args(args):
    """Translate parsed arguments into a :class:`SweepConfig`."""
    D_values = _values(args.D, args.D_grid)
    if args.no_perception:
        P_values = [float("inf")]
        perception = "none"
    elif args.P is None and args.P_grid is None:
        raise ConfigError("give --P, --P-grid or --no-perception")
    else:
        P_values = _values(args.P, args.P_grid)
        perception = args.perception
    return SweepConfig(
        source=args.source,
        p=args.p,
        mu=args.mu,
        sigma=args.sigma,
        S=args.S,
        delta=args.delta,
        source_file=args.source_file,
        rec_file=args.rec_file,
        perception=perception,
        cost_file=args.cost_file,
        distortion=args.distortion,
        distortion_file=args.distortion_file,
        D_values=D_values,
        P_values=P_values,
        P_unsquared=args.P_unsquared,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        tol=args.tol,
        jobs=args.jobs,
        fmt=args.format,
        output=args.output,
        trace=getattr(args, "trace", False),
        validate=getattr(args, "validate", False),
        validate_tol=getattr(args, "validate_tol", 5e-3),
        bits=args.bits,
        timing=not args.no_timing,
    )


def _write(text, output):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        source = build_source(config)
        if args.dump_source:
            dump_source(source, args.dump_source)
        if args.command == "sweep":
            stem = "wbrdp" if config.output is None else str(Path(config.output).with_suffix(""))
            rows, code = run_sweep(config, trace_prefix=stem if config.trace else None)
            columns = sweep_columns(config)
        elif args.command == "eps-study":
            rows = run_epsilon_study(config, args.eps_list)
            code = EXIT_OK
            columns = EPS_COLUMNS
        else:
            rows, code = emit_surface(config)
            columns = SURFACE_COLUMNS
    except (ConfigError, InvalidInputError) as exc:
        parser.print_usage(sys.stderr)
        print(f"wbrdp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"wbrdp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError) as exc:
        # e.g. the reference of an epsilon study could not be computed
        print(f"wbrdp: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    _write(render_table(rows, columns, config.fmt), config.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
