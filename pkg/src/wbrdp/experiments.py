"""Sweeps over (D, P) grids, the epsilon study and surface export.

Every (D, P) pair is an independent :class:`~wbrdp.solver.RdpProblem`;
with ``jobs > 1`` they are solved in worker processes and the rows are
gathered back in D-major, then P, order. Solver errors are caught per row
and written to the ``status`` column.

Floats are written as ``f"{x:.16e}"`` (17 significant digits, enough to
round-trip a double), so CSV and JSON encodings of a table carry the same
values. Wall times are measured with a monotonic clock around
:func:`~wbrdp.solver.solve` only.
"""

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import nats_to_bits
from .errors import InvalidParameterError
from .oracle import brute_force_wbm_rdp, closed_form_binary_tv, closed_form_gaussian_w2
from .perception import (
    PerceptionSpec,
    load_cost_matrix,
    ot_cost_indicator,
    ot_cost_squared_distance,
)
from .solver import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    RdpProblem,
    solve,
    write_trace_csv,
)
from .sources import binary_source, gaussian_source, source_from_file, support_from_file

SWEEP_COLUMNS = (
    "source",
    "D",
    "P",
    "epsilon",
    "rate_nats",
    "rate_bits",
    "distortion_achieved",
    "perception_achieved",
    "iterations",
    "converged",
    "wall_time_ms",
    "status",
)
VALIDATE_COLUMNS = ("oracle_rate_nats", "oracle_abs_diff")
EPS_COLUMNS = (
    "epsilon",
    "time_s",
    "mean_abs_error",
    "max_abs_error",
    "max_iterations",
    "all_converged",
    "status",
)
SURFACE_COLUMNS = ("D", "P", "rate", "unit", "converged", "status")
FAILED_MARK = "-"


def grid(lo, hi, count):
    """``count`` evenly spaced values from ``lo`` to ``hi`` inclusive."""
    count = int(count)
    if count < 1:
        raise InvalidParameterError(f"grid count must be >= 1, got {count}")
    if count > 1 and not lo < hi:
        raise InvalidParameterError(f"grid needs min < max, got {lo!r} >= {hi!r}")
    if count == 1:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, count)]


@dataclass
class SweepConfig:
    """Everything needed to build and run a batch of problem instances.

    ``P_values`` holding ``math.inf`` (or ``perception == "none"``) means
    no perception constraint. With ``P_unsquared`` the W2 thresholds are
    given as distances and squared before use.
    """

    source: str = "binary"
    p: float = 0.1
    mu: float = 0.0
    sigma: float = 2.0
    S: float = 8.0
    delta: float = 0.5
    source_file: str = None
    rec_file: str = None
    perception: str = None
    cost_file: str = None
    distortion: str = None
    distortion_file: str = None
    D_values: list = field(default_factory=list)
    P_values: list = field(default_factory=lambda: [math.inf])
    P_unsquared: bool = False
    epsilon: float = DEFAULT_EPSILON
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    jobs: int = 1
    fmt: str = "csv"
    output: str = None
    trace: bool = False
    validate: bool = False
    validate_tol: float = 5e-3
    bits: bool = False
    timing: bool = True

    def __post_init__(self):
        if self.source not in ("binary", "gauss", "file"):
            raise InvalidParameterError(f"unknown source {self.source!r}")
        if self.source == "file" and not self.source_file:
            raise InvalidParameterError("--source file needs --source-file")
        if self.perception is None:
            self.perception = "tv" if self.source == "binary" else "w2"
        if self.perception not in ("w2", "tv", "kl", "cost-file", "none"):
            raise InvalidParameterError(f"unknown perception {self.perception!r}")
        if self.perception == "cost-file" and not self.cost_file:
            raise InvalidParameterError("--perception cost-file needs --cost-file")
        if self.distortion is None:
            self.distortion = "hamming" if self.source == "binary" else "squared"
        if self.distortion not in ("hamming", "squared", "file"):
            raise InvalidParameterError(f"unknown distortion {self.distortion!r}")
        if self.distortion == "file" and not self.distortion_file:
            raise InvalidParameterError("file distortion needs --distortion-file")
        if not self.D_values:
            raise InvalidParameterError("the D grid is empty")
        if not self.P_values:
            raise InvalidParameterError("the P grid is empty")
        if any(not v >= 0 for v in self.D_values):
            raise InvalidParameterError("D values must be >= 0")
        if any(not v >= 0 for v in self.P_values):
            raise InvalidParameterError("P values must be >= 0")
        if self.fmt not in ("csv", "json"):
            raise InvalidParameterError(f"unknown format {self.fmt!r}")
        if int(self.jobs) < 1:
            raise InvalidParameterError("jobs must be >= 1")
        if not self.epsilon > 0:
            raise InvalidParameterError("epsilon must be positive")

    @property
    def source_label(self):
        if self.source == "binary":
            return f"binary(p={self.p:g})"
        if self.source == "gauss":
            return f"gauss(mu={self.mu:g},sigma={self.sigma:g},S={self.S:g},delta={self.delta:g})"
        return f"file({Path(self.source_file).name})"


def build_source(config):
    if config.source == "binary":
        return binary_source(config.p)
    if config.source == "gauss":
        return gaussian_source(config.mu, config.sigma, config.S, config.delta)
    return source_from_file(config.source_file)


def _rec_support(config, source):
    return source.support if config.rec_file is None else support_from_file(config.rec_file)


def _distortion(config, source, rec):
    if config.distortion == "hamming":
        return (source.support[:, None] != rec[None, :]).astype(float)
    if config.distortion == "squared":
        return ot_cost_squared_distance(source.support, rec)
    return load_cost_matrix(config.distortion_file)


def _perception_spec(config, source, rec, P):
    if config.perception == "none" or math.isinf(P):
        return None
    if config.perception == "kl":
        return PerceptionSpec("kl", P, None, "kl")
    if config.perception == "tv":
        return PerceptionSpec("ot", P, ot_cost_indicator(len(source), rec.size), "tv")
    if config.perception == "w2":
        threshold = P * P if config.P_unsquared else P
        cost = ot_cost_squared_distance(source.support, rec)
        return PerceptionSpec("ot", threshold, cost, "w2", source.support, rec)
    return PerceptionSpec("ot", P, load_cost_matrix(config.cost_file), "custom")


def build_problem(config, D, P, epsilon=None, source=None):
    """The :class:`RdpProblem` for one grid point of ``config``."""
    source = build_source(config) if source is None else source
    rec = _rec_support(config, source)
    return RdpProblem(
        source,
        _distortion(config, source, rec),
        D,
        _perception_spec(config, source, rec, P),
        rec,
        config.epsilon if epsilon is None else epsilon,
        config.max_iter,
        config.tol,
    )


def _solve_point(task):
    # Runs in a worker process when jobs > 1; must stay at module level.
    problem, want_trace = task
    start = time.perf_counter()
    try:
        solution = solve(problem)
    except (ArithmeticError, ValueError) as exc:
        return {"error": f"error:{type(exc).__name__}", "message": str(exc)}
    elapsed = (time.perf_counter() - start) * 1e3
    return {
        "rate": solution.rate,
        "distortion": solution.distortion_achieved,
        "perception": solution.perception_achieved,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "wall_ms": elapsed,
        "trace": solution.residual_trace if want_trace else None,
    }


def _map(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [_solve_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map() yields in submission order, whatever the completion order
        return list(pool.map(_solve_point, tasks))


def sweep_points(config):
    """The ``(D, P)`` pairs of a sweep in output order (D-major, then P)."""
    return [(D, P) for D in config.D_values for P in config.P_values]


def _effective_P(config, P):
    if config.perception == "none" or math.isinf(P):
        return math.inf
    if config.perception == "w2" and config.P_unsquared:
        return P * P
    return P


def run_sweep(config, trace_prefix=None):
    """Solve every grid point of ``config``.

    Returns
    -------
    rows : list of dict
        One row per ``(D, P)`` pair with the :data:`SWEEP_COLUMNS` (and
        :data:`VALIDATE_COLUMNS` when ``config.validate``).
    exit_code : int
        0 if every instance solved, 2 if any failed, 3 if validation found
        a gap larger than ``config.validate_tol`` (3 wins over 2).
    """
    source = build_source(config)
    points = sweep_points(config)
    problems = []
    failures = {}
    for k, (D, P) in enumerate(points):
        try:
            problems.append(build_problem(config, D, P, source=source))
        except ValueError as exc:
            problems.append(None)
            failures[k] = f"error:{type(exc).__name__}"
    tasks = [(prob, config.trace) for prob in problems if prob is not None]
    results = iter(_map(tasks, int(config.jobs)))
    rows = []
    exit_code = 0
    mismatch = False
    for k, ((D, P), problem) in enumerate(zip(points, problems)):
        res = {"error": failures[k]} if problem is None else next(results)
        row = {
            "source": config.source_label,
            "D": D,
            "P": _effective_P(config, P),
            "epsilon": config.epsilon,
        }
        if "error" in res:
            exit_code = 2
            row.update(
                rate_nats=math.nan,
                rate_bits=math.nan,
                distortion_achieved=math.nan,
                perception_achieved=math.nan,
                iterations=0,
                converged=False,
                wall_time_ms=math.nan,
                status=res["error"],
            )
        else:
            perception = res["perception"]
            row.update(
                rate_nats=res["rate"],
                rate_bits=nats_to_bits(res["rate"]),
                distortion_achieved=res["distortion"],
                perception_achieved=math.inf if perception is None else perception,
                iterations=res["iterations"],
                converged=res["converged"],
                wall_time_ms=res["wall_ms"] if config.timing else math.nan,
                status="ok",
            )
            if res["trace"] is not None and trace_prefix is not None:
                write_trace_csv(res["trace"], f"{trace_prefix}_trace_{k}.csv")
        if config.validate:
            oracle_rate = diff = math.nan
            if problem is not None:
                try:
                    oracle_rate = brute_force_wbm_rdp(problem).rate
                    diff = abs(row["rate_nats"] - oracle_rate)
                except (ArithmeticError, ValueError):
                    pass
            row["oracle_rate_nats"] = oracle_rate
            row["oracle_abs_diff"] = diff
            if row["status"] == "ok" and not diff <= config.validate_tol:
                mismatch = True
        rows.append(row)
    if mismatch:
        exit_code = 3
    return rows, exit_code


def reference_rate(config, D, P, problem=None):
    """Reference value for the epsilon study.

    The binary closed form for a binary source with Hamming distortion and
    TV (or no) perception; the continuous Gaussian closed form for a
    Gaussian source with squared error and W2 (or no) perception; the
    brute-force optimum otherwise.
    """
    no_perception = config.perception == "none" or math.isinf(P)
    if config.source == "binary" and config.distortion == "hamming":
        if no_perception or config.perception == "tv":
            return closed_form_binary_tv(config.p, D, math.inf if no_perception else P)
    if config.source == "gauss" and config.distortion == "squared" and config.rec_file is None:
        if no_perception or config.perception == "w2":
            return closed_form_gaussian_w2(
                config.sigma, D, math.inf if no_perception else _effective_P(config, P)
            )
    if problem is None:
        problem = build_problem(config, D, P)
    return brute_force_wbm_rdp(problem).rate


def run_epsilon_study(config, eps_list):
    """Accuracy and time of the solver for each epsilon in ``eps_list``.

    For each epsilon the whole D grid is solved (at the single P of
    ``config``) and compared with :func:`reference_rate`. The error columns
    are the mean and the maximum of ``|rate - reference|`` over the grid.
    If any grid point fails, the row carries ``"-"`` in its numeric
    columns and the error name in ``status``.
    """
    if len(config.P_values) != 1:
        raise InvalidParameterError("the epsilon study takes a single P value")
    if not eps_list:
        raise InvalidParameterError("the epsilon list is empty")
    P = config.P_values[0]
    source = build_source(config)
    references = []
    for D in config.D_values:
        problem = build_problem(config, D, P, source=source)
        references.append(reference_rate(config, D, P, problem))
    rows = []
    for eps in eps_list:
        if not eps > 0:
            raise InvalidParameterError(f"epsilon must be positive, got {eps!r}")
        tasks = [
            (build_problem(config, D, P, epsilon=eps, source=source), False)
            for D in config.D_values
        ]
        start = time.perf_counter()
        results = _map(tasks, int(config.jobs))
        elapsed = time.perf_counter() - start
        errors = [res["error"] for res in results if "error" in res]
        if errors:
            rows.append(
                dict(
                    epsilon=eps,
                    time_s=FAILED_MARK,
                    mean_abs_error=FAILED_MARK,
                    max_abs_error=FAILED_MARK,
                    max_iterations=FAILED_MARK,
                    all_converged=FAILED_MARK,
                    status=errors[0],
                )
            )
            continue
        gaps = np.abs(np.array([res["rate"] for res in results]) - np.array(references))
        if config.bits:
            gaps = nats_to_bits(gaps)
        rows.append(
            dict(
                epsilon=eps,
                time_s=elapsed if config.timing else math.nan,
                mean_abs_error=float(gaps.mean()),
                max_abs_error=float(gaps.max()),
                max_iterations=max(res["iterations"] for res in results),
                all_converged=all(res["converged"] for res in results),
                status="ok",
            )
        )
    return rows


def emit_surface(config):
    """``(D, P, rate)`` rows over the full grid, for external surface plots."""
    if len(config.D_values) < 2 or len(config.P_values) < 2:
        raise InvalidParameterError("a surface needs at least two D values and two P values")
    rows, exit_code = run_sweep(replace(config, validate=False, trace=False))
    unit = "bits" if config.bits else "nats"
    surface = [
        dict(
            D=row["D"],
            P=row["P"],
            rate=row["rate_bits"] if config.bits else row["rate_nats"],
            unit=unit,
            converged=row["converged"],
            status=row["status"],
        )
        for row in rows
    ]
    return surface, exit_code


def format_value(value):
    """Locale-independent text for one table cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.16e}"
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, float):
        return value if math.isfinite(value) else format_value(value)
    return value


def render_table(rows, columns, fmt="csv"):
    """Serialize ``rows`` (dicts) as CSV text or a JSON array of objects."""
    if fmt == "json":
        records = [{c: _json_value(row[c]) for c in columns} for row in rows]
        return json.dumps(records, indent=1, allow_nan=False) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    return buffer.getvalue()


def sweep_columns(config):
    return SWEEP_COLUMNS + (VALIDATE_COLUMNS if config.validate else ())
