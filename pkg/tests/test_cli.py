"""Command-line behaviour: exit codes, encodings, determinism, side files."""

import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from wbrdp import source_from_file
from wbrdp.cli import EXIT_CONFIG, EXIT_INSTANCE, EXIT_MISMATCH, EXIT_OK, main
from wbrdp.experiments import (
    EPS_COLUMNS,
    SURFACE_COLUMNS,
    SWEEP_COLUMNS,
    VALIDATE_COLUMNS,
    SweepConfig,
    format_value,
    grid,
    render_table,
    run_sweep,
)
from wbrdp.errors import InvalidParameterError

BINARY = ["--source", "binary", "--p", "0.1", "--P", "0.06"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------- exit codes


def test_sweep_success(capsys):
    code, out, _ = run(["sweep", *BINARY, "--D", "0.03", "0.05", "--no-timing"], capsys)
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [float(r["D"]) for r in rows] == [0.03, 0.05]
    assert all(r["status"] == "ok" and r["converged"] == "true" for r in rows)
    assert rows[0]["wall_time_ms"] == "nan"
    rate = float(rows[1]["rate_nats"])
    assert float(rows[1]["rate_bits"]) == pytest.approx(rate / math.log(2), rel=1e-15)


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", *BINARY],  # no D
        ["sweep", "--D", "0.1"],  # no P and no --no-perception
        ["sweep", *BINARY, "--D", "0.1", "--D-grid", "0", "1", "3"],
        ["sweep", *BINARY, "--D-grid", "0.1", "0.0", "3"],
        ["sweep", *BINARY, "--D-grid", "0.0", "0.1", "2.5"],
        ["sweep", *BINARY, "--D", "-0.1"],
        ["sweep", *BINARY, "--D", "0.1", "--epsilon", "0"],
        ["sweep", *BINARY, "--D", "0.1", "--perception", "cost-file"],
        ["sweep", "--source", "file", "--P", "0.1", "--D", "0.1"],
        ["sweep", "--source", "file", "--source-file", "/nonexistent", "--P", "1", "--D", "1"],
        ["frobnicate"],
    ],
)
def test_configuration_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == EXIT_CONFIG


def test_unstable_instance_exits_2(capsys):
    code, out, _ = run(
        ["sweep", *BINARY, "--D", "0.03", "0.05", "--epsilon", "1e-4", "--no-timing"], capsys
    )
    assert code == EXIT_INSTANCE
    rows = parse_csv(out)
    assert len(rows) == 2
    assert all(r["status"] == "error:NumericalStabilityError" for r in rows)
    assert rows[0]["rate_nats"] == "nan"


def test_infeasible_row_exits_2(tmp_path, capsys):
    dist = tmp_path / "d.txt"
    dist.write_text("0.4 1.0\n1.0 0.4\n")
    code, out, _ = run(
        ["sweep", *BINARY, "--distortion", "file", "--distortion-file", str(dist),
         "--D", "0.1", "0.5", "--no-timing"],
        capsys,
    )
    assert code == EXIT_INSTANCE
    first, second = parse_csv(out)
    assert first["status"] == "error:InfeasibleProblemError"
    assert second["status"] == "ok"


def test_unconverged_rows_still_exit_0(capsys):
    code, out, _ = run(["sweep", *BINARY, "--D", "0.05", "--max-iter", "5"], capsys)
    assert code == EXIT_OK
    row = parse_csv(out)[0]
    assert row["converged"] == "false" and row["iterations"] == "5"


def test_validation_columns_and_mismatch(capsys):
    argv = ["sweep", *BINARY, "--D", "0.03", "0.05", "--validate", "--no-timing"]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert tuple(rows[0]) == SWEEP_COLUMNS + VALIDATE_COLUMNS
    for row in rows:
        assert float(row["oracle_abs_diff"]) == pytest.approx(
            abs(float(row["rate_nats"]) - float(row["oracle_rate_nats"])), abs=1e-15
        )
        assert float(row["oracle_abs_diff"]) < 5e-3
    code, _, _ = run(argv + ["--validate-tol", "1e-12"], capsys)
    assert code == EXIT_MISMATCH


# ---------------------------------------------------------------- encodings


def test_csv_and_json_carry_identical_values(tmp_path, capsys):
    base = ["sweep", *BINARY, "--D", "0.0", "0.05", "0.2", "--no-timing", "--bits"]
    assert main(base + ["--output", str(tmp_path / "a.csv")]) == EXIT_OK
    assert main(base + ["--format", "json", "--output", str(tmp_path / "a.json")]) == EXIT_OK
    rows = parse_csv((tmp_path / "a.csv").read_text())
    records = json.loads((tmp_path / "a.json").read_text())
    assert len(rows) == len(records) == 3
    for row, record in zip(rows, records):
        assert set(row) == set(record)
        for key, text in row.items():
            value = record[key]
            if isinstance(value, str):
                assert value == text
            elif isinstance(value, bool):
                assert text == ("true" if value else "false")
            elif isinstance(value, int):
                assert int(text) == value
            else:
                assert float(text) == value  # bit-exact round trip


def test_no_timing_output_is_byte_identical(tmp_path):
    argv = ["sweep", *BINARY, "--D-grid", "0.01", "0.1", "4", "--no-timing"]
    assert main(argv + ["--output", str(tmp_path / "one.csv")]) == EXIT_OK
    assert main(argv + ["--output", str(tmp_path / "two.csv")]) == EXIT_OK
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_parallel_jobs_keep_order_and_values(tmp_path):
    argv = ["sweep", *BINARY, "--D", "0.1", "0.02", "0.05", "0.0", "--no-timing"]
    assert main(argv + ["--output", str(tmp_path / "serial.csv")]) == EXIT_OK
    assert main(argv + ["--jobs", "2", "--output", str(tmp_path / "par.csv")]) == EXIT_OK
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "par.csv").read_bytes()


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(7) == "7"
    assert format_value(math.inf) == "inf"
    assert format_value(-math.inf) == "-inf"
    assert format_value(math.nan) == "nan"
    assert format_value(0.1) == "1.0000000000000001e-01"
    assert float(format_value(1 / 3)) == 1 / 3


def test_render_json_encodes_nonfinite_as_text():
    text = render_table([{"a": math.inf, "b": math.nan, "c": 1.5}], ("a", "b", "c"), "json")
    assert json.loads(text) == [{"a": "inf", "b": "nan", "c": 1.5}]


# ---------------------------------------------------------------- side files


def test_trace_files(tmp_path):
    out = tmp_path / "run.csv"
    argv = ["sweep", *BINARY, "--D", "0.03", "0.05", "--trace", "--output", str(out)]
    assert main(argv) == EXIT_OK
    rows = parse_csv(out.read_text())
    for k, row in enumerate(rows):
        trace = list(csv.reader((tmp_path / f"run_trace_{k}.csv").open()))
        assert trace[0][:2] == ["iter", "r_psi"]
        assert trace[0][-1] == "overall"
        assert len(trace) - 1 == int(row["iterations"])
        assert float(trace[-1][-1]) <= 1e-10


def test_dump_source_round_trip(tmp_path, capsys):
    dumped = tmp_path / "src.txt"
    argv = ["sweep", "--source", "gauss", "--sigma", "1", "--S", "3", "--delta", "0.5",
            "--P", "0.2", "--D", "0.5", "--no-timing", "--dump-source", str(dumped)]
    code, first, _ = run(argv, capsys)
    assert code == EXIT_OK
    code, second, _ = run(
        ["sweep", "--source", "file", "--source-file", str(dumped), "--P", "0.2", "--D", "0.5",
         "--no-timing"],
        capsys,
    )
    assert code == EXIT_OK
    a, b = parse_csv(first)[0], parse_csv(second)[0]
    assert a["rate_nats"] == b["rate_nats"]
    assert source_from_file(dumped).probs.size == 13


def test_p_unsquared_squares_thresholds(capsys):
    common = ["sweep", "--source", "gauss", "--sigma", "1", "--S", "3", "--delta", "0.5",
              "--D", "0.5", "--no-timing"]
    _, squared, _ = run(common + ["--P", "0.09"], capsys)
    _, unsquared, _ = run(common + ["--P", "0.3", "--P-unsquared"], capsys)
    a, b = parse_csv(squared)[0], parse_csv(unsquared)[0]
    assert float(b["P"]) == pytest.approx(0.09, rel=1e-15)
    assert float(a["rate_nats"]) == pytest.approx(float(b["rate_nats"]), abs=1e-14)


def test_no_perception_reports_infinite_P(capsys):
    code, out, _ = run(["sweep", "--source", "binary", "--no-perception", "--D", "0.05"], capsys)
    assert code == EXIT_OK
    row = parse_csv(out)[0]
    assert row["P"] == "inf" and row["perception_achieved"] == "inf"


# ---------------------------------------------------------------- other commands


def test_eps_study_marks_failed_rows(capsys):
    argv = ["eps-study", *BINARY, "--D", "0.03", "0.05", "--eps-list", "5e-2", "1e-2", "1e-4",
            "--no-timing"]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert tuple(rows[0]) == EPS_COLUMNS
    assert [r["status"] for r in rows] == ["ok", "ok", "error:NumericalStabilityError"]
    assert all(rows[2][c] == "-" for c in EPS_COLUMNS[1:-1])
    assert float(rows[1]["mean_abs_error"]) < float(rows[0]["mean_abs_error"])


def test_eps_study_needs_single_P(capsys):
    code, _, _ = run(["eps-study", "--P", "0.01", "0.02", "--D", "0.05"], capsys)
    assert code == EXIT_CONFIG


def test_surface_rows(capsys):
    argv = ["surface", *BINARY[:-2], "--D", "0.02", "0.08", "--P", "0.01", "0.05", "--bits",
            "--no-timing"]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert tuple(rows[0]) == SURFACE_COLUMNS
    assert [(float(r["D"]), float(r["P"])) for r in rows] == [
        (0.02, 0.01), (0.02, 0.05), (0.08, 0.01), (0.08, 0.05)
    ]
    assert all(r["unit"] == "bits" for r in rows)


def test_surface_needs_a_grid(capsys):
    code, _, _ = run(["surface", *BINARY, "--D", "0.05"], capsys)
    assert code == EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "wbrdp", "sweep", *BINARY, "--D", "0.05", "--format", "json",
         "--no-timing"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)[0]["status"] == "ok"


# ---------------------------------------------------------------- library helpers


def test_grid():
    assert grid(0.0, 1.0, 3) == [0.0, 0.5, 1.0]
    assert grid(0.2, 0.2, 1) == [0.2]
    with pytest.raises(InvalidParameterError):
        grid(1.0, 0.0, 3)
    with pytest.raises(InvalidParameterError):
        grid(0.0, 1.0, 0)


def test_sweep_config_defaults():
    cfg = SweepConfig(source="gauss", D_values=[1.0], P_values=[0.5])
    assert cfg.perception == "w2" and cfg.distortion == "squared"
    rows, code = run_sweep(SweepConfig(D_values=[0.05], P_values=[0.06], timing=False))
    assert code == 0 and rows[0]["source"] == "binary(p=0.1)"
