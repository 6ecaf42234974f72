import sys
from pathlib import Path

import pytest
import yaml

from src.errors import ConfigError
from src.flow import create_bench_flow
from src.utils.bench import (
    COLUMNS,
    FAIL,
    NO_EXPECTATION,
    PASS,
    BenchCell,
    apply_expectations,
    cell_key,
    format_table,
    judge,
    load_report,
    parse_matrix,
    run_cell,
)
from src.utils.config import CheckConfig

BENCHMARKS = Path(__file__).resolve().parent.parent / "benchmarks"

MATRIX = """
# id  model          encoding  k  expected
ex-3  example        oracle    3  unsat
ex-5  example        oracle    5
"""


def test_parse_matrix():
    cells = parse_matrix(MATRIX)
    assert cells == [
        BenchCell("ex-3", "example", "oracle", 3, "UNSAT"),
        BenchCell("ex-5", "example", "oracle", 5, None),
    ]
    assert parse_matrix("# nothing\n\n") == []


@pytest.mark.parametrize(
    "text",
    [
        "a example oracle",
        "a example bdd 3",
        "a example qf three",
        "a example qf 3 maybe",
        "a example qf 3\na example quantified 3",
    ],
)
def test_parse_matrix_errors(text):
    with pytest.raises(ConfigError):
        parse_matrix(text)


def test_expectations_override_matrix():
    cells = apply_expectations(parse_matrix(MATRIX), parse_matrix("ex-5 example oracle 5 SAT"))
    assert [cell.expected for cell in cells] == ["UNSAT", "SAT"]


def test_judge():
    assert judge("UNSAT", "UNSAT") == PASS
    assert judge("TIMEOUT", "UNSAT") == FAIL
    assert judge("SAT", None) == NO_EXPECTATION


def test_cell_key_depends_on_cell_and_settings():
    cell = BenchCell("ex-3", "example", "qf", 3)
    key = cell_key(cell, CheckConfig())
    assert key.startswith("ex-3:")
    assert key == cell_key(cell, CheckConfig())
    assert key != cell_key(BenchCell("ex-3", "example", "qf", 4), CheckConfig())
    assert key != cell_key(cell, CheckConfig(timeout=5))


def test_oracle_cell():
    row = run_cell(BenchCell("ex-3", "example", "oracle", 3, "UNSAT"), CheckConfig())
    assert row.verdict == "UNSAT"
    assert row.result == PASS
    assert row.nol == 2
    assert row.templates is None


def test_missing_model_is_an_error_row(tmp_path):
    row = run_cell(BenchCell("gone", "nothing.ha", "qf", 2, "UNSAT"), CheckConfig(), str(tmp_path))
    assert row.verdict == "ERROR"
    assert row.result == FAIL
    assert row.note


def _fake_solver(tmp_path, output):
    path = tmp_path / "solver.py"
    path.write_text(f"import sys\nsys.stdin.read()\nprint({output!r})\n", encoding="utf-8")
    return f"{sys.executable} {path}"


def test_solver_cell_records_formula_size(tmp_path):
    config = CheckConfig(solver=_fake_solver(tmp_path, "unsat"), timeout=30)
    row = run_cell(BenchCell("q", "example", "quantified", 4, "UNSAT"), config)
    assert row.verdict == "UNSAT" and row.result == PASS
    assert row.templates == 1
    assert row.nodes > 0
    qf = run_cell(BenchCell("u", "example", "qf", 4), config)
    assert qf.templates == 4


def test_sat_without_model_is_an_error_row(tmp_path):
    config = CheckConfig(solver=_fake_solver(tmp_path, "sat"), timeout=30)
    row = run_cell(BenchCell("s", "example", "qf", 2), config)
    assert row.verdict == "ERROR"
    assert "loc_0" in row.note


def _bench(tmp_path, matrix, jobs=1, expectations=None):
    matrix_path = tmp_path / "cells.matrix"
    matrix_path.write_text(matrix)
    shared = {
        "config": CheckConfig(),
        "matrix_path": str(matrix_path),
        "expectations_path": expectations,
        "report_path": str(tmp_path / "report.yaml"),
    }
    create_bench_flow(jobs).run(shared)
    return shared


def test_bench_flow_writes_report_and_resumes(tmp_path, monkeypatch):
    shared = _bench(tmp_path, MATRIX)
    assert shared["exit_code"] == 0
    assert [row.verdict for row in shared["bench_rows"]] == ["UNSAT", "UNSAT"]
    saved = yaml.safe_load((tmp_path / "report.yaml").read_text())
    assert [entry["id"] for entry in saved["rows"]] == ["ex-3", "ex-5"]

    def fail(*args, **kwargs):
        raise AssertionError("cell should have been taken from the report")

    monkeypatch.setattr("src.nodes.run_bench.run_cell", fail)
    again = _bench(tmp_path, MATRIX)
    assert [row.key for row in again["bench_rows"]] == [row.key for row in shared["bench_rows"]]
    assert set(load_report(str(tmp_path / "report.yaml"))) == {row.key for row in shared["bench_rows"]}


def test_bench_flow_fails_on_wrong_expectation(tmp_path):
    expectations = tmp_path / "expected.matrix"
    expectations.write_text("ex-5 example oracle 5 SAT\n")
    shared = _bench(tmp_path, MATRIX, expectations=str(expectations))
    assert shared["exit_code"] == 1
    assert [row.result for row in shared["bench_rows"]] == [PASS, FAIL]


def test_parallel_bench_keeps_matrix_order(tmp_path):
    matrix = "\n".join(f"c{k} example oracle {k}" for k in range(6))
    shared = _bench(tmp_path, matrix, jobs=3)
    assert [row.id for row in shared["bench_rows"]] == [f"c{k}" for k in range(6)]


def test_empty_matrix(tmp_path, capsys):
    shared = _bench(tmp_path, "# no cells\n")
    assert shared["exit_code"] == 0
    assert "(empty matrix)" in capsys.readouterr().out


def test_format_table():
    row = run_cell(BenchCell("ex-1", "example", "oracle", 1), CheckConfig())
    lines = format_table([row]).splitlines()
    assert lines[0].split() == list(COLUMNS)
    assert lines[1].split()[:5] == ["ex-1", "2", "1", "oracle", "UNSAT"]


@pytest.mark.parametrize("name", ["example.matrix", "fischer.matrix", "lynch-shavit.matrix", "oracle.matrix"])
def test_bundled_matrices_parse(name):
    cells = parse_matrix((BENCHMARKS / name).read_text())
    assert cells
    expected = apply_expectations(cells, parse_matrix((BENCHMARKS / "fischer.expected").read_text()))
    assert all(cell.k >= 0 for cell in expected)
