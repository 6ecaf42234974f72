import json
import sys
from fractions import Fraction

import pytest

from main import main
from src.automata.generators import gen_example, resolve_model
from src.automata.model_io import build_automaton, parse_model
from src.encoding.bmc import QF
from src.oracle.paths import oracle_check
from src.trace.trace import decode_trace, trace_to_dict

# loc2 lets x fall again, so loc2 with x < 2.5 is reachable in three steps
LEAKY = "example:0:1:-1:2"


@pytest.fixture(autouse=True)
def clean_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("QBMC_SOLVER", raising=False)
    monkeypatch.delenv("QBMC_TIMEOUT", raising=False)


def _fake_solver(tmp_path, output):
    path = tmp_path / "solver.py"
    path.write_text(f"import sys\nsys.stdin.read()\nprint({output!r})\n", encoding="utf-8")
    return f"{sys.executable} {path}"


def test_generate_to_stdout(capsys):
    assert main(["generate", "example"]) == 0
    text = capsys.readouterr().out
    assert build_automaton(parse_model(text)) == build_automaton(gen_example())


def test_generate_to_file(tmp_path):
    target = tmp_path / "fischer.ha"
    assert main(["generate", "fischer", "2", "75", "70", "-o", str(target)]) == 0
    ha = build_automaton(parse_model(target.read_text()))
    assert len(ha.locations) == 16
    assert main(["validate", str(target)]) == 0


@pytest.mark.parametrize("argv", [["generate", "tetris", "2"], ["generate", "fischer"], ["generate", "random", "1", "2"]])
def test_generate_usage_errors(argv):
    assert main(argv) == 3


def test_emit_is_deterministic(capsys):
    assert main(["emit", "fischer:2:75:70", "--encoding", "quantified", "--kmax", "6"]) == 0
    first = capsys.readouterr().out
    assert first.count("(forall ") == 1
    assert main(["emit", "fischer:2:75:70", "--encoding", "quantified", "--kmax", "6"]) == 0
    assert capsys.readouterr().out == first


def test_emit_to_file(tmp_path, capsys):
    target = tmp_path / "example.smt2"
    assert main(["emit", "example", "--kmax", "3", "-o", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert target.read_text().endswith("(check-sat)\n(get-model)\n")


def test_validate_model(capsys):
    assert main(["validate", "example"]) == 0
    assert "ok: 2 locations, 2 transitions" in capsys.readouterr().out


def test_validate_trace(tmp_path, capsys):
    ha = build_automaton(resolve_model(LEAKY))
    witness = oracle_check(ha, 3).witness
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"verdict": "SAT", "trace": trace_to_dict(witness)}))
    assert main(["validate", LEAKY, "--trace", str(good)]) == 0
    assert main(["validate", "example", "--trace", str(good), "--strict"]) == 1
    assert "trace rejected" in capsys.readouterr().out



DROP_IN = """\
qbmc-model 1
var x real
loc a { flow x in [1, 1] }
loc b { inv x <= 1 flow x in [0, 0] }
trans a -> b { }
init a with x = 0
bad {b}
"""


def test_validate_trace_without_target_invariant(tmp_path, capsys):
    model = tmp_path / "drop-in.ha"
    model.write_text(DROP_IN)
    reals = {"x_0": 0, "x_1": 5, "x_2": 5, "delta_0": 5, "delta_1": 0}
    frames = {"loc_0": 0, "loc_1": 0, "loc_2": 1, **{name: Fraction(value) for name, value in reals.items()}}
    ha = build_automaton(parse_model(DROP_IN))
    trace = decode_trace(frames, ha, 2, QF, include_target_invariant=False)
    path = tmp_path / "trace.json"
    path.write_text(json.dumps({"verdict": "SAT", "trace": trace_to_dict(trace)}))
    assert main(["validate", str(model), "--trace", str(path)]) == 1
    assert "invariant of b" in capsys.readouterr().out
    assert main(["validate", str(model), "--trace", str(path), "--no-target-invariant"]) == 0


def test_missing_or_broken_model_is_usage_error(tmp_path):
    assert main(["check", str(tmp_path / "absent.ha")]) == 3
    broken = tmp_path / "broken.ha"
    broken.write_text("qbmc-model 1\nvar x real\nloc a { flow x in [0 }\n")
    assert main(["check", str(broken)]) == 3
    assert main(["oracle", str(broken)]) == 3


def test_oracle_verdicts(capsys):
    assert main(["oracle", "example", "--kmax", "4"]) == 0
    assert capsys.readouterr().out.startswith("UNSAT (k=4, oracle")
    assert main(["oracle", LEAKY, "--kmax", "3", "--json"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "SAT"
    assert len(report["trace"]["steps"]) == 3
    assert main(["oracle", "example", "--kmax", "8", "--budget", "5"]) == 2


def test_check_with_fake_solver(tmp_path, capsys):
    solver = _fake_solver(tmp_path, "unsat")
    assert main(["check", "example", "--kmax", "3", "--solver", solver, "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "UNSAT"
    assert report["encoding"] == "qf"
    assert report["stats"]["templates"] == 3


def test_check_deepens_until_kmax(tmp_path, capsys):
    solver = _fake_solver(tmp_path, "unsat")
    argv = ["check", "example", "--kmax", "3", "--deepen", "--encoding", "quantified", "--solver", solver, "--json"]
    assert main(argv) == 0
    report = json.loads(capsys.readouterr().out)
    assert [attempt["k"] for attempt in report["attempts"]] == [1, 2, 3]
    assert report["stats"]["templates"] == 1


@pytest.mark.parametrize("output, code", [("unknown", 2), ("sat", 4)])
def test_check_inconclusive_and_broken_models(tmp_path, output, code):
    assert main(["check", "example", "--kmax", "2", "--solver", _fake_solver(tmp_path, output)]) == code


def test_missing_solver_is_inconclusive():
    assert main(["check", "example", "--kmax", "1", "--solver", "definitely-not-a-solver-binary"]) == 2


@pytest.mark.solver
def test_check_finds_leak_with_real_solver(solver_cmd, capsys):
    assert main(["check", LEAKY, "--kmax", "3", "--encoding", "quantified", "--solver", solver_cmd, "--json"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "SAT"
    assert "internal_error" not in report


def test_log_file_receives_pipeline_records(tmp_path, capsys):
    log_file = tmp_path / "logs" / "run.log"
    assert main(["--log-file", str(log_file), "oracle", "example", "--kmax", "2"]) == 0
    text = log_file.read_text()
    assert "Loading model example" in text
    assert "Node: LoadModel | Phase: post" in text
    assert "Loading model" not in capsys.readouterr().err
