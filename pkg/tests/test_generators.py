from fractions import Fraction

import pytest

from src.automata.automaton import AssignConst, classify_automaton, validate_automaton
from src.automata.generators import (
    LYNCH_SHAVIT_LOCATIONS,
    gen_example,
    gen_fischer,
    gen_lynch_shavit,
    gen_random,
    generate,
    resolve_model,
)
from src.automata.model_io import build_automaton, serialize_model
from src.errors import GeneratorParameterError


def test_example_defaults():
    doc = gen_example()
    ha = build_automaton(doc)
    assert ha.location_names() == ("loc1", "loc2")
    assert ha.location("loc1").rate("x") == (0, 1)
    assert ha.location("loc2").rate("x") == (0, 2)
    assert doc.check.kmax == 8


def test_example_rejects_inverted_interval():
    with pytest.raises(GeneratorParameterError):
        gen_example(2, 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fischer_sizes(n):
    ha = build_automaton(gen_fischer(n))
    assert len(ha.locations) == 4**n
    assert len(ha.transitions) == n * 6 * 4 ** (n - 1)
    assert validate_automaton(ha).ok
    assert classify_automaton(ha) == "timed"


def test_fischer_two_processes():
    ha = build_automaton(gen_fischer(2, 75, 70))
    assert len(ha.transitions) == 48
    assert ha.var("g").domain() == range(0, 3)
    assert ha.location("try×rem").invariant.holds({"x_1": Fraction(75), "x_2": Fraction(0)})
    assert not ha.location("try×rem").invariant.holds({"x_1": Fraction(76), "x_2": Fraction(0)})
    assert "cs×cs" in ha.bad[0].locations


def test_fischer_single_process_has_no_bad_states():
    ha = build_automaton(gen_fischer(1))
    assert ha.bad == ()


@pytest.mark.parametrize("n, delta1, delta2", [(0, 5, 70), (2, 0, 70), (2, 5, -1)])
def test_fischer_parameter_validation(n, delta1, delta2):
    with pytest.raises(GeneratorParameterError):
        gen_fischer(n, delta1, delta2)


def test_lynch_shavit_sizes():
    ha = build_automaton(gen_lynch_shavit(2))
    assert len(LYNCH_SHAVIT_LOCATIONS) == 9
    assert len(ha.locations) == 81
    assert {decl.name for decl in ha.vars} == {"g", "y", "z", "x_1", "x_2"}
    assert validate_automaton(ha).ok
    assert ha.init_guard.holds({"g": 0, "y": 0, "z": 0, "x_1": 0, "x_2": 0})
    assert not ha.init_guard.holds({"g": 0, "y": 0, "z": 1, "x_1": 0, "x_2": 0})


def test_lynch_shavit_shares_owner_and_two_flags():
    doc = gen_lynch_shavit(3)
    shared = {decl.name: (decl.lo, decl.hi) for decl in doc.network.globals}
    assert shared == {"g": (0, 3), "y": (0, 1), "z": (0, 1)}
    assert all(decl.is_global for decl in doc.network.globals)
    for process in doc.automata:
        assert {decl.name for decl in process.vars if decl.is_global} == {"g", "y", "z"}
        (acquire,) = [tr for tr in process.transitions if tr.label == "acquire"]
        assert acquire.guard.variables() == {"g", "z"}
        assert acquire.update.action_for("z") == AssignConst(Fraction(1))


def test_random_is_reproducible_and_small():
    assert serialize_model(gen_random(11)) == serialize_model(gen_random(11))
    for seed in range(30):
        ha = build_automaton(gen_random(seed))
        assert validate_automaton(ha).ok
        assert len(ha.locations) <= 3
        assert len(ha.real_vars()) <= 2
        assert len(ha.int_vars()) <= 1
        assert ha.bad


def test_generate_from_text_parameters():
    doc = generate("fischer", ["2", "75", "70"])
    assert len(build_automaton(doc).locations) == 16
    assert build_automaton(generate("example", [])) == build_automaton(gen_example())
    assert serialize_model(generate("random", ["3"])) == serialize_model(gen_random(3))


@pytest.mark.parametrize("family, params", [("pentagon", []), ("fischer", []), ("fischer", ["two"]), ("random", [])])
def test_generate_rejects_bad_parameters(family, params):
    with pytest.raises(GeneratorParameterError):
        generate(family, params)


def test_resolve_model_reference_and_file(tmp_path):
    assert build_automaton(resolve_model("fischer:2:5:70")) == build_automaton(gen_fischer(2, 5, 70))
    (tmp_path / "ex.qbmc").write_text(serialize_model(gen_example()), encoding="utf-8")
    doc = resolve_model("ex.qbmc", str(tmp_path))
    assert build_automaton(doc) == build_automaton(gen_example())
