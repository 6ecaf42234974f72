from fractions import Fraction

import pytest

from src.automata.automaton import AssignInterval, AssignVar, validate_automaton
from src.automata.generators import gen_example, gen_fischer, gen_lynch_shavit, gen_random
from src.automata.model_io import build_automaton, format_rational, parse_model, serialize_model, tokenize
from src.errors import ModelSemanticError, ModelSyntaxError

EXAMPLE = """\
qbmc-model 1
# two-location illustrative automaton
var x real
loc loc1 { inv x <= 5 flow x in [0, 1] }
loc loc2 { inv x <= 10 flow x in [0, 2] }
trans loc1 -> loc2 { guard x >= 2.5 }
trans loc2 -> loc1 { guard x >= 10 update x := 0 }
init loc1 with x = 0
bad {loc2} with x < 2.5
kmax 8
"""


def test_parse_example_matches_generator():
    doc = parse_model(EXAMPLE)
    ha = build_automaton(doc)
    assert ha == build_automaton(gen_example())
    assert doc.check.kmax == 8
    assert validate_automaton(ha).ok


def test_rationals_are_exact():
    ha = build_automaton(parse_model(EXAMPLE))
    (guard,) = ha.transitions[0].guard.conjuncts
    assert guard.bound == Fraction(5, 2)


@pytest.mark.parametrize(
    "value, text",
    [(Fraction(5, 2), "2.5"), (Fraction(-1, 8), "-0.125"), (Fraction(1, 3), "1/3"), (Fraction(7), "7"), (Fraction(0), "0")],
)
def test_format_rational(value, text):
    assert format_rational(value) == text
    assert Fraction(text) == value


@pytest.mark.parametrize(
    "doc",
    [gen_example(), gen_example(1, 2, Fraction(1, 3), 3), gen_fischer(2, 75, 70), gen_lynch_shavit(2), gen_random(7)],
)
def test_serialize_parse_round_trip(doc):
    text = serialize_model(doc)
    again = parse_model(text)
    assert build_automaton(again) == build_automaton(doc)
    assert serialize_model(again) == text


def test_serialize_is_deterministic():
    assert serialize_model(gen_fischer(3)) == serialize_model(gen_fischer(3))


def test_empty_input_reports_position():
    with pytest.raises(ModelSyntaxError) as info:
        parse_model("")
    assert (info.value.line, info.value.column) == (1, 1)
    assert "'qbmc-model'" in info.value.expected


def test_syntax_error_line_and_expected_tokens():
    text = "qbmc-model 1\nvar x real\nloc a { inv x <= 5 flow x in [0 1] }\n"
    with pytest.raises(ModelSyntaxError) as info:
        parse_model(text)
    assert info.value.line == 3
    assert "','" in info.value.expected


def test_unexpected_character():
    with pytest.raises(ModelSyntaxError) as info:
        parse_model("qbmc-model 1\nvar x real ?\n")
    assert info.value.line == 2


def test_undeclared_variable_is_semantic_error():
    text = "qbmc-model 1\nvar x real\nloc a { inv y <= 5 flow x in [0, 1] }\ninit a\n"
    with pytest.raises(ModelSemanticError) as info:
        parse_model(text)
    assert info.value.line == 3


def test_unknown_location_and_missing_init():
    with pytest.raises(ModelSemanticError):
        parse_model("qbmc-model 1\nvar x real\nloc a { flow x in [0, 1] }\ntrans a -> b { }\ninit a\n")
    with pytest.raises(ModelSemanticError):
        parse_model("qbmc-model 1\nvar x real\nloc a { flow x in [0, 1] }\n")


def test_unsupported_version():
    with pytest.raises(ModelSemanticError):
        parse_model("qbmc-model 2\n")


def test_or_and_not_equal_expand_into_parallel_transitions():
    text = """\
qbmc-model 1
var x real
var n int 0..3
loc a { flow x in [1, 1] }
trans a -> a { guard n != 1 guard x >= 1 or x <= 0 update x := [0, 1] update n := n label spin }
init a with x = 0 with n = 0
"""
    ha = build_automaton(parse_model(text))
    assert len(ha.transitions) == 4
    assert {tr.label for tr in ha.transitions} == {"spin"}
    tr = ha.transitions[0]
    assert isinstance(tr.update.action_for("x"), AssignInterval)
    assert isinstance(tr.update.action_for("n"), AssignVar)


def test_network_with_bad_mutex():
    text = serialize_model(gen_fischer(2))
    assert "network proc1, proc2 with g = 0" in text
    assert "bad-mutex cs" in text
    ha = build_automaton(parse_model(text))
    assert len(ha.locations) == 16
    assert ha.bad and "cs×cs" in ha.bad[0].locations


def test_bad_mutex_without_network_is_rejected():
    with pytest.raises(ModelSemanticError):
        parse_model(EXAMPLE + "bad-mutex loc2\n")


def test_tokenize_skips_comments():
    kinds = [token.kind for token in tokenize("var x real # trailing\n")]
    assert kinds == ["name", "name", "name", "eof"]


CANCELLED = """\
qbmc-model 1
var x real
var y real
loc a { inv 0*x <= 5 inv x - x + 2*y <= 4 flow x in [1, 1] flow y in [0, 1] }
trans a -> a { guard 0*x > 1 update x := 0 }
init a with x = 0 with y = 0
bad {a} with x - x >= 0
"""


def test_variable_free_constraints_survive_round_trip():
    doc = parse_model(CANCELLED)
    ha = build_automaton(doc)
    (invariant,) = ha.locations[0].invariant.conjuncts
    assert invariant.terms == (("y", Fraction(2)),)
    (guard,) = ha.transitions[0].guard.conjuncts
    assert guard.terms == () and not guard.evaluate({})
    assert doc.check.bad[0].guard.conjuncts == ()

    text = serialize_model(doc)
    assert "guard 0*x > 1" in text
    assert "_" not in text
    again = parse_model(text)
    assert again == doc
    assert serialize_model(again) == text


def test_single_automaton_is_written_without_block():
    doc = gen_example()
    text = serialize_model(doc)
    assert "automaton" not in text
    assert text.splitlines()[:2] == ["qbmc-model 1", "var x real"]
    again = parse_model(text)
    assert again.automata[0].name == "main"
    assert build_automaton(again) == build_automaton(doc)


def test_network_keeps_automaton_blocks():
    text = serialize_model(gen_fischer(2))
    assert "automaton proc1 {" in text and "automaton proc2 {" in text


def test_local_top_level_var_in_network_file_is_rejected():
    text = """\
qbmc-model 1
var g int 0..2 global
var z real
automaton p { var x real loc a { flow x in [1, 1] } init a }
network p
"""
    with pytest.raises(ModelSemanticError) as info:
        parse_model(text)
    assert (info.value.line, info.value.column) == (3, 1)
    assert "'z'" in str(info.value)
