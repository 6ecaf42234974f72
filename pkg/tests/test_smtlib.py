from fractions import Fraction

import pytest

from src.encoding.bmc import encode_qbmc, encode_qf_bmc
from src.encoding.formula import BOOL, REAL, Script, Var, bitvec, linear
from src.errors import ModelValueError, SExprError
from src.utils.smtlib import (
    count_assertions,
    decode_value,
    format_rational,
    parse_model,
    quote_symbol,
    read_sexprs,
    to_smtlib2,
)


def test_rational_literals():
    assert format_rational(Fraction(5, 2)) == "(/ 5 2)"
    assert format_rational(Fraction(-5, 2)) == "(- (/ 5 2))"
    assert format_rational(Fraction(-3)) == "(- 3)"
    assert format_rational(Fraction(0)) == "0"


def test_symbols_with_product_names_are_quoted():
    assert quote_symbol("x_0") == "x_0"
    assert quote_symbol("a×b") == "|a×b|"


def test_linear_atom_rendering():
    x = Var("x", REAL)
    script = Script((("x", REAL),), (linear({x: 1}, ">=", Fraction(5, 2)),))
    assert "(assert (>= x (/ 5 2)))" in to_smtlib2(script)


def test_script_layout(example_ha):
    text = to_smtlib2(encode_qf_bmc(example_ha, 1))
    lines = text.splitlines()
    assert lines[0] == "(set-option :produce-models true)"
    assert lines[1] == "(set-logic ALL)"
    assert "(declare-const loc_0 (_ BitVec 1))" in lines
    assert "(declare-const delta_0 Real)" in lines
    assert lines[-2:] == ["(check-sat)", "(get-model)"]
    assert text.endswith("\n")


def test_quantified_script_has_one_forall(example_ha):
    text = to_smtlib2(encode_qbmc(example_ha, 3))
    assert text.count("(forall ") == 1
    assert text.count("(exists ") == 1
    assert "(sel (_ BitVec 2))" in text


def test_emit_is_byte_identical(fischer_unsafe_2):
    first = to_smtlib2(encode_qbmc(fischer_unsafe_2, 8))
    for _ in range(2):
        assert to_smtlib2(encode_qbmc(fischer_unsafe_2, 8)) == first


def test_rendered_script_reads_back(example_ha):
    script = encode_qf_bmc(example_ha, 4)
    assert count_assertions(to_smtlib2(script)) == len(script.assertions)


def test_read_sexprs_nesting_and_quoting():
    exprs = read_sexprs("(a (b |c d|) ; comment\n e) f")
    assert exprs == [["a", ["b", "c d"], "e"], "f"]
    with pytest.raises(SExprError):
        read_sexprs("(a (b)")
    with pytest.raises(SExprError):
        read_sexprs("a)")


@pytest.mark.parametrize(
    "text, sort, value",
    [
        ("(/ 5.0 2.0)", REAL, Fraction(5, 2)),
        ("(- 3)", REAL, Fraction(-3)),
        ("(- (/ 1 3))", REAL, Fraction(-1, 3)),
        ("2.5", REAL, Fraction(5, 2)),
        ("#b10", bitvec(2), 2),
        ("#x0f", bitvec(8), 15),
        ("(_ bv3 4)", bitvec(4), 3),
        ("true", BOOL, True),
    ],
)
def test_decode_value(text, sort, value):
    (expr,) = read_sexprs(text)
    assert decode_value(expr, sort) == value


def test_decode_value_rejects_wrong_width():
    with pytest.raises(ModelValueError):
        decode_value("#b101", bitvec(2))


def test_parse_model_formats():
    symbols = {"x_0": REAL, "loc_0": bitvec(1), "t1": BOOL}
    z3_style = """
    (
      (define-fun x_0 () Real
        (/ 5.0 2.0))
      (define-fun loc_0 () (_ BitVec 1)
        #b1)
      (define-fun helper ((a Int)) Int a)
      (define-fun extra () Real 1.0)
    )
    """
    assert parse_model(z3_style, symbols) == {"x_0": Fraction(5, 2), "loc_0": 1}
    model_style = "(model (define-fun t1 () Bool false) (define-fun |x_0| () Real 0.0))"
    assert parse_model(model_style, symbols) == {"t1": False, "x_0": Fraction(0)}
    assert parse_model("((x_0 (- 1)) (loc_0 #b0))", symbols) == {"x_0": Fraction(-1), "loc_0": 0}
