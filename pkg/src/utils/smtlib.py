"""
SMT-LIB2 text rendering for Scripts, a small s-expression reader and the
model-block parser used on solver output.
"""

import re
from fractions import Fraction
from typing import Dict, List, Mapping, Union

from src.encoding.formula import (
    And,
    BoolConst,
    BVConst,
    BvCmp,
    Eq,
    Formula,
    Implies,
    Labeled,
    Linear,
    Not,
    Or,
    Quantifier,
    RealConst,
    Script,
    Sort,
    Var,
)
from src.errors import ModelValueError, SExprError

SExpr = Union[str, List["SExpr"]]

_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")


def quote_symbol(name: str) -> str:
    return name if _SIMPLE_SYMBOL.match(name) else f"|{name}|"


def format_rational(value: Fraction) -> str:
    """Integer literal or (/ p q), negatives wrapped in (- ...)."""
    value = Fraction(value)
    magnitude = abs(value)
    text = str(magnitude.numerator) if magnitude.denominator == 1 else f"(/ {magnitude.numerator} {magnitude.denominator})"
    return f"(- {text})" if value < 0 else text


def format_term(node: Formula) -> str:
    if isinstance(node, Var):
        return quote_symbol(node.name)
    if isinstance(node, RealConst):
        return format_rational(node.value)
    if isinstance(node, BVConst):
        return f"(_ bv{node.value} {node.width})"
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, And):
        return "(and " + " ".join(format_term(arg) for arg in node.args) + ")"
    if isinstance(node, Or):
        return "(or " + " ".join(format_term(arg) for arg in node.args) + ")"
    if isinstance(node, Not):
        return f"(not {format_term(node.arg)})"
    if isinstance(node, Implies):
        return f"(=> {format_term(node.lhs)} {format_term(node.rhs)})"
    if isinstance(node, Eq):
        return f"(= {format_term(node.lhs)} {format_term(node.rhs)})"
    if isinstance(node, BvCmp):
        return f"({node.op} {format_term(node.lhs)} {format_term(node.rhs)})"
    if isinstance(node, Linear):
        products = []
        for var, coef in node.terms:
            name = quote_symbol(var.name)
            products.append(name if coef == 1 else f"(* {format_rational(coef)} {name})")
        lhs = products[0] if len(products) == 1 else "(+ " + " ".join(products) + ")"
        return f"({node.relation} {lhs} {format_rational(node.bound)})"
    if isinstance(node, Quantifier):
        binders = " ".join(f"({quote_symbol(var.name)} {var.sort})" for var in node.bound)
        return f"({node.kind} ({binders}) {format_term(node.body)})"
    if isinstance(node, Labeled):
        return format_term(node.body)
    raise ValueError(f"cannot render {type(node).__name__}")


def to_smtlib2(script: Script) -> str:
    """Deterministic SMT-LIB2 text for `script`."""
    lines = []
    if script.produce_models:
        lines.append("(set-option :produce-models true)")
    if script.logic:
        lines.append(f"(set-logic {script.logic})")
    for name, sort in script.symbols:
        lines.append(f"(declare-const {quote_symbol(name)} {sort})")
    for assertion in script.assertions:
        lines.append(f"(assert {format_term(assertion)})")
    lines.append("(check-sat)")
    if script.produce_models:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(r'\s+|;[^\n]*|(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|";]+)')


def read_sexprs(text: str) -> List[SExpr]:
    """All top-level s-expressions in `text`; atoms stay strings, quoted symbols lose their bars."""
    stack: List[List[SExpr]] = [[]]
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise SExprError(f"unexpected character {text[position]!r} at offset {position}")
        position = match.end()
        opening, closing, quoted, string, atom = match.groups()
        if opening:
            stack.append([])
        elif closing:
            if len(stack) == 1:
                raise SExprError(f"unbalanced ')' at offset {match.start()}")
            done = stack.pop()
            stack[-1].append(done)
        elif quoted:
            stack[-1].append(quoted[1:-1])
        elif string:
            stack[-1].append(string)
        elif atom:
            stack[-1].append(atom)
    if len(stack) != 1:
        raise SExprError("unterminated s-expression")
    return stack[0]


def count_assertions(text: str) -> int:
    return sum(1 for expr in read_sexprs(text) if isinstance(expr, list) and expr and expr[0] == "assert")


def _number(expr: SExpr) -> Fraction:
    if isinstance(expr, str):
        try:
            return Fraction(expr)
        except ValueError:
            raise ModelValueError(f"not a number: {expr!r}") from None
    if len(expr) == 2 and expr[0] == "-":
        return -_number(expr[1])
    if len(expr) == 3 and expr[0] == "/":
        return _number(expr[1]) / _number(expr[2])
    raise ModelValueError(f"not a rational value: {expr!r}")


def _bitvector(expr: SExpr, width: int) -> int:
    if isinstance(expr, str):
        if expr.startswith("#b"):
            value, digits = int(expr[2:], 2), len(expr) - 2
        elif expr.startswith("#x"):
            value, digits = int(expr[2:], 16), 4 * (len(expr) - 2)
        else:
            raise ModelValueError(f"not a bit-vector literal: {expr!r}")
    elif len(expr) == 3 and expr[0] == "_" and isinstance(expr[1], str) and expr[1].startswith("bv"):
        value, digits = int(expr[1][2:]), int(expr[2])
    else:
        raise ModelValueError(f"not a bit-vector literal: {expr!r}")
    if digits != width:
        raise ModelValueError(f"bit-vector literal {expr!r} has width {digits}, expected {width}")
    return value


def decode_value(expr: SExpr, sort: Sort) -> Union[Fraction, int, bool]:
    if sort.kind == "Real":
        return _number(expr)
    if sort.kind == "BitVec":
        return _bitvector(expr, sort.width)
    if expr in ("true", "false"):
        return expr == "true"
    raise ModelValueError(f"not a Boolean value: {expr!r}")


def _bindings(exprs: List[SExpr]):
    """(name, value) pairs from define-fun entries or bare (name value) pairs, at any list nesting."""
    for expr in exprs:
        if not isinstance(expr, list) or not expr:
            continue
        head = expr[0]
        if head == "define-fun" and len(expr) == 5:
            if expr[2] == []:
                yield expr[1], expr[4]
        elif head == "model":
            yield from _bindings(expr[1:])
        elif isinstance(head, list):
            yield from _bindings(expr)
        elif len(expr) == 2 and isinstance(head, str):
            yield head, expr[1]


def parse_model(text: str, symbols: Mapping[str, Sort]) -> Dict[str, Union[Fraction, int, bool]]:
    """Exact values for the declared symbols in a model block; other entries are ignored."""
    assignment: Dict[str, Union[Fraction, int, bool]] = {}
    for name, value in _bindings(read_sexprs(text)):
        sort = symbols.get(name)
        if sort is not None:
            assignment[name] = decode_value(value, sort)
    return assignment
