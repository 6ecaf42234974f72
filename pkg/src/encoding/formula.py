"""
Term AST for the encodings, the Script container handed to the SMT backend,
a sort checker and size statistics.
"""

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

from src.automata.automaton import as_fraction, compare
from src.errors import SortError

# Labels attached with `Labeled`; transparent for rendering and solving.
TRANSITION = "transition"
SELECTOR = "selector"
PROPERTY = "property"
RANGES = "ranges"
INIT = "init"


@dataclass(frozen=True)
class Sort:
    kind: str
    width: int = 0

    def __post_init__(self):
        if self.kind not in ("Bool", "Real", "BitVec"):
            raise SortError(f"unknown sort {self.kind!r}")
        if self.kind == "BitVec" and self.width < 1:
            raise SortError(f"bit-vector width must be positive, got {self.width}")

    def __str__(self) -> str:
        if self.kind == "BitVec":
            return f"(_ BitVec {self.width})"
        return self.kind


BOOL = Sort("Bool")
REAL = Sort("Real")


def bitvec(width: int) -> Sort:
    return Sort("BitVec", width)


def width_for(count: int) -> int:
    """Bits needed to code `count` distinct values, at least one."""
    return max(1, (count - 1).bit_length())


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class RealConst:
    value: Fraction


@dataclass(frozen=True)
class BVConst:
    value: int
    width: int


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class And:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Linear:
    """sum(coef * var) <relation> bound over Real variables."""

    terms: Tuple[Tuple[Var, Fraction], ...]
    relation: str
    bound: Fraction


@dataclass(frozen=True)
class Eq:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class BvCmp:
    op: str
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Quantifier:
    kind: str
    bound: Tuple[Var, ...]
    body: "Formula"


@dataclass(frozen=True)
class Labeled:
    label: str
    body: "Formula"


Formula = Union[Var, RealConst, BVConst, BoolConst, And, Or, Not, Implies, Linear, Eq, BvCmp, Quantifier, Labeled]

TRUE = BoolConst(True)
FALSE = BoolConst(False)

BV_OPS = ("bvult", "bvule", "bvugt", "bvuge")


def conj(args: Iterable[Formula]) -> Formula:
    """Flattening conjunction; drops `true`, collapses on `false`."""
    kept = []
    for arg in args:
        if arg == TRUE:
            continue
        if arg == FALSE:
            return FALSE
        kept.extend(arg.args if isinstance(arg, And) else (arg,))
    if not kept:
        return TRUE
    return kept[0] if len(kept) == 1 else And(tuple(kept))


def disj(args: Iterable[Formula]) -> Formula:
    kept = []
    for arg in args:
        if arg == FALSE:
            continue
        if arg == TRUE:
            return TRUE
        kept.extend(arg.args if isinstance(arg, Or) else (arg,))
    if not kept:
        return FALSE
    return kept[0] if len(kept) == 1 else Or(tuple(kept))


def linear(terms: Mapping[Var, Fraction], relation: str, bound) -> Formula:
    """Linear atom with zero coefficients removed; variable-free atoms fold to a constant."""
    cleaned = tuple(sorted(((v, Fraction(c)) for v, c in terms.items() if c != 0), key=lambda item: item[0].name))
    bound = as_fraction(bound)
    if not cleaned:
        return BoolConst(compare(Fraction(0), relation, bound))
    return Linear(cleaned, relation, bound)


def children(node: Formula) -> Tuple[Formula, ...]:
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, (Implies, Eq, BvCmp)):
        return (node.lhs, node.rhs)
    if isinstance(node, (Quantifier, Labeled)):
        return (node.body,)
    if isinstance(node, Linear):
        return tuple(var for var, _ in node.terms)
    return ()


def walk(node: Formula) -> Iterator[Formula]:
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))


@dataclass(frozen=True)
class Script:
    symbols: Tuple[Tuple[str, Sort], ...]
    assertions: Tuple[Formula, ...]
    logic: Optional[str] = "ALL"
    produce_models: bool = True
    meta: Dict[str, object] = field(default_factory=dict, compare=False, hash=False)

    def symbol_table(self) -> Dict[str, Sort]:
        return dict(self.symbols)


def sort_of(node: Formula, scope: Mapping[str, Sort]) -> Sort:
    """Sort of `node`, raising SortError on any ill-sorted subterm or undeclared symbol."""
    if isinstance(node, Var):
        declared = scope.get(node.name)
        if declared is None:
            raise SortError(f"undeclared symbol {node.name!r}")
        if declared != node.sort:
            raise SortError(f"{node.name!r} used as {node.sort}, declared {declared}")
        return node.sort
    if isinstance(node, RealConst):
        return REAL
    if isinstance(node, BVConst):
        if not 0 <= node.value < 2**node.width:
            raise SortError(f"bit-vector literal {node.value} does not fit width {node.width}")
        return bitvec(node.width)
    if isinstance(node, BoolConst):
        return BOOL
    if isinstance(node, (And, Or)):
        for arg in node.args:
            _expect(arg, BOOL, scope)
        return BOOL
    if isinstance(node, Not):
        _expect(node.arg, BOOL, scope)
        return BOOL
    if isinstance(node, Implies):
        _expect(node.lhs, BOOL, scope)
        _expect(node.rhs, BOOL, scope)
        return BOOL
    if isinstance(node, Linear):
        for var, _ in node.terms:
            _expect(var, REAL, scope)
        return BOOL
    if isinstance(node, Eq):
        left = sort_of(node.lhs, scope)
        _expect(node.rhs, left, scope)
        return BOOL
    if isinstance(node, BvCmp):
        if node.op not in BV_OPS:
            raise SortError(f"unknown bit-vector comparison {node.op!r}")
        left = sort_of(node.lhs, scope)
        if left.kind != "BitVec":
            raise SortError(f"{node.op} expects bit-vectors, got {left}")
        _expect(node.rhs, left, scope)
        return BOOL
    if isinstance(node, Quantifier):
        if node.kind not in ("forall", "exists"):
            raise SortError(f"unknown quantifier {node.kind!r}")
        inner = dict(scope)
        inner.update((var.name, var.sort) for var in node.bound)
        _expect(node.body, BOOL, inner)
        return BOOL
    if isinstance(node, Labeled):
        return sort_of(node.body, scope)
    raise SortError(f"not a formula: {node!r}")


def _expect(node: Formula, sort: Sort, scope: Mapping[str, Sort]) -> None:
    actual = sort_of(node, scope)
    if actual != sort:
        raise SortError(f"expected {sort}, got {actual} in {type(node).__name__}")


def check_sorts(script: Script) -> None:
    table: Dict[str, Sort] = {}
    for name, sort in script.symbols:
        if name in table:
            raise SortError(f"symbol {name!r} declared twice")
        table[name] = sort
    for assertion in script.assertions:
        _expect(assertion, BOOL, table)


@dataclass(frozen=True)
class Stats:
    assertions: int
    nodes: int
    quantifiers: int
    max_quantifier_depth: int
    templates: int
    symbols: int
    labels: Dict[str, int]
    quantified_body_nodes: int

    def as_dict(self) -> Dict[str, object]:
        return {
            "assertions": self.assertions,
            "nodes": self.nodes,
            "quantifiers": self.quantifiers,
            "max_quantifier_depth": self.max_quantifier_depth,
            "templates": self.templates,
            "symbols": self.symbols,
            "labels": dict(self.labels),
            "quantified_body_nodes": self.quantified_body_nodes,
        }


def _count(node: Formula, depth: int, inside: bool, acc: Dict[str, object]) -> None:
    stack = [(node, depth, inside, False)]
    while stack:
        current, level, quantified, in_selector = stack.pop()
        if isinstance(current, Labeled):
            acc["labels"][current.label] += 1
            stack.append((current.body, level, quantified, in_selector or current.label == SELECTOR))
            continue
        acc["nodes"] += 1
        # `guard -> body` with a selector guard is selector structure too
        guard_wrapper = isinstance(current, Implies) and isinstance(current.lhs, Labeled) and current.lhs.label == SELECTOR
        if quantified and not in_selector and not guard_wrapper:
            acc["body"] += 1
        if isinstance(current, Quantifier):
            acc["quantifiers"] += 1
            level += 1
            acc["depth"] = max(acc["depth"], level)
            quantified = True
        stack.extend((child, level, quantified, in_selector) for child in children(current))


def formula_stats(script: Script) -> Stats:
    """Sizes of a script; `templates` counts transition-relation instantiations."""
    acc: Dict[str, object] = {"nodes": 0, "quantifiers": 0, "depth": 0, "body": 0, "labels": Counter()}
    for assertion in script.assertions:
        _count(assertion, 0, False, acc)
    labels = acc["labels"]
    return Stats(
        assertions=len(script.assertions),
        nodes=acc["nodes"],
        quantifiers=acc["quantifiers"],
        max_quantifier_depth=acc["depth"],
        templates=labels[TRANSITION],
        symbols=len(script.symbols),
        labels=dict(labels),
        quantified_body_nodes=acc["body"],
    )
