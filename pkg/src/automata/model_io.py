"""
Line-oriented model format.

    qbmc-model 1
    var x real
    loc loc1 { inv x <= 5 flow x in [0, 1] }
    trans loc1 -> loc2 { guard x >= 2.5 }
    init loc1 with x = 0
    bad {loc2} with x < 2.5

Networks put each component in an `automaton NAME { ... }` block and list them
with `network A, B with <global init>`; `bad-mutex LOC` marks the mutual
exclusion property and `kmax N` the default bound. Guards may use `or` and `!=`;
both are expanded into parallel conjunctive transitions here.
"""

import itertools
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from src.automata.automaton import (
    INT,
    REAL,
    AssignConst,
    AssignInterval,
    AssignVar,
    BadEntry,
    Guard,
    HybridAutomaton,
    LinearConstraint,
    Location,
    Transition,
    UpdateMap,
    VarDecl,
)
from src.automata.compose import bad_mutex, product_compose
from src.errors import ModelSemanticError, ModelSyntaxError

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1"
HEADER = "qbmc-model"
MAIN_AUTOMATON = "main"


@dataclass(frozen=True)
class NetworkSpec:
    components: Tuple[str, ...]
    globals: Tuple[VarDecl, ...] = ()
    init_guard: Guard = Guard()
    mutex_location: Optional[str] = None


@dataclass(frozen=True)
class CheckSpec:
    bad: Tuple[BadEntry, ...] = ()
    kmax: Optional[int] = None


@dataclass(frozen=True)
class ModelDocument:
    format_version: str
    automata: Tuple[HybridAutomaton, ...]
    network: Optional[NetworkSpec] = None
    check: Optional[CheckSpec] = None

    def automaton(self, name: str) -> HybridAutomaton:
        for ha in self.automata:
            if ha.name == name:
                return ha
        raise KeyError(name)


def build_automaton(doc: ModelDocument) -> HybridAutomaton:
    """The automaton under check: composed network or the single automaton, with every bad entry attached."""
    check = doc.check or CheckSpec()
    if doc.network is not None:
        try:
            components = [doc.automaton(name) for name in doc.network.components]
        except KeyError as e:
            raise ModelSemanticError(f"network references unknown automaton {e.args[0]!r}")
        ha = product_compose(components, doc.network.globals, doc.network.init_guard)
        bad = list(ha.bad)
        if doc.network.mutex_location is not None:
            bad.extend(bad_mutex(ha, doc.network.mutex_location))
        return ha.with_bad(bad + list(check.bad))
    if len(doc.automata) != 1:
        raise ModelSemanticError(f"expected one automaton or a network, found {len(doc.automata)} automata")
    ha = doc.automata[0]
    return ha.with_bad(list(ha.bad) + list(check.bad))


# ---------------------------------------------------------------------------
# Rationals


def format_rational(value: Fraction) -> str:
    """Integer, exact decimal when the denominator allows one, else p/q."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    places = max(twos, fives)
    scaled = abs(value.numerator) * (10**places // value.denominator)
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if value < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


# ---------------------------------------------------------------------------
# Conjunctions


def conjunction(constraints) -> Guard:
    """Guard over `constraints`, minus variable-free atoms that hold anyway."""
    return Guard(tuple(c for c in constraints if c.terms or not c.evaluate({})))


# ---------------------------------------------------------------------------
# Lexer


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<keyword>(?:qbmc-model|bad-mutex)(?![A-Za-z0-9_]))
  | (?P<number>\d+(?:\.\d+|/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:×[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>->|:=|<=|>=|!=|\.\.|[{}\[\],<>=+\-*])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line, column)
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind in ("keyword", "number", "name", "op"):
            tokens.append(Token("name" if kind == "keyword" else kind, match.group(), line, column))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser


@dataclass
class _Block:
    name: str
    vars: List[VarDecl] = field(default_factory=list)
    locations: List[Location] = field(default_factory=list)
    transitions: List[Transition] = field(default_factory=list)
    init: Optional[Tuple[str, Guard, Token]] = None
    var_tokens: List[Token] = field(default_factory=list)
    bad: List[BadEntry] = field(default_factory=list)
    # (variable, token) pairs checked once the whole block is known
    references: List[Tuple[str, Token]] = field(default_factory=list)
    location_refs: List[Tuple[str, Token]] = field(default_factory=list)


class _Parser:
    RELATIONS = ("<", "<=", "=", ">=", ">")

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # token helpers
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def fail(self, message: str, *expected: str) -> None:
        token = self.peek()
        found = token.text or "end of input"
        raise ModelSyntaxError(f"{message}, found {found!r}", token.line, token.column, expected)

    def accept(self, text: str) -> Optional[Token]:
        if self.peek().text == text and self.peek().kind != "eof":
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        token = self.accept(text)
        if token is None:
            self.fail("syntax error", repr(text))
        return token

    def expect_name(self) -> Token:
        if self.peek().kind != "name":
            self.fail("syntax error", "NAME")
        return self.advance()

    def expect_int(self) -> int:
        negative = self.accept("-") is not None
        token = self.peek()
        if token.kind != "number" or not token.text.isdigit():
            self.fail("syntax error", "INT")
        self.advance()
        return -int(token.text) if negative else int(token.text)

    def rational(self) -> Fraction:
        negative = self.accept("-") is not None
        token = self.peek()
        if token.kind != "number":
            self.fail("syntax error", "rational")
        self.advance()
        try:
            value = Fraction(token.text)
        except ZeroDivisionError:
            raise ModelSemanticError(f"bad rational {token.text!r}", token.line, token.column)
        return -value if negative else value

    # grammar
    def parse(self) -> ModelDocument:
        header = self.peek()
        if header.text != HEADER:
            self.fail("missing header", repr(HEADER))
        self.advance()
        version = self.peek()
        if version.kind != "number":
            self.fail("missing format version", "INT")
        self.advance()
        if version.text != FORMAT_VERSION:
            raise ModelSemanticError(f"unsupported format version {version.text}", version.line, version.column)

        top = _Block(MAIN_AUTOMATON)
        blocks: List[_Block] = []
        globals_: List[VarDecl] = []
        network: Optional[Tuple[List[str], List[LinearConstraint], _Block]] = None
        mutex: Optional[str] = None
        check_bad: List[BadEntry] = []
        kmax: Optional[int] = None
        while self.peek().kind != "eof":
            keyword = self.peek().text
            if keyword == "automaton":
                self.advance()
                name = self.expect_name()
                block = _Block(name.text)
                self.expect("{")
                while not self.accept("}"):
                    self.declaration(block)
                blocks.append(block)
            elif keyword == "network":
                token = self.advance()
                names = [self.expect_name().text]
                while self.accept(","):
                    names.append(self.expect_name().text)
                net_block = _Block("network")
                with_constraints = []
                while self.accept("with"):
                    with_constraints.append(self.constraint(net_block))
                network = (names, with_constraints, net_block)
            elif keyword == "bad-mutex":
                self.advance()
                mutex = self.expect_name().text
            elif keyword == "kmax":
                self.advance()
                kmax = self.expect_int()
            elif keyword == "var":
                token = self.peek()
                decl = self.vardecl()
                if decl.is_global:
                    globals_.append(decl)
                else:
                    top.vars.append(decl)
                    top.var_tokens.append(token)
            elif keyword == "bad" and (blocks or network is not None):
                # product location names are only known after composition
                check_bad.append(self.bad(_Block("check")))
            elif keyword in ("loc", "trans", "init", "bad"):
                self.declaration(top)
            else:
                self.fail(
                    "unexpected token",
                    "var", "loc", "trans", "init", "bad", "automaton", "network", "bad-mutex", "kmax",
                )

        top_automaton = bool(top.locations or top.transitions) or top.init is not None
        if top.vars and (blocks or network is not None) and not top_automaton:
            token = top.var_tokens[0]
            raise ModelSemanticError(
                f"top-level variable {top.vars[0].name!r} in a network file must be declared global",
                token.line,
                token.column,
            )
        automata = [self.finish(block) for block in blocks]
        if top_automaton:
            if blocks:
                raise ModelSemanticError("top-level locations cannot be mixed with automaton blocks")
            main = self.finish(top, extra_vars=globals_)
            check_bad.extend(main.bad)
            automata.append(main.with_bad(()))
            globals_ = []
        elif top.bad:
            check_bad.extend(top.bad)

        network_spec = None
        if network is not None:
            names, with_constraints, net_block = network
            known = {ha.name for ha in automata}
            for name in names:
                if name not in known:
                    raise ModelSemanticError(f"unknown automaton {name!r}")
            declared = {decl.name for decl in globals_}
            for name, ref in net_block.references:
                if name not in declared:
                    raise ModelSemanticError(f"undeclared variable {name!r}", ref.line, ref.column)
            network_spec = NetworkSpec(tuple(names), tuple(globals_), conjunction(with_constraints), mutex)
        elif mutex is not None:
            raise ModelSemanticError("bad-mutex requires a network")

        check = CheckSpec(tuple(check_bad), kmax) if (check_bad or kmax is not None) else None
        return ModelDocument(FORMAT_VERSION, tuple(automata), network_spec, check)

    def declaration(self, block: _Block) -> None:
        keyword = self.peek().text
        if keyword == "var":
            block.vars.append(self.vardecl())
        elif keyword == "loc":
            block.locations.append(self.location(block))
        elif keyword == "trans":
            block.transitions.extend(self.transition(block))
        elif keyword == "init":
            token = self.advance()
            if block.init is not None:
                raise ModelSemanticError("only one initial location is supported", token.line, token.column)
            name = self.expect_name()
            block.location_refs.append((name.text, name))
            conjuncts = []
            while self.accept("with"):
                conjuncts.append(self.constraint(block))
            block.init = (name.text, conjunction(conjuncts), token)
        elif keyword == "bad":
            block.bad.append(self.bad(block))
        else:
            self.fail("unexpected token", "var", "loc", "trans", "init", "bad", "'}'")

    def vardecl(self) -> VarDecl:
        self.expect("var")
        name = self.expect_name().text
        if self.accept("real"):
            decl = VarDecl(name, REAL)
        elif self.accept("int"):
            lo = self.expect_int()
            self.expect("..")
            hi = self.expect_int()
            decl = VarDecl(name, INT, lo, hi)
        else:
            self.fail("syntax error", "'real'", "'int'")
        if self.accept("global"):
            decl = VarDecl(decl.name, decl.kind, decl.lo, decl.hi, True)
        return decl

    def location(self, block: _Block) -> Location:
        self.expect("loc")
        name = self.expect_name().text
        self.expect("{")
        invariant = []
        flow = []
        while not self.accept("}"):
            if self.accept("inv"):
                invariant.append(self.constraint(block))
            elif self.accept("flow"):
                var = self.expect_name()
                block.references.append((var.text, var))
                self.expect("in")
                self.expect("[")
                lo = self.rational()
                self.expect(",")
                hi = self.rational()
                self.expect("]")
                flow.append((var.text, lo, hi))
            else:
                self.fail("syntax error", "'inv'", "'flow'", "'}'")
        return Location(name, conjunction(invariant), tuple(flow))

    def transition(self, block: _Block) -> List[Transition]:
        self.expect("trans")
        source = self.expect_name()
        self.expect("->")
        target = self.expect_name()
        block.location_refs.extend([(source.text, source), (target.text, target)])
        self.expect("{")
        clauses: List[List[LinearConstraint]] = []
        updates = []
        label = None
        while not self.accept("}"):
            if self.accept("guard"):
                alternatives = self.alternatives(block)
                while self.accept("or"):
                    alternatives.extend(self.alternatives(block))
                clauses.append(alternatives)
            elif self.accept("update"):
                var = self.expect_name()
                block.references.append((var.text, var))
                self.expect(":=")
                if self.accept("["):
                    lo = self.rational()
                    self.expect(",")
                    hi = self.rational()
                    self.expect("]")
                    action = AssignInterval(lo, hi)
                elif self.peek().kind == "name":
                    other = self.advance()
                    block.references.append((other.text, other))
                    action = AssignVar(other.text)
                else:
                    action = AssignConst(self.rational())
                updates.append((var.text, action))
            elif self.accept("label"):
                label = self.expect_name().text
            else:
                self.fail("syntax error", "'guard'", "'update'", "'label'", "'}'")
        update = UpdateMap.of(updates)
        return [
            Transition(source.text, target.text, conjunction(choice), update, label)
            for choice in itertools.product(*clauses)
        ]

    def alternatives(self, block: _Block) -> List[LinearConstraint]:
        """One guard atom; `!=` yields its two strict halves."""
        terms = self.linexpr(block)
        relation = self.peek().text
        if relation == "!=":
            self.advance()
            bound = self.rational()
            return [LinearConstraint.of(terms, "<", bound), LinearConstraint.of(terms, ">", bound)]
        return [self.finish_constraint(terms)]

    def bad(self, block: _Block) -> BadEntry:
        self.expect("bad")
        self.expect("{")
        names = [self.expect_name()]
        while self.accept(","):
            names.append(self.expect_name())
        self.expect("}")
        block.location_refs.extend((name.text, name) for name in names)
        conjuncts = []
        while self.accept("with"):
            conjuncts.append(self.constraint(block))
        return BadEntry(frozenset(name.text for name in names), conjunction(conjuncts))

    def constraint(self, block: _Block) -> LinearConstraint:
        return self.finish_constraint(self.linexpr(block))

    def finish_constraint(self, terms: List[Tuple[str, Fraction]]) -> LinearConstraint:
        relation = self.peek().text
        if relation not in self.RELATIONS:
            self.fail("syntax error", *(repr(r) for r in self.RELATIONS))
        self.advance()
        return LinearConstraint.of(terms, relation, self.rational())

    def linexpr(self, block: _Block) -> List[Tuple[str, Fraction]]:
        terms = [self.term(block, negate=self.accept("-") is not None)]
        while self.peek().text in ("+", "-"):
            negate = self.advance().text == "-"
            terms.append(self.term(block, negate))
        return terms

    def term(self, block: _Block, negate: bool) -> Tuple[str, Fraction]:
        coef = Fraction(1)
        if self.peek().kind == "number":
            coef = self.rational()
            self.expect("*")
        name = self.expect_name()
        block.references.append((name.text, name))
        return name.text, -coef if negate else coef

    def finish(self, block: _Block, extra_vars: List[VarDecl] = ()) -> HybridAutomaton:
        declared = {decl.name for decl in block.vars} | {decl.name for decl in extra_vars}
        for name, token in block.references:
            if name not in declared:
                raise ModelSemanticError(f"undeclared variable {name!r}", token.line, token.column)
        locations = {loc.name for loc in block.locations}
        for name, token in block.location_refs:
            if name not in locations:
                raise ModelSemanticError(f"unknown location {name!r}", token.line, token.column)
        if block.init is None:
            raise ModelSemanticError(f"automaton {block.name!r} has no init declaration")
        init_location, init_guard, _ = block.init
        return HybridAutomaton(
            name=block.name,
            vars=tuple(list(extra_vars) + block.vars),
            locations=tuple(block.locations),
            transitions=tuple(block.transitions),
            init_location=init_location,
            init_guard=init_guard,
            bad=tuple(block.bad),
        )


def parse_model(text: str) -> ModelDocument:
    """Parse model text; raises ModelSyntaxError / ModelSemanticError with line:column."""
    doc = _Parser(text).parse()
    logger.debug("parsed model with %d automata", len(doc.automata))
    return doc


# ---------------------------------------------------------------------------
# Serializer


def format_constraint(constraint: LinearConstraint, scope: Sequence[str] = ()) -> str:
    """Constraint text; a variable-free one is written as `0*v` over the first name in `scope`."""
    parts = []
    for index, (name, coef) in enumerate(constraint.terms):
        if index == 0:
            if coef == 1:
                parts.append(name)
            elif coef == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{format_rational(coef)}*{name}")
            continue
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        parts.append(sign)
        parts.append(name if magnitude == 1 else f"{format_rational(magnitude)}*{name}")
    if not parts:
        if not scope:
            raise ModelSemanticError(
                f"no variable in scope to write 0 {constraint.relation} {format_rational(constraint.bound)}"
            )
        parts.append(f"0*{scope[0]}")
    lhs = " ".join(parts)
    return f"{lhs} {constraint.relation} {format_rational(constraint.bound)}"


def _format_var(decl: VarDecl) -> str:
    kind = "real" if decl.is_real else f"int {decl.lo}..{decl.hi}"
    suffix = " global" if decl.is_global else ""
    return f"var {decl.name} {kind}{suffix}"


def _format_action(action) -> str:
    if isinstance(action, AssignConst):
        return format_rational(action.value)
    if isinstance(action, AssignInterval):
        return f"[{format_rational(action.lo)}, {format_rational(action.hi)}]"
    if isinstance(action, AssignVar):
        return action.name
    raise TypeError(f"unexpected update action {action!r}")


def _format_bad(entry: BadEntry, scope: Sequence[str] = ()) -> str:
    text = "bad {" + ", ".join(sorted(entry.locations)) + "}"
    return text + "".join(f" with {format_constraint(c, scope)}" for c in entry.guard.conjuncts)


def _format_body(ha: HybridAutomaton, indent: str) -> List[str]:
    scope = [decl.name for decl in ha.vars]
    lines = [f"{indent}{_format_var(decl)}" for decl in ha.vars]
    for loc in ha.locations:
        lines.append(f"{indent}loc {loc.name} {{")
        lines.extend(f"{indent}  inv {format_constraint(c, scope)}" for c in loc.invariant.conjuncts)
        lines.extend(
            f"{indent}  flow {var} in [{format_rational(lo)}, {format_rational(hi)}]" for var, lo, hi in loc.flow
        )
        lines.append(f"{indent}}}")
    for tr in ha.transitions:
        lines.append(f"{indent}trans {tr.source} -> {tr.target} {{")
        lines.extend(f"{indent}  guard {format_constraint(c, scope)}" for c in tr.guard.conjuncts)
        lines.extend(f"{indent}  update {var} := {_format_action(action)}" for var, action in tr.update.actions)
        if tr.label is not None:
            lines.append(f"{indent}  label {tr.label}")
        lines.append(f"{indent}}}")
    init = f"{indent}init {ha.init_location}"
    init += "".join(f" with {format_constraint(c, scope)}" for c in ha.init_guard.conjuncts)
    lines.append(init)
    lines.extend(f"{indent}{_format_bad(entry, scope)}" for entry in ha.bad)
    return lines


def _is_plain(doc: ModelDocument) -> bool:
    """Whether the document reads back from the top-level single-automaton form."""
    if doc.network is not None or len(doc.automata) != 1:
        return False
    ha = doc.automata[0]
    return ha.name == MAIN_AUTOMATON and not ha.bad and not any(decl.is_global for decl in ha.vars)


def serialize_model(doc: ModelDocument) -> str:
    """Canonical text; equal documents give identical bytes."""
    lines = [f"{HEADER} {doc.format_version}"]
    globals_ = [decl.name for decl in doc.network.globals] if doc.network is not None else []
    if doc.network is not None:
        lines.extend(_format_var(decl) for decl in doc.network.globals)
    if _is_plain(doc):
        lines.extend(_format_body(doc.automata[0], ""))
    else:
        for ha in doc.automata:
            lines.append(f"automaton {ha.name} {{")
            lines.extend(_format_body(ha, "  "))
            lines.append("}")
    if doc.network is not None:
        network = "network " + ", ".join(doc.network.components)
        network += "".join(f" with {format_constraint(c, globals_)}" for c in doc.network.init_guard.conjuncts)
        lines.append(network)
        if doc.network.mutex_location is not None:
            lines.append(f"bad-mutex {doc.network.mutex_location}")
    if doc.check is not None:
        scope = globals_ + [decl.name for ha in doc.automata for decl in ha.vars]
        lines.extend(_format_bad(entry, scope) for entry in doc.check.bad)
        if doc.check.kmax is not None:
            lines.append(f"kmax {doc.check.kmax}")
    return "\n".join(lines) + "\n"
