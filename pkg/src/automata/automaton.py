"""
In-memory representation of rectangular hybrid automata.

All numeric values are exact `Fraction`s. Guards are conjunctions only; any
disjunction in the input is expanded into parallel transitions by the parser.
"""

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

REAL = "real"
INT = "int"

RELATIONS = ("<", "<=", "=", ">=", ">")

Value = Union[Fraction, int]


def as_fraction(value: Union[str, int, float, Fraction]) -> Fraction:
    """Exact conversion; floats go through their decimal repr so 2.5 stays 5/2."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def compare(lhs: Fraction, relation: str, rhs: Fraction) -> bool:
    if relation == "<":
        return lhs < rhs
    if relation == "<=":
        return lhs <= rhs
    if relation == "=":
        return lhs == rhs
    if relation == ">=":
        return lhs >= rhs
    if relation == ">":
        return lhs > rhs
    raise ValueError(f"unknown relation {relation!r}")


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str = REAL
    lo: Optional[int] = None
    hi: Optional[int] = None
    is_global: bool = False

    @property
    def is_real(self) -> bool:
        return self.kind == REAL

    def domain(self) -> range:
        if self.is_real:
            raise ValueError(f"{self.name} is a real variable")
        return range(self.lo, self.hi + 1)

    def renamed(self, name: str) -> "VarDecl":
        return VarDecl(name, self.kind, self.lo, self.hi, self.is_global)


def real_var(name: str) -> VarDecl:
    return VarDecl(name, REAL)


def int_var(name: str, lo: int, hi: int, is_global: bool = False) -> VarDecl:
    return VarDecl(name, INT, lo, hi, is_global)


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coef * var) <relation> bound, terms kept sorted by variable name."""

    terms: Tuple[Tuple[str, Fraction], ...]
    relation: str
    bound: Fraction

    @staticmethod
    def of(terms: Union[Mapping[str, Value], Iterable[Tuple[str, Value]]], relation: str, bound) -> "LinearConstraint":
        if relation not in RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: Dict[str, Fraction] = {}
        for name, coef in items:
            merged[name] = merged.get(name, Fraction(0)) + as_fraction(coef)
        cleaned = tuple(sorted((n, c) for n, c in merged.items() if c != 0))
        return LinearConstraint(cleaned, relation, as_fraction(bound))

    def variables(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.terms)

    def is_rectangular(self) -> bool:
        return len(self.terms) <= 1

    def evaluate(self, valuation: Mapping[str, Value]) -> bool:
        total = sum((coef * valuation[name] for name, coef in self.terms), Fraction(0))
        return compare(total, self.relation, self.bound)

    def rename(self, mapping: Mapping[str, str]) -> "LinearConstraint":
        return LinearConstraint.of(
            [(mapping.get(name, name), coef) for name, coef in self.terms], self.relation, self.bound
        )


def var_cmp(name: str, relation: str, bound) -> LinearConstraint:
    return LinearConstraint.of({name: 1}, relation, bound)


@dataclass(frozen=True)
class Guard:
    conjuncts: Tuple[LinearConstraint, ...] = ()

    @staticmethod
    def of(*conjuncts: LinearConstraint) -> "Guard":
        return Guard(tuple(conjuncts))

    def holds(self, valuation: Mapping[str, Value]) -> bool:
        return all(c.evaluate(valuation) for c in self.conjuncts)

    def variables(self) -> FrozenSet[str]:
        return frozenset(name for c in self.conjuncts for name in c.variables())

    def rename(self, mapping: Mapping[str, str]) -> "Guard":
        return Guard(tuple(c.rename(mapping) for c in self.conjuncts))

    def __and__(self, other: "Guard") -> "Guard":
        return Guard(self.conjuncts + other.conjuncts)

    def __bool__(self) -> bool:
        return bool(self.conjuncts)


TRUE_GUARD = Guard()


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class AssignConst:
    value: Fraction


@dataclass(frozen=True)
class AssignInterval:
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class AssignVar:
    name: str


UpdateAction = Union[Identity, AssignConst, AssignInterval, AssignVar]
IDENTITY = Identity()


@dataclass(frozen=True)
class UpdateMap:
    """Non-identity actions only, sorted by variable name."""

    actions: Tuple[Tuple[str, UpdateAction], ...] = ()

    @staticmethod
    def of(actions: Union[Mapping[str, UpdateAction], Iterable[Tuple[str, UpdateAction]]] = ()) -> "UpdateMap":
        items = actions.items() if isinstance(actions, Mapping) else actions
        kept = {name: action for name, action in items if not isinstance(action, Identity)}
        return UpdateMap(tuple(sorted(kept.items())))

    def action_for(self, name: str) -> UpdateAction:
        for var, action in self.actions:
            if var == name:
                return action
        return IDENTITY

    def written(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.actions)

    def rename(self, mapping: Mapping[str, str]) -> "UpdateMap":
        renamed = []
        for name, action in self.actions:
            if isinstance(action, AssignVar):
                action = AssignVar(mapping.get(action.name, action.name))
            renamed.append((mapping.get(name, name), action))
        return UpdateMap.of(renamed)


@dataclass(frozen=True)
class Location:
    name: str
    invariant: Guard = TRUE_GUARD
    flow: Tuple[Tuple[str, Fraction, Fraction], ...] = ()

    def rate(self, var: str) -> Optional[Tuple[Fraction, Fraction]]:
        for name, lo, hi in self.flow:
            if name == var:
                return lo, hi
        return None


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    guard: Guard = TRUE_GUARD
    update: UpdateMap = UpdateMap()
    label: Optional[str] = None

    def describe(self) -> str:
        return self.label or f"{self.source}->{self.target}"


@dataclass(frozen=True)
class BadEntry:
    """{<l, v> : l in locations and v satisfies guard}."""

    locations: FrozenSet[str]
    guard: Guard = TRUE_GUARD


@dataclass(frozen=True)
class ProductInfo:
    """Component structure recorded by product composition."""

    components: Tuple[str, ...]
    component_locations: Tuple[Tuple[str, ...], ...]
    parts: Tuple[Tuple[str, Tuple[str, ...]], ...]

    @cached_property
    def _parts_by_location(self) -> Dict[str, Tuple[str, ...]]:
        return dict(self.parts)

    def parts_of(self, location: str) -> Tuple[str, ...]:
        return self._parts_by_location[location]


@dataclass(frozen=True)
class HybridAutomaton:
    name: str
    vars: Tuple[VarDecl, ...]
    locations: Tuple[Location, ...]
    transitions: Tuple[Transition, ...]
    init_location: str
    init_guard: Guard = TRUE_GUARD
    bad: Tuple[BadEntry, ...] = ()
    product: Optional[ProductInfo] = field(default=None, compare=False)

    def var(self, name: str) -> VarDecl:
        for decl in self.vars:
            if decl.name == name:
                return decl
        raise KeyError(name)

    def real_vars(self) -> Tuple[VarDecl, ...]:
        return tuple(v for v in self.vars if v.is_real)

    def int_vars(self) -> Tuple[VarDecl, ...]:
        return tuple(v for v in self.vars if not v.is_real)

    @cached_property
    def _locations_by_name(self) -> Dict[str, Location]:
        return {loc.name: loc for loc in self.locations}

    @cached_property
    def _codes(self) -> Dict[str, int]:
        return {loc.name: index for index, loc in enumerate(self.locations)}

    def location(self, name: str) -> Location:
        return self._locations_by_name[name]

    def location_names(self) -> Tuple[str, ...]:
        return tuple(loc.name for loc in self.locations)

    def code(self, name: str) -> int:
        """Location code: index in declaration order."""
        return self._codes[name]

    def with_bad(self, bad: Iterable[BadEntry]) -> "HybridAutomaton":
        return HybridAutomaton(
            self.name,
            self.vars,
            self.locations,
            self.transitions,
            self.init_location,
            self.init_guard,
            tuple(bad),
            self.product,
        )

    def in_bad(self, location: str, valuation: Mapping[str, Value]) -> bool:
        return any(location in entry.locations and entry.guard.holds(valuation) for entry in self.bad)


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)
    is_rectangular: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_constraint(
    constraint: LinearConstraint, decls: Mapping[str, VarDecl], where: str, report: ValidationReport
) -> None:
    for name in constraint.variables():
        if name not in decls:
            report.violations.append(f"{where}: undeclared variable {name!r}")
            return
    if not constraint.is_rectangular():
        report.is_rectangular = False
    int_names = [n for n in constraint.variables() if not decls[n].is_real]
    if int_names:
        if len(constraint.terms) != 1 or constraint.terms[0][1] != 1:
            report.violations.append(
                f"{where}: finite variable {int_names[0]!r} must appear alone with coefficient 1"
            )
        elif constraint.bound.denominator != 1:
            report.violations.append(f"{where}: finite variable {int_names[0]!r} compared to non-integer bound")


def _check_guard(guard: Guard, decls: Mapping[str, VarDecl], where: str, report: ValidationReport) -> None:
    for constraint in guard.conjuncts:
        _check_constraint(constraint, decls, where, report)


def validate_automaton(ha: HybridAutomaton) -> ValidationReport:
    """List every violated structural invariant; empty report iff well-formed."""
    report = ValidationReport()
    decls: Dict[str, VarDecl] = {}
    for decl in ha.vars:
        if decl.name in decls:
            report.violations.append(f"duplicate variable {decl.name!r}")
        decls[decl.name] = decl
        if not decl.is_real and (decl.lo is None or decl.hi is None or decl.lo > decl.hi):
            report.violations.append(f"variable {decl.name!r}: finite domain lo > hi")

    names = set()
    for loc in ha.locations:
        if loc.name in names:
            report.violations.append(f"duplicate location {loc.name!r}")
        names.add(loc.name)
        _check_guard(loc.invariant, decls, f"location {loc.name} invariant", report)
        flowed = set()
        for var, lo, hi in loc.flow:
            where = f"location {loc.name} flow {var}"
            if var not in decls:
                report.violations.append(f"{where}: undeclared variable {var!r}")
                continue
            if not decls[var].is_real:
                report.violations.append(f"{where}: finite variable has no flow")
            if var in flowed:
                report.violations.append(f"{where}: duplicate flow entry")
            flowed.add(var)
            if lo > hi:
                report.violations.append(f"{where}: flow lo > hi")
        for decl in ha.real_vars():
            if decl.name not in flowed:
                report.violations.append(f"location {loc.name}: missing flow for {decl.name!r}")

    if ha.init_location not in names:
        report.violations.append(f"init location {ha.init_location!r} does not exist")
    _check_guard(ha.init_guard, decls, "init", report)

    for index, tr in enumerate(ha.transitions):
        where = f"transition {index} ({tr.describe()})"
        for end in (tr.source, tr.target):
            if end not in names:
                report.violations.append(f"{where}: dangling location {end!r}")
        _check_guard(tr.guard, decls, f"{where} guard", report)
        for var, action in tr.update.actions:
            if var not in decls:
                report.violations.append(f"{where}: update of undeclared variable {var!r}")
                continue
            decl = decls[var]
            if isinstance(action, AssignInterval):
                if not decl.is_real:
                    report.violations.append(f"{where}: interval update of finite variable {var!r}")
                if action.lo > action.hi:
                    report.violations.append(f"{where}: interval update lo > hi")
            elif isinstance(action, AssignConst):
                if not decl.is_real and (
                    action.value.denominator != 1 or not decl.lo <= action.value <= decl.hi
                ):
                    report.violations.append(f"{where}: value {action.value} outside domain of {var!r}")
            elif isinstance(action, AssignVar):
                source = decls.get(action.name)
                if source is None:
                    report.violations.append(f"{where}: undeclared variable {action.name!r}")
                elif (source.kind, source.lo, source.hi) != (decl.kind, decl.lo, decl.hi):
                    report.violations.append(f"{where}: {var!r} := {action.name!r} mixes domains")

    for entry in ha.bad:
        for loc in sorted(entry.locations):
            if loc not in names:
                report.violations.append(f"bad set references unknown location {loc!r}")
        _check_guard(entry.guard, decls, "bad", report)
    return report


def classify_automaton(ha: HybridAutomaton) -> str:
    """'timed' if every rate is exactly 1, 'multi-rate' if every rate is a point, else 'rectangular'."""
    rates = [(lo, hi) for loc in ha.locations for _, lo, hi in loc.flow]
    if all(lo == hi == 1 for lo, hi in rates):
        return "timed"
    if all(lo == hi for lo, hi in rates):
        return "multi-rate"
    return "rectangular"
