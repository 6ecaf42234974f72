"""
Fourier-Motzkin elimination over the rationals with strict inequalities.

Rows are kept as `a.x <= b`, `a.x < b` or `a.x = b`. Equalities are removed by
substitution first; the remaining inequalities are eliminated one variable at
a time by pairing every upper bound (p) with every lower bound (n), rows free
of the variable (z) passing through. A pair is strict if either side is.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from src.automata.automaton import LinearConstraint

logger = logging.getLogger(__name__)

LE = "<="
LT = "<"
EQ = "="

Coeffs = Dict[str, Fraction]


@dataclass(frozen=True)
class LinearSystem:
    variables: Tuple[str, ...]
    constraints: Tuple[LinearConstraint, ...]

    @staticmethod
    def of(constraints: Sequence[LinearConstraint]) -> "LinearSystem":
        names = sorted({name for c in constraints for name in c.variables()})
        return LinearSystem(tuple(names), tuple(constraints))

    def holds(self, point: Dict[str, Fraction]) -> bool:
        full = {name: point.get(name, Fraction(0)) for name in self.variables}
        return all(c.evaluate(full) for c in self.constraints)


@dataclass
class _Row:
    coeffs: Coeffs
    kind: str
    bound: Fraction


def _normalize(constraint: LinearConstraint) -> _Row:
    coeffs = {name: coef for name, coef in constraint.terms}
    if constraint.relation in (">", ">="):
        kind = LT if constraint.relation == ">" else LE
        return _Row({name: -coef for name, coef in coeffs.items()}, kind, -constraint.bound)
    return _Row(coeffs, constraint.relation, constraint.bound)


def _constant_ok(row: _Row) -> bool:
    if row.kind == LT:
        return 0 < row.bound
    if row.kind == LE:
        return 0 <= row.bound
    return row.bound == 0


def _substitute(row: _Row, var: str, expr: Coeffs, const: Fraction) -> _Row:
    """Replace var by const + expr.y in row."""
    factor = row.coeffs.get(var)
    if factor is None:
        return row
    coeffs = {name: coef for name, coef in row.coeffs.items() if name != var}
    for name, coef in expr.items():
        total = coeffs.get(name, Fraction(0)) + factor * coef
        if total:
            coeffs[name] = total
        else:
            coeffs.pop(name, None)
    return _Row(coeffs, row.kind, row.bound - factor * const)


def _key(coeffs: Coeffs) -> Tuple[Tuple[Tuple[str, Fraction], ...], Fraction]:
    items = sorted(coeffs.items())
    scale = abs(items[0][1])
    return tuple((name, coef / scale) for name, coef in items), scale


def _tighten(rows: List[_Row]) -> Optional[List[_Row]]:
    """Keep the tightest row per direction; None when a constant row fails."""
    best: Dict[tuple, Tuple[Fraction, str]] = {}
    for row in rows:
        if not row.coeffs:
            if not _constant_ok(row):
                return None
            continue
        direction, scale = _key(row.coeffs)
        bound = row.bound / scale
        current = best.get(direction)
        if current is None or bound < current[0] or (bound == current[0] and row.kind == LT):
            best[direction] = (bound, row.kind)
    return [_Row(dict(direction), kind, bound) for direction, (bound, kind) in best.items()]


@dataclass
class _Elimination:
    """Record of how each variable left the system, replayed backwards for a sample point."""

    substitutions: List[Tuple[str, Coeffs, Fraction]]
    stages: List[Tuple[str, List[_Row]]]


def _equalities_to_substitutions(rows: List[_Row], record: _Elimination) -> Optional[List[_Row]]:
    inequalities = [row for row in rows if row.kind != EQ]
    equalities = [row for row in rows if row.kind == EQ]
    while equalities:
        row = equalities.pop()
        if not row.coeffs:
            if row.bound != 0:
                return None
            continue
        var, coef = sorted(row.coeffs.items())[0]
        expr = {name: -c / coef for name, c in row.coeffs.items() if name != var}
        const = row.bound / coef
        record.substitutions.append((var, expr, const))
        equalities = [_substitute(other, var, expr, const) for other in equalities]
        inequalities = [_substitute(other, var, expr, const) for other in inequalities]
    return inequalities


def _opposite_pairs(rows: List[_Row]) -> Tuple[List[_Row], List[_Row]]:
    """Split out pairs a.x <= b and -a.x <= -b, which pin a.x = b."""
    by_coeffs = {tuple(sorted(row.coeffs.items())): row for row in rows if row.kind == LE}
    equalities, used = [], set()
    for key, row in by_coeffs.items():
        mirror = tuple(sorted((name, -coef) for name, coef in row.coeffs.items()))
        other = by_coeffs.get(mirror)
        if other is not None and other.bound == -row.bound and key not in used and mirror not in used:
            equalities.append(_Row(dict(row.coeffs), EQ, row.bound))
            used.update((key, mirror))
    rest = [row for row in rows if not (row.kind == LE and tuple(sorted(row.coeffs.items())) in used)]
    return equalities, rest


def _pick_variable(rows: List[_Row]) -> str:
    counts: Dict[str, List[int]] = {}
    for row in rows:
        for name, coef in row.coeffs.items():
            entry = counts.setdefault(name, [0, 0])
            entry[0 if coef > 0 else 1] += 1
    return min(sorted(counts), key=lambda name: counts[name][0] * counts[name][1] - sum(counts[name]))


def _eliminate(rows: List[_Row], var: str) -> List[_Row]:
    z = [row for row in rows if var not in row.coeffs]
    p = [row for row in rows if row.coeffs.get(var, 0) > 0]
    n = [row for row in rows if row.coeffs.get(var, 0) < 0]
    combined = list(z)
    for upper in p:
        a = upper.coeffs[var]
        for lower in n:
            c = -lower.coeffs[var]
            coeffs: Coeffs = {}
            for name in set(upper.coeffs) | set(lower.coeffs):
                if name == var:
                    continue
                total = c * upper.coeffs.get(name, Fraction(0)) + a * lower.coeffs.get(name, Fraction(0))
                if total:
                    coeffs[name] = total
            kind = LT if LT in (upper.kind, lower.kind) else LE
            combined.append(_Row(coeffs, kind, c * upper.bound + a * lower.bound))
    return combined


def _run(system: LinearSystem) -> Optional[_Elimination]:
    record = _Elimination([], [])
    rows: Optional[List[_Row]] = [_normalize(c) for c in system.constraints]
    while True:
        rows = _equalities_to_substitutions(rows, record)
        if rows is None:
            return None
        rows = _tighten(rows)
        if rows is None:
            return None
        pinned, rows = _opposite_pairs(rows)
        if not pinned:
            break
        rows = rows + pinned

    while any(row.coeffs for row in rows):
        var = _pick_variable(rows)
        record.stages.append((var, [row for row in rows if var in row.coeffs]))
        rows = _tighten(_eliminate(rows, var))
        if rows is None:
            return None
    logger.debug("eliminated %d substitutions and %d variables", len(record.substitutions), len(record.stages))
    return record


def fm_feasible(system: LinearSystem) -> bool:
    """True iff the system has a real solution."""
    return _run(system) is not None


def _choose(var: str, rows: List[_Row], point: Dict[str, Fraction]) -> Fraction:
    lower: Optional[Tuple[Fraction, bool]] = None
    upper: Optional[Tuple[Fraction, bool]] = None
    for row in rows:
        a = row.coeffs[var]
        rest = sum((coef * point.get(name, Fraction(0)) for name, coef in row.coeffs.items() if name != var), Fraction(0))
        value = (row.bound - rest) / a
        strict = row.kind == LT
        if a > 0:
            if upper is None or value < upper[0] or (value == upper[0] and strict):
                upper = (value, strict)
        elif lower is None or value > lower[0] or (value == lower[0] and strict):
            lower = (value, strict)
    if lower is None and upper is None:
        return Fraction(0)
    if lower is None:
        return upper[0] - 1
    if upper is None:
        return lower[0] + 1
    if lower[0] < upper[0]:
        return (lower[0] + upper[0]) / 2
    if lower[0] == upper[0] and not lower[1] and not upper[1]:
        return lower[0]
    raise ArithmeticError(f"empty interval for {var} during back-substitution")


def fm_solve(system: LinearSystem) -> Optional[Dict[str, Fraction]]:
    """A satisfying point by back-substitution, or None if infeasible."""
    record = _run(system)
    if record is None:
        return None
    point: Dict[str, Fraction] = {}
    for var, rows in reversed(record.stages):
        point[var] = _choose(var, rows, point)
    for var, expr, const in reversed(record.substitutions):
        point[var] = const + sum((coef * point.get(name, Fraction(0)) for name, coef in expr.items()), Fraction(0))
    for name in system.variables:
        point.setdefault(name, Fraction(0))
    return point
