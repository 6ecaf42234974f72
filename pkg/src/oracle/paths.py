"""
Exact bounded reachability by path enumeration.

Every sequence of step choices of length <= k from the initial location is a
symbolic path; its constraints mirror the encoder's step templates with the
locations fixed. Finite variables are concrete along a path: their updates
are constants or copies, so each initial finite valuation determines them.
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from src.automata.automaton import (
    AssignConst,
    AssignInterval,
    AssignVar,
    BadEntry,
    Guard,
    HybridAutomaton,
    LinearConstraint,
)
from src.encoding.bmc import DELTA, symbol
from src.errors import OracleBudgetExceeded
from src.oracle.fm import LinearSystem, fm_feasible, fm_solve
from src.trace.trace import DISCRETE, STUTTER, TRAJECTORY, State, Trace, TraceStep

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**6

SAT = "SAT"
UNSAT = "UNSAT"
REFUSED = "ORACLE-REFUSED"

ORACLE = "oracle"

# A constraint no point satisfies: 0 < 0.
_FALSE_ROW = LinearConstraint((), "<", Fraction(0))


@dataclass(frozen=True)
class PathStep:
    kind: str
    location: Optional[str] = None
    transition: Optional[int] = None


@dataclass(frozen=True)
class SymbolicPath:
    steps: Tuple[PathStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def locations(self, ha: HybridAutomaton) -> List[str]:
        """Location after each prefix, starting with the initial one."""
        current = ha.init_location
        result = [current]
        for step in self.steps:
            if step.kind == DISCRETE:
                current = ha.transitions[step.transition].target
            result.append(current)
        return result

    def extend(self, step: PathStep) -> "SymbolicPath":
        return SymbolicPath(self.steps + (step,))


def successors(ha: HybridAutomaton, location: str) -> Iterator[PathStep]:
    """Trajectory first, then discrete transitions in declaration order."""
    yield PathStep(TRAJECTORY, location=location)
    for index, tr in enumerate(ha.transitions):
        if tr.source == location:
            yield PathStep(DISCRETE, transition=index)


def enumerate_paths(ha: HybridAutomaton, k: int, budget: int = DEFAULT_BUDGET) -> Iterator[SymbolicPath]:
    """All chaining-consistent paths of length <= k, shortest first."""
    queue = deque([(SymbolicPath(), ha.init_location)])
    produced = 0
    while queue:
        path, location = queue.popleft()
        produced += 1
        if produced > budget:
            raise OracleBudgetExceeded(budget)
        yield path
        if len(path) == k:
            continue
        for step in successors(ha, location):
            target = location if step.kind == TRAJECTORY else ha.transitions[step.transition].target
            queue.append((path.extend(step), target))


def initial_int_valuations(ha: HybridAutomaton) -> List[Dict[str, int]]:
    """Finite valuations allowed by the init guard, in lexicographic domain order."""
    decls = ha.int_vars()
    names = {decl.name for decl in decls}
    conjuncts = [c for c in ha.init_guard.conjuncts if set(c.variables()) <= names and c.variables()]
    result = []
    for values in itertools.product(*(decl.domain() for decl in decls)):
        valuation = dict(zip((decl.name for decl in decls), values))
        if all(c.evaluate(valuation) for c in conjuncts):
            result.append(valuation)
    return result


def _frame_constraint(constraint: LinearConstraint, index: int) -> LinearConstraint:
    return LinearConstraint.of(
        [(symbol(name, index), coef) for name, coef in constraint.terms], constraint.relation, constraint.bound
    )


def guard_at(
    ha: HybridAutomaton, guard: Guard, ints: Mapping[str, int], index: int
) -> Optional[List[LinearConstraint]]:
    """Real part of `guard` over frame `index`; None when a finite conjunct is false."""
    result = []
    for constraint in guard.conjuncts:
        names = constraint.variables()
        if names and not ha.var(names[0]).is_real:
            if not constraint.evaluate(ints):
                return None
            continue
        result.append(_frame_constraint(constraint, index))
    return result


def _eq(terms, bound) -> LinearConstraint:
    return LinearConstraint.of(terms, "=", bound)


@dataclass
class _Frontier:
    """Constraints of a path prefix and the finite valuation it ends in."""

    location: str
    ints: Dict[str, int]
    constraints: List[LinearConstraint]


def initial_frontier(ha: HybridAutomaton, ints: Mapping[str, int]) -> Optional[_Frontier]:
    parts = guard_at(ha, ha.init_guard, ints, 0)
    invariant = guard_at(ha, ha.location(ha.init_location).invariant, ints, 0)
    if parts is None or invariant is None:
        return None
    return _Frontier(ha.init_location, dict(ints), parts + invariant)


def step_frontier(
    ha: HybridAutomaton, frontier: _Frontier, step: PathStep, index: int, target_invariant: bool = True
) -> Optional[_Frontier]:
    """Constraints of step `index` appended to the prefix; None if the finite part fails."""
    cur, nxt = index, index + 1
    added: List[LinearConstraint] = []
    if step.kind == TRAJECTORY:
        loc = ha.location(frontier.location)
        dwell = symbol(DELTA, cur)
        added.append(LinearConstraint.of({dwell: 1}, ">=", 0))
        for decl in ha.real_vars():
            lo, hi = loc.rate(decl.name)
            pre, post = symbol(decl.name, cur), symbol(decl.name, nxt)
            added.append(LinearConstraint.of({post: 1, pre: -1, dwell: -lo}, ">=", 0))
            added.append(LinearConstraint.of({post: 1, pre: -1, dwell: -hi}, "<=", 0))
        for when in (nxt, cur):
            parts = guard_at(ha, loc.invariant, frontier.ints, when)
            if parts is None:
                return None
            added.extend(parts)
        return _Frontier(frontier.location, frontier.ints, frontier.constraints + added)

    tr = ha.transitions[step.transition]
    for guard in (ha.location(tr.source).invariant, tr.guard):
        parts = guard_at(ha, guard, frontier.ints, cur)
        if parts is None:
            return None
        added.extend(parts)
    ints = dict(frontier.ints)
    for decl in ha.vars:
        action = tr.update.action_for(decl.name)
        post = symbol(decl.name, nxt)
        if not decl.is_real:
            if isinstance(action, AssignConst):
                ints[decl.name] = int(action.value)
            elif isinstance(action, AssignVar):
                ints[decl.name] = frontier.ints[action.name]
            continue
        if isinstance(action, AssignConst):
            added.append(_eq({post: 1}, action.value))
        elif isinstance(action, AssignInterval):
            added.append(LinearConstraint.of({post: 1}, ">=", action.lo))
            added.append(LinearConstraint.of({post: 1}, "<=", action.hi))
        elif isinstance(action, AssignVar):
            added.append(_eq({post: 1, symbol(action.name, cur): -1}, 0))
        else:
            added.append(_eq({post: 1, symbol(decl.name, cur): -1}, 0))
    if target_invariant:
        parts = guard_at(ha, ha.location(tr.target).invariant, ints, nxt)
        if parts is None:
            return None
        added.extend(parts)
    return _Frontier(tr.target, ints, frontier.constraints + added)


def bad_constraints(
    ha: HybridAutomaton, entry: BadEntry, frontier: _Frontier, index: int
) -> Optional[List[LinearConstraint]]:
    if frontier.location not in entry.locations:
        return None
    return guard_at(ha, entry.guard, frontier.ints, index)


def path_to_system(
    ha: HybridAutomaton,
    path: SymbolicPath,
    bad_entry: Optional[BadEntry] = None,
    ints: Optional[Mapping[str, int]] = None,
) -> LinearSystem:
    """
    Constraints of `path` over x_i and delta_i, plus `bad_entry` at the last frame.
    `ints` is the initial finite valuation (the first one allowed by init when omitted).
    A finite condition that fails along the path yields the unsatisfiable system {0 < 0}.
    """
    if ints is None:
        candidates = initial_int_valuations(ha)
        if not candidates:
            return LinearSystem.of([_FALSE_ROW])
        ints = candidates[0]
    frontier = initial_frontier(ha, ints)
    for index, step in enumerate(path.steps):
        if frontier is None:
            break
        frontier = step_frontier(ha, frontier, step, index)
    if frontier is None:
        return LinearSystem.of([_FALSE_ROW])
    constraints = list(frontier.constraints)
    if bad_entry is not None:
        extra = bad_constraints(ha, bad_entry, frontier, len(path))
        if extra is None:
            return LinearSystem.of([_FALSE_ROW])
        constraints.extend(extra)
    return LinearSystem.of(constraints)


@dataclass(frozen=True)
class OracleVerdict:
    status: str
    path: Optional[SymbolicPath] = None
    witness: Optional[Trace] = None
    visited: int = 0


def witness_trace(
    ha: HybridAutomaton, path: SymbolicPath, ints: Mapping[str, int], point: Mapping[str, Fraction]
) -> Trace:
    """Concrete execution from a sample point of the path system."""
    locations = path.locations(ha)
    valuations = []
    current_ints = dict(ints)
    for index in range(len(path) + 1):
        valuation = {decl.name: point.get(symbol(decl.name, index), Fraction(0)) for decl in ha.real_vars()}
        valuation.update((name, Fraction(value)) for name, value in current_ints.items())
        valuations.append(valuation)
        if index < len(path) and path.steps[index].kind == DISCRETE:
            tr = ha.transitions[path.steps[index].transition]
            updated = dict(current_ints)
            for name in current_ints:
                action = tr.update.action_for(name)
                if isinstance(action, AssignConst):
                    updated[name] = int(action.value)
                elif isinstance(action, AssignVar):
                    updated[name] = current_ints[action.name]
            current_ints = updated
    states = [State(loc, val) for loc, val in zip(locations, valuations)]
    steps = []
    for index, step in enumerate(path.steps):
        pre, post = states[index], states[index + 1]
        if step.kind == DISCRETE:
            steps.append(TraceStep(DISCRETE, pre, post, transition=step.transition))
        else:
            dwell = point.get(symbol(DELTA, index), Fraction(0))
            kind = STUTTER if dwell == 0 and pre == post else TRAJECTORY
            steps.append(TraceStep(kind, pre, post, dwell=dwell))
    return Trace(states[0], tuple(steps), (ORACLE, len(path)))


def oracle_check(ha: HybridAutomaton, k: int, budget: int = DEFAULT_BUDGET) -> OracleVerdict:
    """
    SAT iff some path of length <= k has a feasible system ending in a bad entry.
    Depth-first with prefix pruning; `budget` bounds the number of visited prefixes
    and exceeding it yields ORACLE-REFUSED.
    """
    visited = 0
    for ints in initial_int_valuations(ha):
        root = initial_frontier(ha, ints)
        if root is None:
            continue
        stack = [(SymbolicPath(), root)]
        while stack:
            path, frontier = stack.pop()
            visited += 1
            if visited > budget:
                logger.warning("oracle refused: more than %d prefixes", budget)
                return OracleVerdict(REFUSED, visited=visited - 1)
            system = LinearSystem.of(frontier.constraints)
            if not fm_feasible(system):
                continue
            for entry in ha.bad:
                extra = bad_constraints(ha, entry, frontier, len(path))
                if extra is None:
                    continue
                point = fm_solve(LinearSystem.of(frontier.constraints + extra))
                if point is not None:
                    logger.info("oracle found a %d-step witness after %d prefixes", len(path), visited)
                    return OracleVerdict(SAT, path, witness_trace(ha, path, ints, point), visited)
            if len(path) == k:
                continue
            children = []
            for step in successors(ha, frontier.location):
                child = step_frontier(ha, frontier, step, len(path))
                if child is not None:
                    children.append((path.extend(step), child))
            stack.extend(reversed(children))
    logger.info("oracle: no witness up to k=%d (%d prefixes)", k, visited)
    return OracleVerdict(UNSAT, visited=visited)


def count_paths(ha: HybridAutomaton, k: int) -> int:
    """Number of chaining-consistent paths of length <= k, by recursion on locations."""
    memo: Dict[Tuple[str, int], int] = {}

    def count(location: str, remaining: int) -> int:
        key = (location, remaining)
        if key not in memo:
            total = 1
            if remaining:
                total += count(location, remaining - 1)
                for tr in ha.transitions:
                    if tr.source == location:
                        total += count(tr.target, remaining - 1)
            memo[key] = total
        return memo[key]

    return count(ha.init_location, k)

