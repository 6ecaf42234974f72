"""
Independent re-check of a trace against the automaton semantics, in exact
arithmetic. Never raises on an invalid trace; every violation is reported.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

from src.automata.automaton import HybridAutomaton
from src.trace.trace import DISCRETE, STUTTER, TRAJECTORY, State, Trace, TraceStep, update_holds


@dataclass
class TraceValidation:
    violations: List[Tuple[Optional[int], str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, step: Optional[int], message: str) -> None:
        self.violations.append((step, message))

    def describe(self) -> str:
        return "\n".join(
            f"{'init' if step is None else f'step {step}'}: {message}" for step, message in self.violations
        )


def _check_state(ha: HybridAutomaton, state: State, where: Optional[int], result: TraceValidation) -> bool:
    if state.location not in ha.location_names():
        result.add(where, f"unknown location {state.location!r}")
        return False
    missing = [decl.name for decl in ha.vars if decl.name not in state.valuation]
    if missing:
        result.add(where, f"valuation misses {', '.join(missing)}")
        return False
    for decl in ha.int_vars():
        value = state.valuation[decl.name]
        if value.denominator != 1 or not decl.lo <= value <= decl.hi:
            result.add(where, f"{decl.name}={value} outside {decl.lo}..{decl.hi}")
    return True


def _check_invariant(ha: HybridAutomaton, state: State, index: int, which: str, result: TraceValidation) -> None:
    if not ha.location(state.location).invariant.holds(state.valuation):
        result.add(index, f"invariant of {state.location} violated at {which}")


def _check_discrete(
    ha: HybridAutomaton, index: int, step: TraceStep, target_invariant: bool, result: TraceValidation
) -> None:
    if step.transition is None or not 0 <= step.transition < len(ha.transitions):
        result.add(index, f"no transition with index {step.transition}")
        return
    tr = ha.transitions[step.transition]
    if step.pre.location != tr.source or step.post.location != tr.target:
        result.add(
            index,
            f"transition {tr.describe()} goes {tr.source} -> {tr.target}, step goes "
            f"{step.pre.location} -> {step.post.location}",
        )
        return
    _check_invariant(ha, step.pre, index, "pre-state", result)
    if not tr.guard.holds(step.pre.valuation):
        result.add(index, f"guard of {tr.describe()} does not hold")
    if not update_holds(tr, step.pre.valuation, step.post.valuation, [decl.name for decl in ha.vars]):
        result.add(index, f"update of {tr.describe()} not respected")
    if target_invariant:
        _check_invariant(ha, step.post, index, "post-state", result)


def _midpoint(pre: State, post: State) -> State:
    return State(pre.location, {name: (value + post.valuation[name]) / 2 for name, value in pre.valuation.items()})


def _check_trajectory(ha: HybridAutomaton, index: int, step: TraceStep, strict: bool, result: TraceValidation) -> None:
    dwell = step.dwell
    if dwell is None or dwell < 0:
        result.add(index, f"dwell {dwell} is not a non-negative time")
        return
    if step.pre.location != step.post.location:
        result.add(index, f"trajectory changes location {step.pre.location} -> {step.post.location}")
        return
    if step.kind == STUTTER and (dwell != 0 or step.pre.valuation != step.post.valuation):
        result.add(index, "stutter step must have zero dwell and identical valuations")
    location = ha.location(step.pre.location)
    for decl in ha.vars:
        before, after = step.pre.valuation[decl.name], step.post.valuation[decl.name]
        if not decl.is_real:
            if before != after:
                result.add(index, f"finite variable {decl.name} changed during time elapse")
            continue
        lo, hi = location.rate(decl.name)
        if not before + lo * dwell <= after <= before + hi * dwell:
            result.add(index, f"{decl.name} moved from {before} to {after} outside rate [{lo}, {hi}] over {dwell}")
    _check_invariant(ha, step.pre, index, "pre-state", result)
    _check_invariant(ha, step.post, index, "post-state", result)
    if strict and dwell > 0:
        _check_invariant(ha, _midpoint(step.pre, step.post), index, "midpoint", result)


def validate_trace(
    ha: HybridAutomaton, trace: Trace, strict: bool = False, target_invariant: bool = True
) -> TraceValidation:
    """
    Check init membership, chaining, and each step against its kind.
    With `strict`, trajectories are additionally densified by one midpoint state.
    Without `target_invariant`, a discrete post-state need not satisfy its invariant,
    matching scripts encoded with that requirement switched off.
    """
    result = TraceValidation()
    if not _check_state(ha, trace.initial, None, result):
        return result
    if trace.initial.location != ha.init_location:
        result.add(None, f"initial location {trace.initial.location} is not {ha.init_location}")
    if not ha.init_guard.holds(trace.initial.valuation):
        result.add(None, "initial valuation violates the init constraint")
    if not ha.location(trace.initial.location).invariant.holds(trace.initial.valuation):
        result.add(None, f"initial valuation violates the invariant of {trace.initial.location}")

    previous = trace.initial
    for index, step in enumerate(trace.steps):
        if step.pre != previous:
            result.add(index, "pre-state does not match the previous post-state")
        if not _check_state(ha, step.pre, index, result) or not _check_state(ha, step.post, index, result):
            previous = step.post
            continue
        if step.kind == DISCRETE:
            _check_discrete(ha, index, step, target_invariant, result)
        elif step.kind in (TRAJECTORY, STUTTER):
            _check_trajectory(ha, index, step, strict, result)
        else:
            result.add(index, f"unknown step kind {step.kind!r}")
        previous = step.post
    return result


def dwell_total(trace: Trace) -> Fraction:
    return sum((step.dwell for step in trace.steps if step.dwell is not None), Fraction(0))
