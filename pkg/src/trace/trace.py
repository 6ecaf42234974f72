"""
Executions of a hybrid automaton, decoded from solver models or built by the
oracle, with a plain-text printer and a JSON-friendly dump.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from src.automata.automaton import (
    AssignConst,
    AssignInterval,
    AssignVar,
    HybridAutomaton,
    Transition,
)
from src.automata.model_io import format_rational
from src.encoding.bmc import DELTA, LOC, PER_STEP, SHARED, symbol
from src.errors import TraceDecodeError

logger = logging.getLogger(__name__)

DISCRETE = "discrete"
TRAJECTORY = "trajectory"
STUTTER = "stutter"


@dataclass(frozen=True)
class State:
    location: str
    valuation: Dict[str, Fraction] = field(hash=False)

    def describe(self) -> str:
        values = ", ".join(f"{name}={format_rational(value)}" for name, value in sorted(self.valuation.items()))
        return f"{self.location} {{{values}}}"


@dataclass(frozen=True)
class TraceStep:
    kind: str
    pre: State
    post: State
    transition: Optional[int] = None
    dwell: Optional[Fraction] = None

    def label(self) -> str:
        if self.kind == DISCRETE:
            return f"discrete[{self.transition}]"
        return f"{self.kind}[{format_rational(self.dwell)}]"


@dataclass(frozen=True)
class Trace:
    initial: State
    steps: Tuple[TraceStep, ...] = ()
    origin: Tuple[str, int] = ("", 0)

    def states(self) -> List[State]:
        return [self.initial] + [step.post for step in self.steps]


def update_holds(tr: Transition, pre: Mapping[str, Fraction], post: Mapping[str, Fraction], names) -> bool:
    for name in names:
        action = tr.update.action_for(name)
        if isinstance(action, AssignConst):
            ok = post[name] == action.value
        elif isinstance(action, AssignInterval):
            ok = action.lo <= post[name] <= action.hi
        elif isinstance(action, AssignVar):
            ok = post[name] == pre[action.name]
        else:
            ok = post[name] == pre[name]
        if not ok:
            return False
    return True


def discrete_holds(ha: HybridAutomaton, tr: Transition, pre: State, post: State, check_target: bool = True) -> bool:
    """Whether `pre -> post` is an instance of transition `tr`."""
    if pre.location != tr.source or post.location != tr.target:
        return False
    if not ha.location(tr.source).invariant.holds(pre.valuation) or not tr.guard.holds(pre.valuation):
        return False
    if not update_holds(tr, pre.valuation, post.valuation, [decl.name for decl in ha.vars]):
        return False
    return not check_target or ha.location(tr.target).invariant.holds(post.valuation)


def _frame_state(assignment: Mapping[str, object], ha: HybridAutomaton, index: int) -> State:
    name = symbol(LOC, index)
    if name not in assignment:
        raise TraceDecodeError(f"model has no value for {name}")
    code = assignment[name]
    if code >= len(ha.locations):
        raise TraceDecodeError(f"{name} = {code} is not a location code (|Loc| = {len(ha.locations)})")
    valuation = {}
    for decl in ha.vars:
        sym = symbol(decl.name, index)
        if sym not in assignment:
            raise TraceDecodeError(f"model has no value for {sym}")
        value = assignment[sym]
        valuation[decl.name] = Fraction(value) if decl.is_real else Fraction(value + decl.lo)
    return State(ha.locations[code].name, valuation)


def decode_trace(
    assignment: Mapping[str, object],
    ha: HybridAutomaton,
    k: int,
    encoding_kind: str,
    delta_mode: str = PER_STEP,
    include_target_invariant: bool = True,
) -> Trace:
    """
    Rebuild the execution from the outer frame symbols loc_i, x_i, delta_i.
    A step is Discrete when some transition (first in declaration order)
    relates the two states, else a Trajectory with the frame's dwell.
    """
    states = [_frame_state(assignment, ha, i) for i in range(k + 1)]
    steps = []
    for i in range(k):
        pre, post = states[i], states[i + 1]
        chosen = None
        for index, tr in enumerate(ha.transitions):
            if discrete_holds(ha, tr, pre, post, include_target_invariant):
                chosen = index
                break
        if chosen is not None:
            steps.append(TraceStep(DISCRETE, pre, post, transition=chosen))
            continue
        dwell_name = DELTA if delta_mode == SHARED else symbol(DELTA, i)
        if dwell_name in assignment:
            dwell = Fraction(assignment[dwell_name])
        elif pre.valuation == post.valuation and pre.location == post.location:
            dwell = Fraction(0)
        else:
            raise TraceDecodeError(f"model has no value for {dwell_name}")
        kind = STUTTER if dwell == 0 and pre == post else TRAJECTORY
        steps.append(TraceStep(kind, pre, post, dwell=dwell))
    logger.debug("decoded %d-step trace from %s model", k, encoding_kind)
    return Trace(states[0], tuple(steps), (encoding_kind, k))


def bad_state_index(ha: HybridAutomaton, trace: Trace) -> Optional[int]:
    for index, state in enumerate(trace.states()):
        if ha.in_bad(state.location, state.valuation):
            return index
    return None


def format_trace(ha: HybridAutomaton, trace: Trace) -> str:
    """One line per step: `i: <loc> {var=val,...} --kind[d]--> <loc'> {...}`."""
    if not trace.steps:
        return f"0: {trace.initial.describe()}"
    lines = []
    for index, step in enumerate(trace.steps):
        label = step.label()
        if step.kind == DISCRETE:
            label = f"{label} {ha.transitions[step.transition].describe()}"
        lines.append(f"{index}: {step.pre.describe()} --{label}--> {step.post.describe()}")
    return "\n".join(lines)


def _state_to_dict(state: State) -> dict:
    return {
        "location": state.location,
        "valuation": {name: format_rational(value) for name, value in sorted(state.valuation.items())},
    }


def _state_from_dict(data: Mapping) -> State:
    return State(data["location"], {name: Fraction(value) for name, value in data["valuation"].items()})


def trace_to_dict(trace: Trace) -> dict:
    return {
        "origin": {"encoding": trace.origin[0], "k": trace.origin[1]},
        "initial": _state_to_dict(trace.initial),
        "steps": [
            {
                "kind": step.kind,
                "transition": step.transition,
                "dwell": None if step.dwell is None else format_rational(step.dwell),
                "post": _state_to_dict(step.post),
            }
            for step in trace.steps
        ],
    }


def trace_from_dict(data: Mapping) -> Trace:
    """Inverse of `trace_to_dict`; pre-states are taken from the previous post-state."""
    try:
        initial = _state_from_dict(data["initial"])
        steps = []
        pre = initial
        for entry in data.get("steps", []):
            post = _state_from_dict(entry["post"])
            dwell = entry.get("dwell")
            steps.append(
                TraceStep(entry["kind"], pre, post, entry.get("transition"), None if dwell is None else Fraction(dwell))
            )
            pre = post
        origin = data.get("origin", {})
        return Trace(initial, tuple(steps), (origin.get("encoding", ""), origin.get("k", len(steps))))
    except (KeyError, TypeError, ValueError) as e:
        raise TraceDecodeError(f"malformed trace document: {e}") from e
