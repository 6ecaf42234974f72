"""
Benchmark families: the two-location illustrative automaton, Fischer's protocol
and the Lynch-Shavit protocol, plus a seeded random corpus for agreement runs.
"""

import random
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from src.automata.automaton import (
    AssignConst,
    AssignInterval,
    BadEntry,
    Guard,
    HybridAutomaton,
    LinearConstraint,
    Location,
    Transition,
    UpdateMap,
    VarDecl,
    as_fraction,
    int_var,
    real_var,
    var_cmp,
)
from src.automata.model_io import (
    FORMAT_VERSION,
    MAIN_AUTOMATON,
    CheckSpec,
    ModelDocument,
    NetworkSpec,
    parse_model,
)
from src.errors import GeneratorParameterError

DEFAULT_KMAX = 8


def _check_interval(name: str, lo: Fraction, hi: Fraction) -> None:
    if lo > hi:
        raise GeneratorParameterError(f"{name}: lower rate {lo} exceeds upper rate {hi}")


def gen_example(a1=0, b1=1, a2=0, b2=2) -> ModelDocument:
    """Two locations, x in [a1,b1] then [a2,b2]; bad: loc2 with x < 2.5."""
    a1, b1, a2, b2 = (as_fraction(v) for v in (a1, b1, a2, b2))
    _check_interval("loc1", a1, b1)
    _check_interval("loc2", a2, b2)
    ha = HybridAutomaton(
        name=MAIN_AUTOMATON,
        vars=(real_var("x"),),
        locations=(
            Location("loc1", Guard.of(var_cmp("x", "<=", 5)), (("x", a1, b1),)),
            Location("loc2", Guard.of(var_cmp("x", "<=", 10)), (("x", a2, b2),)),
        ),
        transitions=(
            Transition("loc1", "loc2", Guard.of(var_cmp("x", ">=", Fraction(5, 2)))),
            Transition("loc2", "loc1", Guard.of(var_cmp("x", ">=", 10)), UpdateMap.of({"x": AssignConst(Fraction(0))})),
        ),
        init_location="loc1",
        init_guard=Guard.of(var_cmp("x", "=", 0)),
    )
    bad = BadEntry(frozenset({"loc2"}), Guard.of(var_cmp("x", "<", Fraction(5, 2))))
    return ModelDocument(FORMAT_VERSION, (ha,), None, CheckSpec((bad,), DEFAULT_KMAX))


def _check_network(n: int, delta1: Fraction, delta2: Fraction) -> None:
    if n < 1:
        raise GeneratorParameterError(f"process count must be positive, got {n}")
    if delta1 <= 0 or delta2 <= 0:
        raise GeneratorParameterError("timing constants must be positive")


def _not_equal(var: str, value: int) -> List[Guard]:
    return [Guard.of(var_cmp(var, "<", value)), Guard.of(var_cmp(var, ">", value))]


def fischer_process(i: int, n: int, delta1: Fraction, delta2: Fraction) -> HybridAutomaton:
    clock = ((("x", Fraction(1), Fraction(1)),))
    reset = {"x": AssignConst(Fraction(0))}
    locations = (
        Location("rem", Guard(), clock),
        Location("try", Guard.of(var_cmp("x", "<=", delta1)), clock),
        Location("wait", Guard(), clock),
        Location("cs", Guard(), clock),
    )
    waited = var_cmp("x", ">=", delta2)
    transitions = [
        Transition("rem", "try", Guard.of(var_cmp("g", "=", 0)), UpdateMap.of(reset), "enter"),
        Transition("try", "wait", Guard(), UpdateMap.of({"g": AssignConst(Fraction(i)), **reset}), "claim"),
    ]
    for half in _not_equal("g", i):
        transitions.append(Transition("wait", "rem", half & Guard.of(waited), UpdateMap.of(reset), "retry"))
    transitions.extend(
        [
            Transition("wait", "cs", Guard.of(var_cmp("g", "=", i), waited), UpdateMap.of(reset), "acquire"),
            Transition("cs", "rem", Guard(), UpdateMap.of({"g": AssignConst(Fraction(0))}), "release"),
        ]
    )
    return HybridAutomaton(
        name=f"proc{i}",
        vars=(real_var("x"), int_var("g", 0, n, is_global=True)),
        locations=locations,
        transitions=tuple(transitions),
        init_location="rem",
        init_guard=Guard.of(var_cmp("x", "=", 0)),
    )


def gen_fischer(n: int, delta1=5, delta2=70) -> ModelDocument:
    """N copies of Fischer's process sharing g in {0 (bottom), 1..N}; safe iff delta1 < delta2."""
    delta1, delta2 = as_fraction(delta1), as_fraction(delta2)
    _check_network(n, delta1, delta2)
    processes = tuple(fischer_process(i, n, delta1, delta2) for i in range(1, n + 1))
    network = NetworkSpec(
        tuple(p.name for p in processes),
        (int_var("g", 0, n, is_global=True),),
        Guard.of(var_cmp("g", "=", 0)),
        "cs",
    )
    return ModelDocument(FORMAT_VERSION, processes, network, CheckSpec((), DEFAULT_KMAX))


LYNCH_SHAVIT_LOCATIONS = ("rem", "try", "wait", "gate", "lock", "check", "cs", "release", "exit")


def lynch_shavit_globals(n: int) -> Tuple[VarDecl, ...]:
    return (
        int_var("g", 0, n, is_global=True),
        int_var("y", 0, 1, is_global=True),
        int_var("z", 0, 1, is_global=True),
    )


def lynch_shavit_process(i: int, n: int, delta1: Fraction, delta2: Fraction) -> HybridAutomaton:
    """
    Fischer's timed entry behind a lock flag y and an occupancy flag z, so that
    mutual exclusion holds whatever the timing constants:

        rem -g=0-> try -g:=i-> wait -x>=D2, g=i-> gate -y=0-> lock -y:=1-> check
        check -g=i, z=0, z:=1-> cs -> release -y:=0, z:=0-> exit -g:=0-> rem
    with retries back to rem from wait (g!=i), gate (y=1) and check (g!=i or z=1).
    """
    clock = ((("x", Fraction(1), Fraction(1)),))
    zero = AssignConst(Fraction(0))
    reset = {"x": AssignConst(Fraction(0))}
    invariants = {"try": Guard.of(var_cmp("x", "<=", delta1))}
    locations = tuple(Location(name, invariants.get(name, Guard()), clock) for name in LYNCH_SHAVIT_LOCATIONS)
    waited = var_cmp("x", ">=", delta2)
    transitions = [
        Transition("rem", "try", Guard.of(var_cmp("g", "=", 0)), UpdateMap.of(reset), "enter"),
        Transition("try", "wait", Guard(), UpdateMap.of({"g": AssignConst(Fraction(i)), **reset}), "claim"),
        Transition("wait", "gate", Guard.of(var_cmp("g", "=", i), waited), UpdateMap.of(reset), "confirm"),
    ]
    for half in _not_equal("g", i):
        transitions.append(Transition("wait", "rem", half & Guard.of(waited), UpdateMap.of(reset), "retry"))
    transitions.extend(
        [
            Transition("gate", "lock", Guard.of(var_cmp("y", "=", 0)), UpdateMap(), "free"),
            Transition("gate", "rem", Guard.of(var_cmp("y", "=", 1)), UpdateMap.of(reset), "busy"),
            Transition("lock", "check", Guard(), UpdateMap.of({"y": AssignConst(Fraction(1))}), "lock"),
            Transition(
                "check",
                "cs",
                Guard.of(var_cmp("g", "=", i), var_cmp("z", "=", 0)),
                UpdateMap.of({"z": AssignConst(Fraction(1))}),
                "acquire",
            ),
            Transition(
                "check", "rem", Guard.of(var_cmp("g", "=", i), var_cmp("z", "=", 1)), UpdateMap.of(reset), "occupied"
            ),
        ]
    )
    for half in _not_equal("g", i):
        transitions.append(Transition("check", "rem", half, UpdateMap.of(reset), "lost"))
    transitions.extend(
        [
            Transition("cs", "release", Guard(), UpdateMap(), "leave"),
            Transition("release", "exit", Guard(), UpdateMap.of({"y": zero, "z": zero}), "unlock"),
            Transition("exit", "rem", Guard(), UpdateMap.of({"g": AssignConst(Fraction(0))}), "release"),
        ]
    )
    return HybridAutomaton(
        name=f"proc{i}",
        vars=(real_var("x"), *lynch_shavit_globals(n)),
        locations=locations,
        transitions=tuple(transitions),
        init_location="rem",
        init_guard=Guard.of(var_cmp("x", "=", 0)),
    )


def gen_lynch_shavit(n: int, delta1=5, delta2=70) -> ModelDocument:
    """N processes with 9 locations each, sharing owner g, lock flag y and occupancy flag z."""
    delta1, delta2 = as_fraction(delta1), as_fraction(delta2)
    _check_network(n, delta1, delta2)
    processes = tuple(lynch_shavit_process(i, n, delta1, delta2) for i in range(1, n + 1))
    network = NetworkSpec(
        tuple(p.name for p in processes),
        lynch_shavit_globals(n),
        Guard.of(var_cmp("g", "=", 0), var_cmp("y", "=", 0), var_cmp("z", "=", 0)),
        "cs",
    )
    return ModelDocument(FORMAT_VERSION, processes, network, CheckSpec((), DEFAULT_KMAX))


def _random_rational(rng: random.Random, lo: int, hi: int) -> Fraction:
    return Fraction(rng.randint(lo * 2, hi * 2), 2)


def gen_random(
    seed: int, max_locations: int = 3, max_reals: int = 2, max_ints: int = 1, kmax: Optional[int] = None
) -> ModelDocument:
    """Small random rectangular automaton; the same seed always gives the same model."""
    rng = random.Random(seed)
    reals = [f"x{j}" for j in range(rng.randint(1, max_reals))]
    ints = [f"v{j}" for j in range(rng.randint(0, max_ints))]
    decls: List[VarDecl] = [real_var(name) for name in reals] + [int_var(name, 0, 2) for name in ints]
    names = [f"l{j}" for j in range(rng.randint(1, max_locations))]
    relations = ("<", "<=", ">=", ">")

    def real_atom(upper_only: bool = False) -> LinearConstraint:
        name = rng.choice(reals)
        relation = rng.choice(("<", "<=")) if upper_only else rng.choice(relations)
        return var_cmp(name, relation, _random_rational(rng, 0, 6))

    def int_atom() -> LinearConstraint:
        return var_cmp(rng.choice(ints), rng.choice(("=", "<=", ">=")), rng.randint(0, 2))

    locations = []
    for name in names:
        invariant = Guard.of(real_atom(upper_only=True)) if rng.random() < 0.6 else Guard()
        flow = []
        for var in reals:
            lo = _random_rational(rng, 0, 2)
            flow.append((var, lo, lo + _random_rational(rng, 0, 1)))
        locations.append(Location(name, invariant, tuple(flow)))

    transitions = []
    for _ in range(rng.randint(1, 2 * len(names))):
        conjuncts = [real_atom() for _ in range(rng.randint(0, 2))]
        if ints and rng.random() < 0.5:
            conjuncts.append(int_atom())
        actions = {}
        for var in reals:
            roll = rng.random()
            if roll < 0.3:
                actions[var] = AssignConst(_random_rational(rng, 0, 3))
            elif roll < 0.4:
                lo = _random_rational(rng, 0, 3)
                actions[var] = AssignInterval(lo, lo + _random_rational(rng, 0, 2))
        for var in ints:
            if rng.random() < 0.4:
                actions[var] = AssignConst(Fraction(rng.randint(0, 2)))
        transitions.append(
            Transition(rng.choice(names), rng.choice(names), Guard(tuple(conjuncts)), UpdateMap.of(actions))
        )

    init_guard = [var_cmp(var, "=", 0) for var in reals] + [var_cmp(var, "=", 0) for var in ints]
    ha = HybridAutomaton(
        name=MAIN_AUTOMATON,
        vars=tuple(decls),
        locations=tuple(locations),
        transitions=tuple(transitions),
        init_location=names[0],
        init_guard=Guard(tuple(init_guard)),
    )
    bad_guard = [real_atom()]
    if ints and rng.random() < 0.5:
        bad_guard.append(int_atom())
    bad = BadEntry(frozenset(rng.sample(names, rng.randint(1, len(names)))), Guard(tuple(bad_guard)))
    return ModelDocument(FORMAT_VERSION, (ha,), None, CheckSpec((bad,), kmax))


FAMILIES = {
    "example": gen_example,
    "fischer": gen_fischer,
    "lynch-shavit": gen_lynch_shavit,
    "random": gen_random,
}


def generate(family: str, params: Sequence[str]) -> ModelDocument:
    """Run a family generator on textual parameters: N (or the seed) first, then rationals."""
    if family not in FAMILIES:
        raise GeneratorParameterError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    try:
        if family == "example":
            return gen_example(*(as_fraction(p) for p in params))
        if family == "random":
            if len(params) != 1:
                raise GeneratorParameterError("random needs exactly one seed")
            return gen_random(int(params[0]))
        if not params:
            raise GeneratorParameterError(f"{family} needs the process count")
        n = int(params[0])
        return FAMILIES[family](n, *(as_fraction(p) for p in params[1:]))
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise GeneratorParameterError(f"bad parameters for {family}: {' '.join(params)} ({e})") from e


def resolve_model(ref: str, base_dir: Optional[str] = None) -> ModelDocument:
    """A model file path, or `family:p1:p2:...` such as `fischer:2:75:70`."""
    family, _, rest = ref.partition(":")
    if family in FAMILIES:
        return generate(family, [p for p in rest.split(":") if p])
    path = Path(base_dir, ref) if base_dir and not Path(ref).is_absolute() else Path(ref)
    with open(path, "r", encoding="utf-8") as file:
        return parse_model(file.read())
