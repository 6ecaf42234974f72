"""
Lowering of a (composed) rectangular hybrid automaton into bounded model
checking formulas.

Two encodings are produced:

* `encode_qf_bmc` unrolls the transition relation k times over frames V0..Vk.
* `encode_qbmc` keeps one copy of the transition relation over an inner frame
  pair and binds it to every step through a universally quantified selector.

Locations are coded as unsigned bit-vectors in declaration order. Finite
integer variables are stored as bit-vectors offset by their lower bound.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from src.automata.automaton import (
    AssignConst,
    AssignInterval,
    AssignVar,
    Guard,
    HybridAutomaton,
    LinearConstraint,
    VarDecl,
)
from src.encoding.formula import (
    FALSE,
    INIT,
    PROPERTY,
    RANGES,
    REAL,
    SELECTOR,
    TRANSITION,
    TRUE,
    BOOL,
    BVConst,
    BvCmp,
    Eq,
    Formula,
    Implies,
    Labeled,
    Not,
    Quantifier,
    Script,
    Var,
    bitvec,
    check_sorts,
    conj,
    disj,
    linear,
    width_for,
)
from src.errors import EncodingError

logger = logging.getLogger(__name__)

PER_STEP = "per_step"
SHARED = "shared"
DELTA_MODES = (PER_STEP, SHARED)

BINARY = "binary_equality"
CUBES = "merged_cubes"
SELECTOR_MODES = (BINARY, CUBES)

QF = "qf"
QUANTIFIED = "quantified"

LOC = "loc"
DELTA = "delta"
INNER_DWELL = "d"
SELECTOR_NAME = "sel"
CUR = "cur"
NXT = "nxt"


@dataclass(frozen=True)
class EncodingOptions:
    delta_mode: str = PER_STEP
    selector_mode: str = BINARY
    include_target_invariant_on_discrete: bool = True
    out_of_range_guard: bool = True

    def __post_init__(self):
        if self.delta_mode not in DELTA_MODES:
            raise EncodingError(f"unknown delta mode {self.delta_mode!r}")
        if self.selector_mode not in SELECTOR_MODES:
            raise EncodingError(f"unknown selector mode {self.selector_mode!r}")


def symbol(base: str, suffix) -> str:
    return f"{base}_{suffix}"


def loc_sort(ha: HybridAutomaton):
    return bitvec(width_for(len(ha.locations)))


def var_sort(decl: VarDecl):
    if decl.is_real:
        return REAL
    return bitvec(width_for(decl.hi - decl.lo + 1))


@dataclass(frozen=True)
class StepFrame:
    """Symbols of one state copy: location code plus one symbol per variable."""

    index: object
    loc: Var
    vars: Tuple[Tuple[str, Var], ...]

    def var(self, name: str) -> Var:
        for var_name, sym in self.vars:
            if var_name == name:
                return sym
        raise KeyError(name)

    def symbols(self) -> List[Var]:
        return [self.loc] + [sym for _, sym in self.vars]


def make_frame(ha: HybridAutomaton, suffix) -> StepFrame:
    return StepFrame(
        suffix,
        Var(symbol(LOC, suffix), loc_sort(ha)),
        tuple((decl.name, Var(symbol(decl.name, suffix), var_sort(decl))) for decl in ha.vars),
    )


def loc_is(ha: HybridAutomaton, frame: StepFrame, name: str) -> Formula:
    return Eq(frame.loc, BVConst(ha.code(name), frame.loc.sort.width))


def _int_atom(sym: Var, decl: VarDecl, relation: str, bound: Fraction) -> Formula:
    """`decl <relation> bound` on the offset bit-vector, folded when the bound leaves the code range."""
    offset = int(bound) - decl.lo
    top = 2 ** sym.sort.width - 1
    width = sym.sort.width
    if relation == "=":
        return Eq(sym, BVConst(offset, width)) if 0 <= offset <= top else FALSE
    if relation == "<":
        if offset <= 0:
            return FALSE
        return TRUE if offset > top else BvCmp("bvult", sym, BVConst(offset, width))
    if relation == "<=":
        if offset < 0:
            return FALSE
        return TRUE if offset >= top else BvCmp("bvule", sym, BVConst(offset, width))
    if relation == ">":
        if offset < 0:
            return TRUE
        return FALSE if offset >= top else BvCmp("bvugt", sym, BVConst(offset, width))
    if offset <= 0:
        return TRUE
    return FALSE if offset > top else BvCmp("bvuge", sym, BVConst(offset, width))


def encode_constraint(ha: HybridAutomaton, constraint: LinearConstraint, frame: StepFrame) -> Formula:
    names = constraint.variables()
    if len(names) == 1:
        decl = ha.var(names[0])
        if not decl.is_real:
            return _int_atom(frame.var(decl.name), decl, constraint.relation, constraint.bound)
    terms: Dict[Var, Fraction] = {}
    for name, coef in constraint.terms:
        terms[frame.var(name)] = coef
    return linear(terms, constraint.relation, constraint.bound)


def encode_guard(ha: HybridAutomaton, guard: Guard, frame: StepFrame) -> Formula:
    return conj(encode_constraint(ha, c, frame) for c in guard.conjuncts)


def frame_ranges(ha: HybridAutomaton, frame: StepFrame) -> Formula:
    """Range constraints for codes that do not fill their bit-vector."""
    atoms = []
    count = len(ha.locations)
    if count != 2 ** frame.loc.sort.width:
        atoms.append(BvCmp("bvult", frame.loc, BVConst(count, frame.loc.sort.width)))
    for decl in ha.int_vars():
        sym = frame.var(decl.name)
        top = decl.hi - decl.lo
        if top != 2 ** sym.sort.width - 1:
            atoms.append(BvCmp("bvule", sym, BVConst(top, sym.sort.width)))
    return Labeled(RANGES, conj(atoms)) if atoms else TRUE


def frames_equal(left: StepFrame, right: StepFrame) -> Formula:
    return conj([Eq(left.loc, right.loc)] + [Eq(a, right.var(name)) for name, a in left.vars])


def encode_init(ha: HybridAutomaton, frame0: StepFrame) -> Formula:
    """loc0 = code(init) and the init guard and the init location's invariant, over frame0."""
    init = ha.location(ha.init_location)
    return Labeled(
        INIT,
        conj(
            [
                loc_is(ha, frame0, ha.init_location),
                encode_guard(ha, ha.init_guard, frame0),
                encode_guard(ha, init.invariant, frame0),
            ]
        ),
    )


def _encode_update(ha: HybridAutomaton, decl: VarDecl, action, cur: StepFrame, nxt: StepFrame) -> Formula:
    post = nxt.var(decl.name)
    if isinstance(action, AssignConst):
        if decl.is_real:
            return linear({post: 1}, "=", action.value)
        return _int_atom(post, decl, "=", action.value)
    if isinstance(action, AssignInterval):
        return conj([linear({post: 1}, ">=", action.lo), linear({post: 1}, "<=", action.hi)])
    if isinstance(action, AssignVar):
        source = cur.var(action.name)
        if decl.is_real:
            return linear({post: 1, source: -1}, "=", 0)
        return Eq(post, source)
    pre = cur.var(decl.name)
    if decl.is_real:
        return linear({post: 1, pre: -1}, "=", 0)
    return Eq(post, pre)


def encode_discrete(
    ha: HybridAutomaton, cur: StepFrame, nxt: StepFrame, opts: EncodingOptions = EncodingOptions()
) -> Formula:
    """Disjunction over transitions; `false` when the automaton has none."""
    disjuncts = []
    for tr in ha.transitions:
        parts = [
            loc_is(ha, cur, tr.source),
            loc_is(ha, nxt, tr.target),
            encode_guard(ha, ha.location(tr.source).invariant, cur),
            encode_guard(ha, tr.guard, cur),
        ]
        parts.extend(_encode_update(ha, decl, tr.update.action_for(decl.name), cur, nxt) for decl in ha.vars)
        if opts.include_target_invariant_on_discrete:
            parts.append(encode_guard(ha, ha.location(tr.target).invariant, nxt))
        disjuncts.append(conj(parts))
    return disj(disjuncts)


def encode_trajectory(ha: HybridAutomaton, cur: StepFrame, nxt: StepFrame, dwell: Var) -> Formula:
    """dwell >= 0 and, per location, rate bounds on each real plus the invariant at both endpoints."""
    disjuncts = []
    for loc in ha.locations:
        parts = [loc_is(ha, cur, loc.name), Eq(nxt.loc, cur.loc)]
        for decl in ha.vars:
            pre, post = cur.var(decl.name), nxt.var(decl.name)
            if not decl.is_real:
                parts.append(Eq(post, pre))
                continue
            lo, hi = loc.rate(decl.name)
            parts.append(linear({post: 1, pre: -1, dwell: -lo}, ">=", 0))
            parts.append(linear({post: 1, pre: -1, dwell: -hi}, "<=", 0))
        parts.append(encode_guard(ha, loc.invariant, nxt))
        parts.append(encode_guard(ha, loc.invariant, cur))
        disjuncts.append(conj(parts))
    return conj([linear({dwell: 1}, ">=", 0), disj(disjuncts)])


def encode_step(
    ha: HybridAutomaton, cur: StepFrame, nxt: StepFrame, dwell: Var, opts: EncodingOptions
) -> Formula:
    """One instantiation of the transition-relation template."""
    return Labeled(TRANSITION, disj([encode_discrete(ha, cur, nxt, opts), encode_trajectory(ha, cur, nxt, dwell)]))


def encode_bad(ha: HybridAutomaton, frame: StepFrame) -> Formula:
    disjuncts = []
    for entry in ha.bad:
        where = disj(loc_is(ha, frame, name) for name in ha.location_names() if name in entry.locations)
        disjuncts.append(conj([where, encode_guard(ha, entry.guard, frame)]))
    return disj(disjuncts)


def encode_property(ha: HybridAutomaton, frames: Sequence[StepFrame]) -> Formula:
    return Labeled(PROPERTY, disj(encode_bad(ha, frame) for frame in frames))


def _check_reserved(ha: HybridAutomaton, extra: Sequence[str] = ()) -> None:
    reserved = {LOC, DELTA, INNER_DWELL, SELECTOR_NAME, *extra}
    for decl in ha.vars:
        if decl.name in reserved:
            raise EncodingError(f"variable name {decl.name!r} is reserved by the encoder")


def _declare(symbols: List[Var]) -> Tuple[Tuple[str, object], ...]:
    seen: Dict[str, object] = {}
    for sym in symbols:
        if sym.name in seen:
            raise EncodingError(f"symbol {sym.name!r} generated twice; rename the variable")
        seen[sym.name] = sym.sort
    return tuple(seen.items())


def encode_qf_bmc(ha: HybridAutomaton, k: int, opts: EncodingOptions = EncodingOptions()) -> Script:
    """I(V0) and k unrolled steps, each with its own dwell, and a bad state at some frame."""
    if k < 0:
        raise EncodingError(f"bound must be non-negative, got {k}")
    _check_reserved(ha)
    frames = [make_frame(ha, i) for i in range(k + 1)]
    dwells = [Var(symbol(DELTA, i), REAL) for i in range(k)]
    symbols = [sym for frame in frames for sym in frame.symbols()] + dwells

    assertions: List[Formula] = [frame_ranges(ha, frame) for frame in frames]
    assertions.append(encode_init(ha, frames[0]))
    for i in range(k):
        assertions.append(encode_step(ha, frames[i], frames[i + 1], dwells[i], opts))
    assertions.append(encode_property(ha, frames))

    script = Script(
        _declare(symbols),
        tuple(a for a in assertions if a != TRUE),
        meta={"encoding": QF, "k": k, "delta_mode": PER_STEP},
    )
    check_sorts(script)
    logger.debug("qf encoding k=%d: %d symbols, %d assertions", k, len(script.symbols), len(script.assertions))
    return script


@dataclass(frozen=True)
class SelectorVector:
    """Either one bit-vector `sel` or Bool bits t1..tw, most significant first."""

    width: int
    mode: str

    @staticmethod
    def for_bound(k: int, mode: str) -> "SelectorVector":
        return SelectorVector(width_for(k), mode)

    def variables(self) -> Tuple[Var, ...]:
        if self.mode == BINARY:
            return (Var(SELECTOR_NAME, bitvec(self.width)),)
        return tuple(Var(f"t{j}", BOOL) for j in range(1, self.width + 1))


def _cube_bits(i: int, lo: int, hi: int) -> List[bool]:
    """Bit path to index i when [lo, hi) is halved recursively, lower half floor-sized and on `false`."""
    path = []
    while hi - lo > 1:
        mid = lo + (hi - lo) // 2
        if i < mid:
            path.append(False)
            hi = mid
        else:
            path.append(True)
            lo = mid
    return path


def selector_cube(i: int, k: int, sel: SelectorVector, mode: Optional[str] = None) -> Formula:
    mode = mode or sel.mode
    if not 0 <= i < k:
        raise EncodingError(f"step {i} outside 0..{k - 1}")
    if mode == BINARY:
        (var,) = SelectorVector(sel.width, BINARY).variables()
        return Eq(var, BVConst(i, sel.width))
    bits = SelectorVector(sel.width, CUBES).variables()
    path = _cube_bits(i, 0, k)
    return conj(bit if value else Not(bit) for bit, value in zip(bits, path))


def selector_guard(k: int, sel: SelectorVector, opts: EncodingOptions) -> Formula:
    """`sel < k` for binary selectors whose width overshoots k; the cube cover needs none."""
    if sel.mode == BINARY and opts.out_of_range_guard and 2**sel.width != k:
        (var,) = sel.variables()
        return BvCmp("bvult", var, BVConst(k, sel.width))
    return TRUE


def encode_qbmc(ha: HybridAutomaton, k: int, opts: EncodingOptions = EncodingOptions()) -> Script:
    """
    Outer frames V0..Vk (and dwells) are free symbols; one quantified assertion

        forall sel. exists V, V', d. guard(sel) -> I(V0) and T(V, V', d)
                                    and AND_i (cube_i(sel) -> V = Vi and V' = Vi+1 and d = delta_i)

    followed by the bad-state disjunction over all outer frames.
    """
    if k < 1:
        raise EncodingError("quantified encoding needs k >= 1; use the quantifier-free encoding for k = 0")
    sel = SelectorVector.for_bound(k, opts.selector_mode)
    _check_reserved(ha, [var.name for var in sel.variables()])
    frames = [make_frame(ha, i) for i in range(k + 1)]
    cur, nxt = make_frame(ha, CUR), make_frame(ha, NXT)

    if opts.delta_mode == SHARED:
        outer_dwells = [Var(DELTA, REAL)]
        inner_dwell = outer_dwells[0]
        inner_bound = cur.symbols() + nxt.symbols()
    else:
        outer_dwells = [Var(symbol(DELTA, i), REAL) for i in range(k)]
        inner_dwell = Var(INNER_DWELL, REAL)
        inner_bound = cur.symbols() + nxt.symbols() + [inner_dwell]

    bindings = []
    for i in range(k):
        equalities = [frames_equal(cur, frames[i]), frames_equal(nxt, frames[i + 1])]
        if opts.delta_mode == PER_STEP:
            equalities.append(Eq(inner_dwell, outer_dwells[i]))
        bindings.append(Labeled(SELECTOR, Implies(selector_cube(i, k, sel), conj(equalities))))

    body = conj(
        [
            frame_ranges(ha, cur),
            frame_ranges(ha, nxt),
            encode_init(ha, frames[0]),
            encode_step(ha, cur, nxt, inner_dwell, opts),
            *bindings,
        ]
    )
    guard = selector_guard(k, sel, opts)
    if guard != TRUE:
        body = Implies(Labeled(SELECTOR, guard), body)
    quantified = Quantifier("forall", sel.variables(), Quantifier("exists", tuple(inner_bound), body))

    symbols = [sym for frame in frames for sym in frame.symbols()] + outer_dwells
    _declare(symbols + list(sel.variables()) + inner_bound)
    assertions: List[Formula] = [frame_ranges(ha, frame) for frame in frames]
    assertions.append(quantified)
    assertions.append(encode_property(ha, frames))
    script = Script(
        _declare(symbols),
        tuple(a for a in assertions if a != TRUE),
        meta={
            "encoding": QUANTIFIED,
            "k": k,
            "delta_mode": opts.delta_mode,
            "selector_mode": opts.selector_mode,
        },
    )
    check_sorts(script)
    logger.debug("quantified encoding k=%d: selector width %d, %d symbols", k, sel.width, len(script.symbols))
    return script


def encode(ha: HybridAutomaton, k: int, encoding: str, opts: EncodingOptions = EncodingOptions()) -> Script:
    """Dispatch on the encoding name; the quantified encoding at k = 0 falls back to the unrolled one."""
    if encoding == QF or (encoding == QUANTIFIED and k == 0):
        return encode_qf_bmc(ha, k, opts)
    if encoding == QUANTIFIED:
        return encode_qbmc(ha, k, opts)
    raise EncodingError(f"unknown encoding {encoding!r}")
