"""
Asynchronous product of automaton networks sharing finite global variables.
"""

import itertools
import logging
from typing import Callable, Dict, List, Sequence, Tuple, Union

from src.automata.automaton import (
    BadEntry,
    Guard,
    HybridAutomaton,
    Location,
    ProductInfo,
    Transition,
    VarDecl,
)
from src.errors import CompositionError

logger = logging.getLogger(__name__)

LOCATION_SEPARATOR = "×"

CsMarker = Union[str, Callable[[str], bool]]


def _renaming(index: int, component: HybridAutomaton, global_names: Dict[str, VarDecl]) -> Dict[str, str]:
    mapping = {}
    for decl in component.vars:
        if decl.is_global or decl.name in global_names:
            if decl.name not in global_names:
                raise CompositionError(
                    f"component {component.name!r} uses global {decl.name!r} missing from the network globals"
                )
            mapping[decl.name] = decl.name
        else:
            mapping[decl.name] = f"{decl.name}_{index}"
    return mapping


def _flatten(component: HybridAutomaton) -> Tuple[Tuple[str, ...], Tuple[Tuple[str, ...], ...]]:
    """Component names and per-component location lists, expanding nested products."""
    if component.product is not None:
        return component.product.components, component.product.component_locations
    return (component.name,), (component.location_names(),)


def product_compose(
    network: Sequence[HybridAutomaton], globals_: Sequence[VarDecl] = (), init_guard: Guard = Guard()
) -> HybridAutomaton:
    """Interleaving product: one component moves per discrete step, the rest keep location and locals."""
    if not network:
        raise CompositionError("cannot compose an empty network")
    global_names = {decl.name: decl.renamed(decl.name) for decl in globals_}
    mappings = [_renaming(i, comp, global_names) for i, comp in enumerate(network, start=1)]

    for comp in network:
        for tr in comp.transitions:
            for var in tr.update.written():
                if var not in {d.name for d in comp.vars}:
                    raise CompositionError(f"component {comp.name!r} writes undeclared variable {var!r}")

    product_vars: List[VarDecl] = [
        VarDecl(decl.name, decl.kind, decl.lo, decl.hi, True) for decl in globals_
    ]
    seen = {decl.name for decl in product_vars}
    for comp, mapping in zip(network, mappings):
        for decl in comp.vars:
            new_name = mapping[decl.name]
            if new_name in global_names:
                continue
            if new_name in seen:
                raise CompositionError(f"variable name collision on {new_name!r} after renaming")
            seen.add(new_name)
            product_vars.append(decl.renamed(new_name))

    location_tuples = list(itertools.product(*(comp.locations for comp in network)))
    locations = []
    parts = []
    for combo in location_tuples:
        name = LOCATION_SEPARATOR.join(loc.name for loc in combo)
        invariant = Guard()
        flow = []
        for loc, mapping in zip(combo, mappings):
            invariant = invariant & loc.invariant.rename(mapping)
            flow.extend((mapping[var], lo, hi) for var, lo, hi in loc.flow)
        locations.append(Location(name, invariant, tuple(flow)))
        parts.append((name, tuple(loc.name for loc in combo)))

    outgoing: List[Dict[str, List[Transition]]] = []
    for comp in network:
        table: Dict[str, List[Transition]] = {}
        for tr in comp.transitions:
            table.setdefault(tr.source, []).append(tr)
        outgoing.append(table)

    transitions = []
    for combo in location_tuples:
        names = [loc.name for loc in combo]
        source = LOCATION_SEPARATOR.join(names)
        for index, (comp, mapping) in enumerate(zip(network, mappings)):
            for tr in outgoing[index].get(names[index], []):
                target_names = list(names)
                target_names[index] = tr.target
                transitions.append(
                    Transition(
                        source,
                        LOCATION_SEPARATOR.join(target_names),
                        tr.guard.rename(mapping),
                        tr.update.rename(mapping),
                        f"{comp.name}.{tr.label or f'{tr.source}->{tr.target}'}",
                    )
                )

    init_location = LOCATION_SEPARATOR.join(comp.init_location for comp in network)
    combined_init = Guard()
    for comp, mapping in zip(network, mappings):
        combined_init = combined_init & comp.init_guard.rename(mapping)
    combined_init = combined_init & init_guard

    bad = []
    for index, (comp, mapping) in enumerate(zip(network, mappings)):
        for entry in comp.bad:
            lifted = frozenset(
                name for name, combo in parts if combo[index] in entry.locations
            )
            bad.append(BadEntry(lifted, entry.guard.rename(mapping)))

    components: List[str] = []
    component_locations: List[Tuple[str, ...]] = []
    for comp in network:
        names, locs = _flatten(comp)
        components.extend(names)
        component_locations.extend(locs)
    flat_parts = tuple(
        (name, tuple(itertools.chain.from_iterable(
            comp.product.parts_of(part) if comp.product is not None else (part,)
            for comp, part in zip(network, combo)
        )))
        for name, combo in parts
    )

    product = HybridAutomaton(
        name=LOCATION_SEPARATOR.join(comp.name for comp in network),
        vars=tuple(product_vars),
        locations=tuple(locations),
        transitions=tuple(transitions),
        init_location=init_location,
        init_guard=combined_init,
        bad=tuple(bad),
        product=ProductInfo(tuple(components), tuple(component_locations), flat_parts),
    )
    logger.info(
        "composed %d components: %d locations, %d transitions",
        len(network),
        len(product.locations),
        len(product.transitions),
    )
    return product


def bad_mutex(ha: HybridAutomaton, cs_marker: CsMarker) -> List[BadEntry]:
    """Bad entries covering every product location with two or more components in a marked location."""
    if ha.product is None:
        raise CompositionError(f"{ha.name!r} is not a composed product")
    matches = cs_marker if callable(cs_marker) else (lambda name: name == cs_marker)
    for component, locs in zip(ha.product.components, ha.product.component_locations):
        if not any(matches(loc) for loc in locs):
            raise CompositionError(f"critical-section marker matches no location of {component!r}")
    covered = frozenset(
        name for name, combo in ha.product.parts if sum(1 for part in combo if matches(part)) >= 2
    )
    if not covered:
        return []
    return [BadEntry(covered, Guard())]
