import itertools
import random
from fractions import Fraction

import pytest

from src.automata.automaton import LinearConstraint
from src.oracle.fm import LinearSystem, fm_feasible, fm_solve

F = Fraction
BOX = 10**6
RELAXED = {"<": "<=", ">": ">=", "<=": "<=", ">=": ">=", "=": "="}


def system(*rows):
    return LinearSystem.of([LinearConstraint.of(terms, rel, bound) for terms, rel, bound in rows])


def test_contradictory_strict_bounds():
    assert not fm_feasible(system(({"x": 1}, ">", 0), ({"x": 1}, "<", 0)))
    assert fm_solve(system(({"x": 1}, ">", 0), ({"x": 1}, "<", 0))) is None


def test_closed_interval_is_feasible():
    s = system(({"x": 1}, ">=", F(5, 2)), ({"x": 1}, "<=", 5))
    assert fm_feasible(s)
    point = fm_solve(s)
    assert s.holds(point)


def test_touching_bounds():
    assert fm_feasible(system(({"x": 1}, ">=", 3), ({"x": 1}, "<=", 3)))
    assert not fm_feasible(system(({"x": 1}, ">", 3), ({"x": 1}, "<=", 3)))
    assert fm_solve(system(({"x": 1}, ">=", 3), ({"x": 1}, "<=", 3))) == {"x": F(3)}


def test_equalities_are_substituted():
    s = system(({"x": 1, "y": -1}, "=", 0), ({"y": 1}, "=", F(7, 3)), ({"x": 1, "z": 1}, "<", 3))
    point = fm_solve(s)
    assert point["x"] == point["y"] == F(7, 3)
    assert s.holds(point)
    assert not fm_feasible(system(({"x": 1}, "=", 1), ({"x": 2}, "=", 3)))


def test_strictness_propagates_through_chains():
    # x < y, y < z, z <= x has no solution; with x <= y, y <= z, z <= x it does.
    assert not fm_feasible(system(({"x": 1, "y": -1}, "<", 0), ({"y": 1, "z": -1}, "<", 0), ({"z": 1, "x": -1}, "<=", 0)))
    s = system(({"x": 1, "y": -1}, "<=", 0), ({"y": 1, "z": -1}, "<=", 0), ({"z": 1, "x": -1}, "<=", 0))
    assert s.holds(fm_solve(s))


def test_constant_rows():
    assert fm_feasible(LinearSystem.of([LinearConstraint((), "<=", F(0))]))
    assert not fm_feasible(LinearSystem.of([LinearConstraint((), "<", F(0))]))


def test_unbounded_directions():
    s = system(({"x": 1, "y": 1}, ">", 100), ({"x": 1}, "<", -100))
    point = fm_solve(s)
    assert s.holds(point)


def _solve_square(rows):
    """Unique solution of a square system [(coeffs, rhs)], or None if singular."""
    n = len(rows)
    matrix = [list(coeffs) + [rhs] for coeffs, rhs in rows]
    for col in range(n):
        pivot = next((r for r in range(col, n) if matrix[r][col] != 0), None)
        if pivot is None:
            return None
        matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
        for r in range(n):
            if r != col and matrix[r][col] != 0:
                factor = matrix[r][col] / matrix[col][col]
                matrix[r] = [a - factor * b for a, b in zip(matrix[r], matrix[col])]
    return tuple(matrix[i][n] / matrix[i][i] for i in range(n))


def _brute_force(names, constraints):
    """
    Vertices of the closure inside a large box; the strict system is feasible
    iff there is a vertex and the vertex centroid satisfies it.
    """
    relaxed = [LinearConstraint.of(c.terms, RELAXED[c.relation], c.bound) for c in constraints]
    planes = [([dict(c.terms).get(name, F(0)) for name in names], c.bound) for c in relaxed]
    for i in range(len(names)):
        unit = [F(int(j == i)) for j in range(len(names))]
        planes.append((unit, F(BOX)))
        planes.append((unit, F(-BOX)))

    def inside(point):
        valuation = dict(zip(names, point))
        in_box = all(abs(value) <= BOX for value in point)
        return in_box and all(c.evaluate(valuation) for c in relaxed)

    vertices = set()
    for chosen in itertools.combinations(planes, len(names)):
        point = _solve_square(chosen)
        if point is not None and inside(point):
            vertices.add(point)
    if not vertices:
        return False
    centroid = [sum(coords) / len(vertices) for coords in zip(*vertices)]
    valuation = dict(zip(names, centroid))
    return all(c.evaluate(valuation) for c in constraints)


def _random_system(rng):
    names = [f"v{i}" for i in range(rng.randint(1, 4))]
    constraints = []
    for _ in range(rng.randint(1, 10)):
        terms = {name: rng.randint(-3, 3) for name in names}
        relation = rng.choice(["<", "<=", ">", ">=", "<", "<=", ">", ">=", "="])
        constraints.append(LinearConstraint.of(terms, relation, rng.randint(-10, 10)))
    return names, constraints


def _agree(seed):
    rng = random.Random(seed)
    names, constraints = _random_system(rng)
    s = LinearSystem.of(constraints)
    expected = _brute_force(names, constraints)
    assert fm_feasible(s) == expected, (seed, constraints)
    point = fm_solve(s)
    if expected:
        assert s.holds(point), (seed, constraints, point)
    else:
        assert point is None


@pytest.mark.parametrize("seed", range(100))
def test_random_systems_match_vertex_enumeration(seed):
    _agree(seed)


@pytest.mark.slow
def test_thousand_random_systems():
    for seed in range(100, 1100):
        _agree(seed)
