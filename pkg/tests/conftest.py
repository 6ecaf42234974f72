import os

import pytest

from src.automata.generators import gen_example, gen_fischer
from src.automata.model_io import build_automaton
from src.utils.solver_utils import DEFAULT_SOLVER, is_solver_available

SOLVER = os.getenv("QBMC_SOLVER", DEFAULT_SOLVER)


def pytest_collection_modifyitems(config, items):
    if is_solver_available(SOLVER):
        return
    skip = pytest.mark.skip(reason=f"solver {SOLVER!r} not on PATH")
    for item in items:
        if "solver" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def solver_cmd():
    return SOLVER


@pytest.fixture
def example_ha():
    return build_automaton(gen_example())


@pytest.fixture
def fischer_unsafe_2():
    return build_automaton(gen_fischer(2, 75, 70))


@pytest.fixture
def fischer_safe_2():
    return build_automaton(gen_fischer(2, 5, 70))
