"""Both encodings against each other and against path enumeration."""

import pytest

from src.automata.generators import gen_lynch_shavit, gen_random
from src.automata.model_io import build_automaton
from src.encoding.bmc import CUBES, QF, QUANTIFIED, SHARED, EncodingOptions, encode
from src.oracle.paths import oracle_check
from src.trace.trace import bad_state_index, decode_trace
from src.trace.validate import validate_trace
from src.utils.solver_utils import SAT, UNSAT, run_solver

pytestmark = pytest.mark.solver

TIMEOUT = 600


def _solve(ha, k, encoding, solver_cmd, options=EncodingOptions()):
    script = encode(ha, k, encoding, options)
    verdict = run_solver(script, solver_cmd, TIMEOUT)
    if verdict.status == SAT:
        trace = decode_trace(
            verdict.model,
            ha,
            script.meta["k"],
            script.meta["encoding"],
            script.meta["delta_mode"],
            options.include_target_invariant_on_discrete,
        )
        validation = validate_trace(ha, trace, target_invariant=options.include_target_invariant_on_discrete)
        assert validation.ok, (encoding, k)
        assert bad_state_index(ha, trace) is not None
    return verdict.status


def _agree(seed, k, solver_cmd):
    ha = build_automaton(gen_random(seed))
    expected = oracle_check(ha, k).status
    assert expected in (SAT, UNSAT)
    assert _solve(ha, k, QF, solver_cmd) == expected, (seed, k, QF)
    assert _solve(ha, k, QUANTIFIED, solver_cmd) == expected, (seed, k, QUANTIFIED)


@pytest.mark.parametrize("seed", range(20))
def test_random_models_agree(seed, solver_cmd):
    _agree(seed, 3, solver_cmd)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20, 120))
def test_random_corpus_agrees(seed, solver_cmd):
    for k in range(6):
        _agree(seed, k, solver_cmd)


@pytest.mark.parametrize(
    "options",
    [
        EncodingOptions(selector_mode=CUBES),
        EncodingOptions(delta_mode=SHARED),
        EncodingOptions(out_of_range_guard=False, selector_mode=CUBES),
    ],
)
def test_quantified_variants_agree(example_ha, solver_cmd, options):
    assert _solve(example_ha, 5, QUANTIFIED, solver_cmd, options) == UNSAT


@pytest.mark.parametrize("encoding", [QF, QUANTIFIED])
def test_fischer(fischer_unsafe_2, fischer_safe_2, solver_cmd, encoding):
    assert _solve(fischer_unsafe_2, 8, encoding, solver_cmd) == SAT
    assert _solve(fischer_safe_2, 8, encoding, solver_cmd) == UNSAT


@pytest.mark.slow
@pytest.mark.parametrize("encoding", [QF, QUANTIFIED])
def test_lynch_shavit_is_safe(solver_cmd, encoding):
    ha = build_automaton(gen_lynch_shavit(2))
    assert _solve(ha, 8, encoding, solver_cmd) == UNSAT


@pytest.mark.parametrize("encoding, k", [(QF, 8), (QF, 32), (QUANTIFIED, 8), (QUANTIFIED, 32)])
def test_example_is_safe(example_ha, solver_cmd, encoding, k):
    assert _solve(example_ha, k, encoding, solver_cmd) == UNSAT


@pytest.mark.slow
def test_example_is_safe_deep(example_ha, solver_cmd):
    assert _solve(example_ha, 64, QF, solver_cmd) == UNSAT


@pytest.mark.parametrize("seed", range(10))
def test_shared_dwell_never_finds_more(seed, solver_cmd):
    ha = build_automaton(gen_random(seed))
    shared = _solve(ha, 4, QUANTIFIED, solver_cmd, EncodingOptions(delta_mode=SHARED))
    if shared == SAT:
        assert _solve(ha, 4, QUANTIFIED, solver_cmd) == SAT
