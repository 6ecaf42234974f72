import argparse
import json
import logging
import sys

from src.automata.automaton import validate_automaton
from src.automata.generators import generate, resolve_model
from src.automata.model_io import build_automaton, serialize_model
from src.errors import (
    CompositionError,
    ConfigError,
    EncodingError,
    GeneratorParameterError,
    ModelSemanticError,
    ModelSyntaxError,
    QbmcError,
    SExprError,
    SolverError,
    TraceDecodeError,
)
from src.flow import create_bench_flow, create_check_flow, create_emit_flow, create_oracle_flow
from src.nodes.report_verdict import EXIT_INCONCLUSIVE, EXIT_INTERNAL, EXIT_SAT, EXIT_UNSAT, EXIT_USAGE
from src.oracle.paths import DEFAULT_BUDGET
from src.trace.trace import trace_from_dict
from src.trace.validate import validate_trace
from src.utils.config import DEEPENING, load_config
from src.utils.logging_config import setup_logging

logger = logging.getLogger(__name__)

USAGE_ERRORS = (ModelSyntaxError, ModelSemanticError, CompositionError, GeneratorParameterError, ConfigError, OSError)


def _add_model_options(parser):
    parser.add_argument("model", help="model file, or a generator reference such as fischer:2:75:70")
    parser.add_argument("--kmax", type=int, help="bound on the number of steps (default: model's kmax, else 8)")
    parser.add_argument("--config", help="YAML settings file (default: ./qbmc.yaml if present)")
    parser.add_argument("--json", dest="as_json", action="store_true", help="machine-readable output")


def _add_encoding_options(parser):
    parser.add_argument("--encoding", choices=["qf", "quantified"], help="unrolled or single-copy encoding")
    parser.add_argument("--delta-mode", choices=["per-step", "shared"], help="dwell variables of the quantified encoding")
    parser.add_argument("--selector", choices=["binary", "cubes"], help="step selector encoding")
    parser.add_argument(
        "--no-target-invariant",
        dest="target_invariant",
        action="store_false",
        default=None,
        help="do not require the target invariant after a discrete transition",
    )
    parser.add_argument(
        "--no-range-guard",
        dest="range_guard",
        action="store_false",
        default=None,
        help="do not restrict the selector to steps below k",
    )


def _add_solver_options(parser):
    parser.add_argument("--solver", help="solver command reading SMT-LIB2 on stdin (env QBMC_SOLVER, default 'z3 -in')")
    parser.add_argument("--timeout", type=float, help="seconds per solver call (env QBMC_TIMEOUT, default 600)")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog="qbmc", description="Bounded model checking of rectangular hybrid automata")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--log-file", help="also write logs to this file")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", help="check that no bad state is reachable within kmax steps")
    _add_model_options(check)
    _add_encoding_options(check)
    _add_solver_options(check)
    check.add_argument("--deepen", action="store_true", help="check k = 1..kmax, stopping at the first SAT")

    emit = commands.add_parser("emit", help="write the SMT-LIB2 script without solving it")
    _add_model_options(emit)
    _add_encoding_options(emit)
    emit.add_argument("-o", "--output", help="output file (default: stdout)")

    gen = commands.add_parser("generate", help="write a generated benchmark model")
    gen.add_argument("family", help="example | fischer | lynch-shavit | random")
    gen.add_argument("params", nargs="*", help="N (or seed) first, then the timing constants")
    gen.add_argument("-o", "--output", help="output file (default: stdout)")

    bench = commands.add_parser("bench", help="run a benchmark matrix")
    bench.add_argument("matrix", help="matrix file: one `id model encoding k [expected]` per line")
    bench.add_argument("--expectations", help="expected verdicts in matrix format")
    bench.add_argument("--report", help="YAML report file; cells already in it are skipped")
    bench.add_argument("--jobs", type=int, help="cells run in parallel")
    bench.add_argument("--config", help="YAML settings file")
    bench.add_argument("--json", dest="as_json", action="store_true", help="machine-readable output")
    _add_encoding_options(bench)
    _add_solver_options(bench)

    oracle = commands.add_parser("oracle", help="decide the bounded check by path enumeration")
    _add_model_options(oracle)
    oracle.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of explored path prefixes")

    validate = commands.add_parser("validate", help="validate a model, or a trace against a model")
    validate.add_argument("model", help="model file or generator reference")
    validate.add_argument("--trace", help="trace JSON as printed by `check --json`")
    validate.add_argument("--strict", action="store_true", help="also check the invariant at trajectory midpoints")
    validate.add_argument(
        "--no-target-invariant",
        dest="target_invariant",
        action="store_false",
        help="accept discrete post-states outside the target invariant",
    )

    return parser.parse_args(argv)


def _overrides(args) -> dict:
    keys = ("encoding", "kmax", "solver", "timeout", "delta_mode", "selector", "target_invariant", "range_guard", "jobs")
    overrides = {key: getattr(args, key, None) for key in keys}
    overrides["model_path"] = getattr(args, "model", None)
    overrides["output"] = getattr(args, "output", None)
    overrides["as_json"] = getattr(args, "as_json", False)
    if getattr(args, "deepen", False):
        overrides["schedule"] = DEEPENING
    return overrides


def _run_flow(flow, shared) -> int:
    flow.run(shared)
    return shared["exit_code"]


def cmd_generate(args) -> int:
    text = serialize_model(generate(args.family, args.params))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as file:
            file.write(text)
        logger.info("Wrote %s model to %s", args.family, args.output)
    else:
        print(text, end="")
    return EXIT_UNSAT


def cmd_validate(args) -> int:
    ha = build_automaton(resolve_model(args.model))
    report = validate_automaton(ha)
    if not report.ok:
        print("invalid automaton:\n  " + "\n  ".join(report.violations))
        return EXIT_USAGE
    if not args.trace:
        print(f"ok: {len(ha.locations)} locations, {len(ha.transitions)} transitions")
        return EXIT_UNSAT
    with open(args.trace, "r", encoding="utf-8") as file:
        data = json.load(file)
    trace = trace_from_dict(data.get("trace", data))
    validation = validate_trace(ha, trace, strict=args.strict, target_invariant=args.target_invariant)
    print("trace ok" if validation.ok else "trace rejected:\n" + validation.describe())
    return EXIT_UNSAT if validation.ok else EXIT_SAT


def main(argv=None) -> int:
    args = parse_args(argv)
    setup_logging(args.log_file, args.verbose)

    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "validate":
            return cmd_validate(args)

        config = load_config(_overrides(args), getattr(args, "config", None))
        shared = {"config": config}
        if args.command == "check":
            return _run_flow(create_check_flow(), shared)
        if args.command == "emit":
            return _run_flow(create_emit_flow(), shared)
        if args.command == "oracle":
            shared["budget"] = args.budget
            return _run_flow(create_oracle_flow(), shared)
        if args.command == "bench":
            shared.update(
                matrix_path=args.matrix,
                expectations_path=args.expectations,
                report_path=args.report,
            )
            return _run_flow(create_bench_flow(config.jobs), shared)
    except USAGE_ERRORS as e:
        logger.debug("usage error", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (EncodingError, TraceDecodeError, SExprError) as e:
        logger.debug("internal error", exc_info=True)
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except SolverError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except QbmcError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
