import json
import logging

from pocketflow import Node

from src.oracle.paths import DEFAULT_BUDGET, REFUSED, SAT, oracle_check
from src.trace.trace import format_trace, trace_to_dict
from src.trace.validate import validate_trace
from src.nodes.report_verdict import EXIT_INCONCLUSIVE, EXIT_INTERNAL, exit_code_for

logger = logging.getLogger("flow.traversal")


class OracleCheck(Node):
    def prep(self, shared):
        return shared["automaton"], shared["k"], shared.get("budget", DEFAULT_BUDGET)

    def exec(self, inputs):
        ha, k, budget = inputs
        logger.info("Oracle check up to k=%d (budget %d prefixes)", k, budget)
        verdict = oracle_check(ha, k, budget)
        validation = validate_trace(ha, verdict.witness) if verdict.witness is not None else None
        return verdict, validation

    def post(self, shared, prep_res, exec_res):
        verdict, validation = exec_res
        shared["oracle"] = verdict
        if verdict.status == REFUSED:
            code = EXIT_INCONCLUSIVE
        elif validation is not None and not validation.ok:
            code = EXIT_INTERNAL
        else:
            code = exit_code_for(verdict.status)
        shared["exit_code"] = code
        report = {"verdict": verdict.status, "k": prep_res[1], "encoding": "oracle", "visited": verdict.visited}
        if verdict.witness is not None:
            report["trace"] = trace_to_dict(verdict.witness)
        if validation is not None and not validation.ok:
            report["internal_error"] = validation.describe()
        shared["report"] = report
        if shared["config"].as_json:
            text = json.dumps(report, indent=2, sort_keys=True)
        else:
            text = f"{verdict.status} (k={prep_res[1]}, oracle, {verdict.visited} prefixes)"
            if verdict.status == SAT:
                text += "\n" + format_trace(shared["automaton"], verdict.witness)
        shared["output"] = text
        print(text)
