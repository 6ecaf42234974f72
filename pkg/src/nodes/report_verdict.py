import json
import logging

from pocketflow import Node

from src.trace.trace import format_trace, trace_to_dict
from src.trace.validate import dwell_total
from src.utils.solver_utils import SAT, UNSAT

logger = logging.getLogger("flow.traversal")

EXIT_UNSAT = 0
EXIT_SAT = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3
EXIT_INTERNAL = 4


def exit_code_for(status: str, internal_error: bool = False) -> int:
    if internal_error:
        return EXIT_INTERNAL
    if status == SAT:
        return EXIT_SAT
    if status == UNSAT:
        return EXIT_UNSAT
    return EXIT_INCONCLUSIVE


class ReportVerdict(Node):
    def prep(self, shared):
        return shared

    def exec(self, shared):
        verdict = shared["verdict"]
        ha = shared["automaton"]
        trace = shared.get("trace")
        error = shared.get("internal_error")
        report = {
            "verdict": verdict.status,
            "k": shared["k"],
            "encoding": shared["script"].meta["encoding"],
            "locations": len(ha.locations),
            "class": shared.get("automaton_class"),
            "wall_time": round(verdict.wall_time, 3),
            "peak_memory": verdict.peak_memory,
            "stats": shared["stats"].as_dict(),
            "attempts": [{"k": k, "verdict": status} for k, status, _ in shared["attempts"]],
        }
        if trace is not None:
            report["trace"] = trace_to_dict(trace)
            report["duration"] = str(dwell_total(trace))
        if error:
            report["internal_error"] = error
        if verdict.diagnostics:
            report["diagnostics"] = verdict.diagnostics
        return report, exit_code_for(verdict.status, bool(error))

    def post(self, shared, prep_res, exec_res):
        report, code = exec_res
        shared["report"] = report
        shared["exit_code"] = code
        if shared["config"].as_json:
            text = json.dumps(report, indent=2, sort_keys=True)
        else:
            lines = [f"{report['verdict']} (k={report['k']}, {report['encoding']}, {report['wall_time']}s)"]
            if "trace" in report:
                lines.append(format_trace(shared["automaton"], shared["trace"]))
            if "internal_error" in report:
                lines.append(f"INTERNAL ERROR: {report['internal_error']}")
            if "diagnostics" in report:
                lines.append(report["diagnostics"])
            text = "\n".join(lines)
        shared["output"] = text
        print(text)
