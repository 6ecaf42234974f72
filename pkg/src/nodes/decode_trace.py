import logging

from pocketflow import Node

from src.encoding.bmc import PER_STEP
from src.trace.trace import bad_state_index, decode_trace
from src.trace.validate import validate_trace
from src.utils.logging_config import log_node_execution

logger = logging.getLogger("flow.traversal")


class DecodeTrace(Node):
    def prep(self, shared):
        script = shared["script"]
        return (
            shared["verdict"].model or {},
            shared["automaton"],
            script.meta["k"],
            script.meta["encoding"],
            script.meta.get("delta_mode", PER_STEP),
            shared["config"].options.include_target_invariant_on_discrete,
        )

    def exec(self, inputs):
        assignment, ha, k, encoding, delta_mode, target_invariant = inputs
        trace = decode_trace(assignment, ha, k, encoding, delta_mode, target_invariant)
        validation = validate_trace(ha, trace, target_invariant=target_invariant)
        return trace, validation, bad_state_index(ha, trace)

    def post(self, shared, prep_res, exec_res):
        trace, validation, bad_index = exec_res
        shared["trace"] = trace
        shared["trace_validation"] = validation
        if not validation.ok:
            shared["internal_error"] = "solver model decodes to an invalid trace:\n" + validation.describe()
        elif bad_index is None:
            shared["internal_error"] = "decoded trace never enters the bad set"
        log_node_execution(logger, "DecodeTrace", "post", f"{len(trace.steps)} steps, valid={validation.ok}")
