import logging

from pocketflow import Node

from src.utils.config import DEEPENING
from src.utils.logging_config import log_flow_transition, log_solver_verdict
from src.utils.solver_utils import SAT, UNSAT, run_solver

logger = logging.getLogger("flow.traversal")


class RunSolver(Node):
    def prep(self, shared):
        config = shared["config"]
        return shared["script"], config.solver, config.timeout

    def exec(self, inputs):
        script, solver, timeout = inputs
        return run_solver(script, solver, timeout)

    def post(self, shared, prep_res, exec_res):
        config = shared["config"]
        k = shared["k"]
        shared["verdict"] = exec_res
        shared["attempts"].append((k, exec_res.status, exec_res.wall_time))
        log_solver_verdict(logger, k, shared["script"].meta["encoding"], exec_res.status, exec_res.wall_time)
        if exec_res.status == SAT:
            log_flow_transition(logger, "RunSolver", "DecodeTrace", "sat")
            return "sat"
        if exec_res.status == UNSAT and config.schedule == DEEPENING and k < shared["kmax"]:
            shared["k"] = k + 1
            log_flow_transition(logger, "RunSolver", "EncodeBmc", "deepen")
            return "deepen"
        log_flow_transition(logger, "RunSolver", "ReportVerdict", "done")
        return "done"
