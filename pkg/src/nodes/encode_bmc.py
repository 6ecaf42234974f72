import logging

from pocketflow import Node

from src.encoding.bmc import encode
from src.encoding.formula import formula_stats
from src.utils.logging_config import log_node_execution

logger = logging.getLogger("flow.traversal")


class EncodeBmc(Node):
    def prep(self, shared):
        config = shared["config"]
        return shared["automaton"], shared["k"], config.encoding, config.options

    def exec(self, inputs):
        ha, k, encoding, options = inputs
        logger.info("Encoding %s BMC at k=%d", encoding, k)
        script = encode(ha, k, encoding, options)
        return script, formula_stats(script)

    def post(self, shared, prep_res, exec_res):
        script, stats = exec_res
        shared["script"] = script
        shared["stats"] = stats
        log_node_execution(logger, "EncodeBmc", "post", stats.as_dict())
