import logging

from pocketflow import Node

from src.automata.automaton import classify_automaton, validate_automaton
from src.automata.generators import DEFAULT_KMAX, resolve_model
from src.automata.model_io import build_automaton
from src.errors import ModelSemanticError
from src.utils.config import DEEPENING
from src.utils.logging_config import log_node_execution

logger = logging.getLogger("flow.traversal")


class LoadModel(Node):
    def prep(self, shared):
        config = shared["config"]
        return shared.get("document"), config.model_path, config.kmax, config.schedule

    def exec(self, inputs):
        document, model_path, kmax, schedule = inputs
        if document is None:
            logger.info("Loading model %s", model_path)
            document = resolve_model(model_path)
        ha = build_automaton(document)
        report = validate_automaton(ha)
        if not report.ok:
            raise ModelSemanticError("invalid automaton:\n  " + "\n  ".join(report.violations))
        if kmax is None:
            kmax = document.check.kmax if document.check and document.check.kmax is not None else DEFAULT_KMAX
        start = min(1, kmax) if schedule == DEEPENING else kmax
        return document, ha, kmax, start, classify_automaton(ha)

    def post(self, shared, prep_res, exec_res):
        document, ha, kmax, start, kind = exec_res
        shared["document"] = document
        shared["automaton"] = ha
        shared["kmax"] = kmax
        shared["automaton_class"] = kind
        shared["k"] = start
        shared.setdefault("attempts", [])
        log_node_execution(
            logger, "LoadModel", "post", f"{len(ha.locations)} locations, {len(ha.transitions)} transitions, {kind}"
        )
