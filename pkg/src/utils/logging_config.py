import logging
import os
import sys
from typing import Any, Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(log_file: Optional[str] = None, verbose: bool = False):
    """Configure logging for a checker run.

    stdout carries verdicts, reports and emitted scripts, so the console
    handler writes to stderr, at WARNING unless `verbose`.

    Args:
        log_file: Optional path to a log file; it always receives DEBUG records.
        verbose: Show DEBUG records on the console as well.
    """
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.DEBUG if verbose else logging.WARNING)
    handlers = [console]

    if log_file:
        if os.path.dirname(log_file):
            os.makedirs(os.path.dirname(log_file), exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        handlers.append(file_handler)

    logging.basicConfig(
        level=logging.DEBUG if verbose or log_file else logging.WARNING,
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=handlers,
        force=True,
    )


def log_node_execution(logger: logging.Logger, node_name: str, phase: str, data: Any):
    """Log node execution details.

    Args:
        logger: Logger instance to use
        node_name: Name of the node being executed
        phase: Execution phase (prep, exec, post)
        data: Data being processed in this phase
    """
    logger.debug(f"Node: {node_name} | Phase: {phase} | Data: {data}")


def log_flow_transition(logger: logging.Logger, from_node: str, to_node: str, action: str):
    logger.info(f"Flow Transition: {from_node} --({action})--> {to_node}")


def log_solver_verdict(logger: logging.Logger, k: int, encoding: str, status: str, wall_time: float):
    """One INFO line per solver call, the record iterative deepening leaves behind."""
    logger.info(f"Solver: k={k} | {encoding} | {status} | {wall_time:.3f}s")
