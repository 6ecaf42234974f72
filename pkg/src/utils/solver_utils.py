import logging
import os
import shlex
import signal
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

from src.encoding.formula import Script
from src.errors import SExprError, SolverError, ModelValueError
from src.utils.smtlib import parse_model, to_smtlib2

logger = logging.getLogger(__name__)

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"
TIMEOUT = "TIMEOUT"
ERROR = "ERROR"

DEFAULT_SOLVER = "z3 -in"
TAIL_CHARS = 2000
KILL_GRACE = 2.0

Assignment = Dict[str, Union[int, bool, object]]


@dataclass(frozen=True)
class SolverVerdict:
    status: str
    model: Optional[Assignment] = None
    stdout_tail: str = ""
    wall_time: float = 0.0
    peak_memory: Optional[int] = None
    diagnostics: str = field(default="", compare=False)


def split_command(solver_cmd: Union[str, Sequence[str]]) -> list:
    return shlex.split(solver_cmd) if isinstance(solver_cmd, str) else list(solver_cmd)


def is_solver_available(solver_cmd: Union[str, Sequence[str]] = DEFAULT_SOLVER) -> bool:
    """Check if the solver executable is on PATH."""
    argv = split_command(solver_cmd)
    return bool(argv) and shutil.which(argv[0]) is not None


class SolverProcess(subprocess.Popen):
    """Popen that reaps its child with wait4, keeping that child's own resource usage."""

    rusage = None

    def _try_wait(self, wait_flags):
        if not hasattr(os, "wait4"):
            return super()._try_wait(wait_flags)
        try:
            pid, status, rusage = os.wait4(self.pid, wait_flags)
        except ChildProcessError:
            return self.pid, 0
        if pid == self.pid:
            self.rusage = rusage
        return pid, status

    def peak_memory(self) -> Optional[int]:
        """Peak resident size in bytes, None when the child was not reaped here."""
        if self.rusage is None or not self.rusage.ru_maxrss:
            return None
        peak = self.rusage.ru_maxrss
        return peak if sys.platform == "darwin" else peak * 1024

    def kill_group(self) -> None:
        """SIGKILL the child's whole session, so wrapped solvers go down with it."""
        if not hasattr(os, "killpg"):
            self.kill()
            return
        try:
            os.killpg(self.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass


def _first_verdict(lines) -> Optional[Tuple[str, int]]:
    for index, line in enumerate(lines):
        token = line.strip()
        if token in ("sat", "unsat", "unknown"):
            return token, index
    return None


def run_solver(script: Script, solver_cmd: Union[str, Sequence[str]] = DEFAULT_SOLVER, timeout: float = 60.0) -> SolverVerdict:
    """
    Feed the script to a solver process on stdin and read its verdict.
    Returns: SolverVerdict; TIMEOUT after killing the process past the deadline.
    """
    argv = split_command(solver_cmd)
    text = to_smtlib2(script)
    start = time.monotonic()
    try:
        process = SolverProcess(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            start_new_session=True,
        )
    except (FileNotFoundError, PermissionError) as e:
        raise SolverError(f"cannot start solver {argv!r}: {e}") from e

    try:
        stdout, stderr = process.communicate(text, timeout=timeout)
    except KeyboardInterrupt:
        process.kill_group()
        raise
    except subprocess.TimeoutExpired:
        process.kill_group()
        try:
            stdout, stderr = process.communicate(timeout=KILL_GRACE)
        except subprocess.TimeoutExpired:
            stdout, stderr = "", ""
        elapsed = time.monotonic() - start
        logger.warning("solver timed out after %.1fs", elapsed)
        return SolverVerdict(TIMEOUT, None, (stdout or "")[-TAIL_CHARS:], elapsed, process.peak_memory())

    elapsed = time.monotonic() - start
    tail = stdout[-TAIL_CHARS:]
    peak = process.peak_memory()
    lines = stdout.splitlines()
    found = _first_verdict(lines)
    if found is None:
        logger.error("solver exited with code %s and no verdict", process.returncode)
        return SolverVerdict(ERROR, None, tail, elapsed, peak, (stderr or "")[-TAIL_CHARS:])

    token, index = found
    logger.info("solver answered %s in %.2fs", token, elapsed)
    if token == "unsat":
        return SolverVerdict(UNSAT, None, tail, elapsed, peak)
    if token == "unknown":
        return SolverVerdict(UNKNOWN, None, tail, elapsed, peak)

    model = None
    if script.produce_models:
        try:
            model = parse_model("\n".join(lines[index + 1 :]), script.symbol_table())
        except (SExprError, ModelValueError) as e:
            logger.error("unparseable model: %s", e)
            return SolverVerdict(ERROR, None, tail, elapsed, peak, str(e))
    return SolverVerdict(SAT, model, tail, elapsed, peak)
