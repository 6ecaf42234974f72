"""
Benchmark matrices, per-cell execution and the verdict report.

Matrix lines: `id model encoding k [expected]`, `#` starts a comment. `model`
is a model file (relative to the matrix) or a generator reference such as
`fischer:2:75:70`; `encoding` is qf, quantified or oracle.
"""

import logging
import time
from dataclasses import asdict, dataclass, replace
from hashlib import sha1
from pathlib import Path
from typing import Dict, List, Optional

import yaml

from src.automata.automaton import validate_automaton
from src.automata.generators import resolve_model
from src.automata.model_io import build_automaton
from src.encoding.bmc import QF, QUANTIFIED, encode
from src.encoding.formula import formula_stats
from src.errors import ConfigError, QbmcError
from src.oracle.paths import ORACLE, oracle_check
from src.trace.trace import bad_state_index, decode_trace
from src.trace.validate import validate_trace
from src.utils.config import SINGLE, CheckConfig
from src.utils.solver_utils import ERROR, SAT, run_solver

logger = logging.getLogger(__name__)

ENCODINGS = (QF, QUANTIFIED, ORACLE)
VERDICTS = ("SAT", "UNSAT", "UNKNOWN", "TIMEOUT", "ORACLE-REFUSED", "ERROR")

PASS = "PASS"
FAIL = "FAIL"
NO_EXPECTATION = "-"


@dataclass(frozen=True)
class BenchCell:
    id: str
    model: str
    encoding: str
    k: int
    expected: Optional[str] = None

    def line(self) -> str:
        return f"{self.id} {self.model} {self.encoding} {self.k}"


@dataclass
class BenchRow:
    id: str
    model: str
    nol: Optional[int]
    k: int
    encoding: str
    verdict: str
    expected: Optional[str]
    result: str
    wall_time: float
    templates: Optional[int]
    nodes: Optional[int]
    peak_memory: Optional[int]
    key: str
    note: str = ""


def parse_matrix(text: str) -> List[BenchCell]:
    cells = []
    seen = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (4, 5):
            raise ConfigError(f"matrix line {number}: expected `id model encoding k [expected]`, got {raw!r}")
        cell_id, model, encoding, k = fields[:4]
        if encoding not in ENCODINGS:
            raise ConfigError(f"matrix line {number}: unknown encoding {encoding!r}")
        try:
            bound = int(k)
        except ValueError:
            raise ConfigError(f"matrix line {number}: bound {k!r} is not an integer") from None
        expected = fields[4].upper() if len(fields) == 5 else None
        if expected is not None and expected not in VERDICTS:
            raise ConfigError(f"matrix line {number}: unknown verdict {fields[4]!r}")
        if cell_id in seen:
            raise ConfigError(f"matrix line {number}: duplicate cell id {cell_id!r}")
        seen.add(cell_id)
        cells.append(BenchCell(cell_id, model, encoding, bound, expected))
    return cells


def apply_expectations(cells: List[BenchCell], expectations: List[BenchCell]) -> List[BenchCell]:
    by_id = {cell.id: cell.expected for cell in expectations if cell.expected}
    return [replace(cell, expected=by_id.get(cell.id, cell.expected)) for cell in cells]


def cell_key(cell: BenchCell, config: CheckConfig) -> str:
    digest = sha1(f"{cell.line()}|{config.fingerprint()}".encode("utf-8")).hexdigest()[:12]
    return f"{cell.id}:{digest}"


def judge(verdict: str, expected: Optional[str]) -> str:
    if expected is None:
        return NO_EXPECTATION
    return PASS if verdict == expected else FAIL


def run_cell(cell: BenchCell, config: CheckConfig, base_dir: Optional[str] = None) -> BenchRow:
    """Run one cell; failures become an ERROR row instead of propagating."""
    key = cell_key(cell, config)
    start = time.monotonic()
    nol = templates = nodes = peak = None
    note = ""
    try:
        ha = build_automaton(resolve_model(cell.model, base_dir))
        report = validate_automaton(ha)
        if not report.ok:
            raise ConfigError("; ".join(report.violations))
        nol = len(ha.locations)
        if cell.encoding == ORACLE:
            verdict = oracle_check(ha, cell.k).status
        else:
            cell_config = replace(config, encoding=cell.encoding, kmax=cell.k, schedule=SINGLE)
            script = encode(ha, cell.k, cell.encoding, cell_config.options)
            stats = formula_stats(script)
            templates, nodes = stats.templates, stats.nodes
            outcome = run_solver(script, cell_config.solver, cell_config.timeout)
            verdict, peak = outcome.status, outcome.peak_memory
            if outcome.status == SAT:
                trace = decode_trace(
                    outcome.model or {},
                    ha,
                    script.meta["k"],
                    script.meta["encoding"],
                    script.meta["delta_mode"],
                    cell_config.options.include_target_invariant_on_discrete,
                )
                validation = validate_trace(
                    ha, trace, target_invariant=cell_config.options.include_target_invariant_on_discrete
                )
                if not validation.ok or bad_state_index(ha, trace) is None:
                    verdict, note = ERROR, "SAT with an invalid trace"
            elif outcome.status == ERROR:
                note = (outcome.diagnostics or outcome.stdout_tail).strip().splitlines()[-1:]
                note = note[0] if note else "solver error"
    except (QbmcError, OSError) as e:
        logger.error("cell %s failed: %s", cell.id, e)
        verdict, note = ERROR, (str(e).splitlines() or [type(e).__name__])[0]
    elapsed = time.monotonic() - start
    return BenchRow(
        cell.id,
        cell.model,
        nol,
        cell.k,
        cell.encoding,
        verdict,
        cell.expected,
        judge(verdict, cell.expected),
        round(elapsed, 3),
        templates,
        nodes,
        peak,
        key,
        note,
    )


def load_report(path: Optional[str]) -> Dict[str, BenchRow]:
    """Rows of an earlier report keyed by cell key; empty when there is none."""
    if not path or not Path(path).exists():
        return {}
    with open(path, "r") as file:
        data = yaml.safe_load(file) or {}
    rows = {}
    for entry in data.get("rows", []):
        row = BenchRow(**entry)
        rows[row.key] = row
    return rows


def save_report(path: str, rows: List[BenchRow]) -> None:
    with open(path, "w") as file:
        yaml.safe_dump({"rows": [asdict(row) for row in rows]}, file, sort_keys=False)


COLUMNS = ("id", "nol", "k", "encoding", "verdict", "expected", "result", "wall_time", "templates", "nodes", "peak_memory")


def format_table(rows: List[BenchRow]) -> str:
    def cell(value) -> str:
        return "-" if value is None else str(value)

    table = [list(COLUMNS)] + [[cell(getattr(row, column)) for column in COLUMNS] for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(COLUMNS))]
    return "\n".join("  ".join(value.ljust(width) for value, width in zip(line, widths)).rstrip() for line in table)
