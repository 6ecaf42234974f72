from pocketflow import Flow

from src.nodes.decode_trace import DecodeTrace
from src.nodes.emit_script import EmitScript
from src.nodes.encode_bmc import EncodeBmc
from src.nodes.load_model import LoadModel
from src.nodes.oracle_check import OracleCheck
from src.nodes.report_verdict import ReportVerdict
from src.nodes.run_bench import ParallelRunBench, RunBench
from src.nodes.run_solver import RunSolver


def create_check_flow():
    """Load, encode, solve; on SAT decode the trace, under iterative deepening loop back to the encoder."""
    load_model_node = LoadModel()
    encode_node = EncodeBmc()
    solver_node = RunSolver()
    decode_node = DecodeTrace()
    report_node = ReportVerdict()

    load_model_node >> encode_node >> solver_node
    solver_node - "sat" >> decode_node
    solver_node - "deepen" >> encode_node
    solver_node - "done" >> report_node
    decode_node >> report_node

    return Flow(start=load_model_node)


def create_emit_flow():
    load_model_node = LoadModel()
    encode_node = EncodeBmc()
    emit_node = EmitScript()

    load_model_node >> encode_node >> emit_node

    return Flow(start=load_model_node)


def create_oracle_flow():
    load_model_node = LoadModel()
    oracle_node = OracleCheck()

    load_model_node >> oracle_node

    return Flow(start=load_model_node)


def create_bench_flow(jobs: int = 1):
    bench_node = ParallelRunBench(jobs) if jobs > 1 else RunBench()
    return Flow(start=bench_node)
