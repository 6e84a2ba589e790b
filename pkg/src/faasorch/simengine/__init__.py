from .engine import Fault, Prewarm, RunResult, SimConfig, Simulation, Variant, run
from .eventlog import EventLog, parse_lines, read_log
from .execution import billed_ms, execute
from .latency import LatencyModel

__all__ = [
    "EventLog", "Fault", "LatencyModel", "Prewarm", "RunResult", "SimConfig", "Simulation", "Variant",
    "billed_ms", "execute", "parse_lines", "read_log", "run",
]
