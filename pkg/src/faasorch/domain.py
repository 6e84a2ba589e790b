"""Cluster and request data model shared by every other module.

Simulated time is kept as integer microseconds throughout the package so that
event logs round-trip exactly and billing stays in exact arithmetic.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import yaml

US_PER_S = 1_000_000
DEFAULT_CPU_PER_MIB = 0.5625  # 1769 MiB <-> ~1 vCPU


def seconds_to_us(seconds: float) -> int:
    return int(round(seconds * US_PER_S))


def us_to_seconds(us: int) -> float:
    return us / US_PER_S


def cpu_for_mem(mem: int, cpu_per_mib: float = DEFAULT_CPU_PER_MIB) -> int:
    """Millicores attached to a memory size by the proportional map."""
    return math.ceil(Fraction(mem) * Fraction(str(cpu_per_mib)))


class PiecewiseLinear:
    """Piecewise-linear curve through sorted (x, y) knots, flat beyond the ends."""

    def __init__(self, knots: Sequence[Sequence[float]]):
        if len(knots) < 1:
            raise ValueError("curve needs at least one knot")
        pts = sorted((float(x), float(y)) for x, y in knots)
        xs = [p[0] for p in pts]
        if len(set(xs)) != len(xs):
            raise ValueError("curve knots must have distinct x values")
        self.xs = xs
        self.ys = [p[1] for p in pts]

    def __call__(self, x: float) -> float:
        xs, ys = self.xs, self.ys
        if x <= xs[0]:
            return ys[0]
        if x >= xs[-1]:
            return ys[-1]
        i = bisect.bisect_right(xs, x)
        x0, x1, y0, y1 = xs[i - 1], xs[i], ys[i - 1], ys[i]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def is_non_decreasing(self) -> bool:
        return all(b >= a for a, b in zip(self.ys, self.ys[1:]))

    def knots(self) -> list[list[float]]:
        return [[x, y] for x, y in zip(self.xs, self.ys)]


@dataclass(frozen=True)
class TimeCurve:
    """Nominal execution seconds as a function of payload and memory.

    ``base`` gives seconds at ``ref_mem``; other memory sizes scale by
    ``(ref_mem / min(mem, saturation_mem)) ** mem_exponent``, so adding memory
    never slows a run and stops helping past ``saturation_mem``.
    """

    base: PiecewiseLinear
    ref_mem: float
    mem_exponent: float = 1.0
    saturation_mem: Optional[float] = None

    def __call__(self, payload: float, mem: float) -> float:
        eff = mem if self.saturation_mem is None else min(mem, self.saturation_mem)
        return self.base(payload) * (self.ref_mem / eff) ** self.mem_exponent


@dataclass(frozen=True)
class FunctionProfile:
    name: str
    mem_req_curve: PiecewiseLinear
    time_curve: TimeCurve
    slo_seconds: float
    payload_domain: tuple[int, int]

    def __post_init__(self):
        if self.slo_seconds <= 0:
            raise ValueError(f"{self.name}: slo_seconds must be > 0")
        lo, hi = self.payload_domain
        if lo > hi:
            raise ValueError(f"{self.name}: empty payload domain {self.payload_domain}")
        if not self.mem_req_curve.is_non_decreasing():
            raise ValueError(f"{self.name}: mem_req_curve must be non-decreasing")
        if self.time_curve.mem_exponent < 0:
            raise ValueError(f"{self.name}: mem_exponent must be >= 0")

    def clamp(self, payload: int) -> int:
        lo, hi = self.payload_domain
        return min(max(payload, lo), hi)

    def mem_required(self, payload: int) -> float:
        return self.mem_req_curve(payload)

    def exec_seconds(self, payload: int, mem: float) -> float:
        """Nominal run time; undefined (raises) below the memory floor."""
        if mem < self.mem_required(payload):
            raise ValueError(
                f"{self.name}: {mem} MiB is below the memory floor for payload {payload}"
            )
        return self.time_curve(payload, mem)

    def floor_seconds(self, payload: int) -> float:
        """Run time at exactly the minimum memory for ``payload``."""
        return self.time_curve(payload, self.mem_required(payload))

    def to_dict(self) -> dict:
        tc = self.time_curve
        return {
            "name": self.name,
            "slo_seconds": self.slo_seconds,
            "payload_domain": list(self.payload_domain),
            "mem_req_curve": self.mem_req_curve.knots(),
            "time_curve": {
                "ref_mem": tc.ref_mem,
                "mem_exponent": tc.mem_exponent,
                "saturation_mem": tc.saturation_mem,
                "knots": tc.base.knots(),
            },
        }


def profile_from_dict(doc: dict) -> FunctionProfile:
    try:
        tc = doc["time_curve"]
        return FunctionProfile(
            name=str(doc["name"]),
            mem_req_curve=PiecewiseLinear(doc["mem_req_curve"]),
            time_curve=TimeCurve(
                base=PiecewiseLinear(tc["knots"]),
                ref_mem=float(tc["ref_mem"]),
                mem_exponent=float(tc.get("mem_exponent", 1.0)),
                saturation_mem=(
                    None if tc.get("saturation_mem") is None else float(tc["saturation_mem"])
                ),
            ),
            slo_seconds=float(doc["slo_seconds"]),
            payload_domain=(int(doc["payload_domain"][0]), int(doc["payload_domain"][1])),
        )
    except KeyError as exc:
        raise ValueError(f"profile document missing field {exc}") from None


def load_profile(path: str | Path) -> FunctionProfile:
    with open(path, encoding="utf-8") as fh:
        return profile_from_dict(yaml.safe_load(fh))


def builtin_profile_dir() -> Path:
    return Path(__file__).parent / "data" / "profiles"


def load_builtin_profiles() -> dict[str, FunctionProfile]:
    profiles = {}
    for path in sorted(builtin_profile_dir().glob("*.yaml")):
        prof = load_profile(path)
        profiles[prof.name] = prof
    return profiles


@dataclass(frozen=True, order=True)
class FunctionVersion:
    """One deployable (memory, cpu) configuration of a function.

    Identity is (function, mem, cpu); concurrency and keep-alive are policy.
    """

    function: str
    mem: int
    cpu: int
    concurrency_limit: int = field(default=10, compare=False)
    keep_alive: float = field(default=300.0, compare=False)

    def __post_init__(self):
        if self.mem <= 0 or self.cpu <= 0:
            raise ValueError(f"version resources must be positive: {self.mem} MiB, {self.cpu} mc")
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be >= 1")

    def __hash__(self):
        return hash((self.function, self.mem, self.cpu))

    @property
    def id(self) -> str:
        return f"{self.function}@{self.mem}Mi-{self.cpu}m"

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.function, self.mem, self.cpu)


@dataclass(frozen=True)
class ResourcePrediction:
    mem: int
    cpu: int
    cached: bool = False
    clamped: bool = False

    def __post_init__(self):
        if self.mem <= 0 or self.cpu <= 0:
            raise ValueError("prediction must be positive")


class Phase(str, enum.Enum):
    COLD_STARTING = "ColdStarting"
    READY = "Ready"
    FAILED = "Failed"


class FailureReason(str, enum.Enum):
    OOM_KILLED = "OOMKilled"
    CRASH_LOOP_BACKOFF = "CrashLoopBackOff"


class InvariantViolation(AssertionError):
    """A counter or capacity invariant was broken."""


@dataclass(eq=False)
class InstanceState:
    id: str
    version: FunctionVersion
    created_at: int = 0
    ready_at: int = 0
    last_used: int = 0
    active_connections: int = 0
    phase: Phase = Phase.COLD_STARTING
    failure: Optional[FailureReason] = None
    draining: bool = False

    @property
    def concurrency_limit(self) -> int:
        return self.version.concurrency_limit

    def compare_and_increment(self, expected: int) -> bool:
        """Atomic claim step: bump C_p only if it still equals ``expected``."""
        if self.active_connections != expected or not is_idle(self) or self.draining:
            return False
        self.active_connections = expected + 1
        return True

    def release(self, now: int) -> None:
        if self.active_connections <= 0:
            raise InvariantViolation(f"double release on {self.id}")
        self.active_connections -= 1
        self.last_used = now

    def mark_ready(self, now: int) -> None:
        self.phase = Phase.READY
        self.ready_at = now
        self.last_used = now

    def fail(self, reason: FailureReason) -> None:
        self.phase = Phase.FAILED
        self.failure = reason

    def check(self) -> None:
        if not 0 <= self.active_connections <= self.concurrency_limit:
            raise InvariantViolation(
                f"{self.id}: C_p={self.active_connections} outside [0, {self.concurrency_limit}]"
            )
        if self.phase is Phase.COLD_STARTING and self.active_connections != 0:
            raise InvariantViolation(f"{self.id}: cold-starting instance holds connections")


def is_idle(instance: InstanceState) -> bool:
    return (
        instance.phase is Phase.READY
        and instance.active_connections < instance.version.concurrency_limit
    )


def can_serve(version: FunctionVersion, pred: ResourcePrediction) -> bool:
    return version.mem >= pred.mem and version.cpu >= pred.cpu


class RequestState(str, enum.Enum):
    ARRIVED = "Arrived"
    PREDICTED = "Predicted"
    ROUTED = "Routed"
    QUEUED = "Queued"
    EXECUTING = "Executing"
    SUCCEEDED = "Succeeded"
    FAILED_OOM = "FailedOOM"
    DROPPED_QUEUE_FULL = "DroppedQueueFull"
    DROPPED_RETRIES_EXHAUSTED = "DroppedRetriesExhausted"

    @property
    def terminal(self) -> bool:
        return self in TERMINAL_STATES


TERMINAL_STATES = frozenset(
    {
        RequestState.SUCCEEDED,
        RequestState.FAILED_OOM,
        RequestState.DROPPED_QUEUE_FULL,
        RequestState.DROPPED_RETRIES_EXHAUSTED,
    }
)
_STATE_ORDER = {s: i for i, s in enumerate(RequestState)}


@dataclass(eq=False)
class Request:
    id: str
    function: str
    payload: int
    arrival: int
    deadline_slo: float = 0.0
    state: RequestState = RequestState.ARRIVED
    timestamps: dict = field(default_factory=dict)
    billed_ms: Optional[int] = None

    def __post_init__(self):
        self.timestamps.setdefault(RequestState.ARRIVED, self.arrival)

    def advance(self, state: RequestState, now: int) -> None:
        if self.state.terminal:
            raise InvariantViolation(f"request {self.id} already terminal ({self.state.value})")
        if _STATE_ORDER[state] <= _STATE_ORDER[self.state] and not state.terminal:
            raise InvariantViolation(
                f"request {self.id}: illegal transition {self.state.value} -> {state.value}"
            )
        if now < max(self.timestamps.values()):
            raise InvariantViolation(f"request {self.id}: time went backwards")
        self.state = state
        self.timestamps[state] = now

    def finish(self, state: RequestState, now: int, billed_ms: Optional[int] = None) -> None:
        executed = state in (RequestState.SUCCEEDED, RequestState.FAILED_OOM)
        if executed != (billed_ms is not None):
            raise InvariantViolation(f"request {self.id}: billed_ms must be set iff executed")
        self.advance(state, now)
        self.billed_ms = billed_ms


@dataclass(frozen=True)
class ClusterCapacity:
    total_cpu: int = 68_000
    total_mem: int = 294_912

    def __post_init__(self):
        if self.total_cpu <= 0 or self.total_mem <= 0:
            raise ValueError("cluster capacity must be positive")

    def fits(self, used_cpu: int, used_mem: int) -> bool:
        return used_cpu <= self.total_cpu and used_mem <= self.total_mem


@dataclass(frozen=True)
class ScaleAction:
    """Change a version's replica count; removals and drains name instances."""

    version: FunctionVersion
    from_count: int
    to_count: int
    source: str = ""
    apply_latency: float = 0.2
    remove_ids: tuple[str, ...] = ()
    drain_ids: tuple[str, ...] = ()

    @property
    def added(self) -> int:
        return max(0, self.to_count - self.from_count)
