"""Function execution model: memory floor, processor sharing, OOM."""

from __future__ import annotations

import math

from ..domain import FunctionProfile, InstanceState, Request, RequestState, cpu_for_mem


def cpu_demand(profile: FunctionProfile, instance: InstanceState, cpu_per_mib: float) -> int:
    """Millicores one run can use on ``instance``.

    The time curve stops improving at its saturation memory, so a run can use
    at most the CPU attached to that size; below it, the whole allocation.
    """
    sat = profile.time_curve.saturation_mem
    if sat is None:
        return instance.version.cpu
    return min(instance.version.cpu, cpu_for_mem(math.ceil(sat), cpu_per_mib))


def execute(
    request: Request,
    instance: InstanceState,
    profile: FunctionProfile,
    concurrent_cpu_demand: int = 0,
    oom_fraction: float = 0.5,
) -> tuple[float, RequestState]:
    """Duration (seconds) and outcome of running ``request`` on ``instance``.

    An under-sized instance dies after ``oom_fraction`` of the run time at the
    memory floor. Otherwise the nominal time is stretched by
    ``max(1, concurrent_cpu_demand / cpu)``, fixed at admission.
    """
    mem = instance.version.mem
    if mem < profile.mem_required(request.payload):
        return profile.floor_seconds(request.payload) * oom_fraction, RequestState.FAILED_OOM
    sharing = max(1.0, concurrent_cpu_demand / instance.version.cpu)
    return profile.exec_seconds(request.payload, mem) * sharing, RequestState.SUCCEEDED


def billed_ms(duration_us: int) -> int:
    return -(-duration_us // 1000)
