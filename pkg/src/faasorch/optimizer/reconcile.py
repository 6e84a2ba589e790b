"""Turn a plan's target counts into scale actions against the live cluster."""

from __future__ import annotations

from typing import Collection, Mapping, Sequence

from ..domain import FunctionVersion, InstanceState, Phase, ScaleAction
from .model import OptimizerPlan, PlanStatus


def serving(instances: Sequence[InstanceState]) -> list[InstanceState]:
    """Instances that count towards a version's replicas (not failed, not draining)."""
    return [i for i in instances if i.phase is not Phase.FAILED and not i.draining]


def reconcile(
    plan: OptimizerPlan,
    live: Mapping[FunctionVersion, Sequence[InstanceState]],
    apply_latency: float = 0.2,
    suppress_down: Collection[FunctionVersion] = (),
) -> list[ScaleAction]:
    """Scale-ups deploy fresh (cold) instances. Scale-downs remove empty Ready
    instances first, oldest use first; any remaining excess is drained, i.e.
    excluded from new claims and removed once its last request finishes.
    """
    if plan.status is PlanStatus.INFEASIBLE:
        raise ValueError("cannot reconcile an infeasible plan")
    actions = []
    for version in sorted(plan.x_star, key=lambda v: v.id):
        target = plan.x_star[version]
        insts = serving(live.get(version, ()))
        current = len(insts)
        if target > current:
            actions.append(ScaleAction(version, current, target, "optimizer", apply_latency))
        elif target < current and version not in suppress_down:
            excess = current - target
            empty = sorted(
                (i for i in insts if i.phase is Phase.READY and i.active_connections == 0),
                key=lambda i: (i.last_used, i.id),
            )
            remove = empty[:excess]
            busy = sorted(
                (i for i in insts if i.phase is Phase.READY and i.active_connections > 0),
                key=lambda i: (i.active_connections, i.id),
            )
            drain = busy[: excess - len(remove)]
            if remove or drain:
                actions.append(
                    ScaleAction(
                        version,
                        current,
                        current - len(remove) - len(drain),
                        "optimizer",
                        apply_latency,
                        remove_ids=tuple(i.id for i in remove),
                        drain_ids=tuple(i.id for i in drain),
                    )
                )
    return actions
