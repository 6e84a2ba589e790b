"""Periodic failure scan with additive compensation scaling and a cooldown guard."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, MutableMapping, Sequence

from .domain import FailureReason, FunctionVersion, InstanceState, Phase, ScaleAction, seconds_to_us


@dataclass(frozen=True)
class RedundancyConfig:
    check_interval: float = 15.0
    cooldown: float = 30.0
    failure_states: frozenset = field(
        default_factory=lambda: frozenset({FailureReason.OOM_KILLED, FailureReason.CRASH_LOOP_BACKOFF})
    )
    apply_latency: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "failure_states", frozenset(FailureReason(s) for s in self.failure_states))
        if self.check_interval <= 0:
            raise ValueError("check_interval must be > 0")
        if self.cooldown < 0:
            raise ValueError("cooldown must be >= 0")


def in_cooldown(version: FunctionVersion, now: int, last_action: Mapping[FunctionVersion, int], config: RedundancyConfig) -> bool:
    last = last_action.get(version)
    return last is not None and now - last < seconds_to_us(config.cooldown)


def scan_and_scale(
    versions: Mapping[FunctionVersion, Sequence[InstanceState]],
    now: int,
    last_action: MutableMapping[FunctionVersion, int],
    config: RedundancyConfig = RedundancyConfig(),
) -> list[ScaleAction]:
    """One scan at sim-time ``now`` (microseconds).

    For each version outside its cooldown, scale to current + failing replicas.
    The counted failed instances are listed for removal, so the caller replaces
    them and a later scan does not count the same failure twice.
    """
    actions = []
    for version in sorted(versions, key=lambda v: v.id):
        if in_cooldown(version, now, last_action, config):
            continue
        insts = [i for i in versions[version] if not i.draining]
        failing = [i for i in insts if i.phase is Phase.FAILED and i.failure in config.failure_states]
        if not failing:
            continue
        current = len(insts)
        actions.append(
            ScaleAction(
                version,
                current,
                current + len(failing),
                "redundancy",
                config.apply_latency,
                remove_ids=tuple(i.id for i in failing),
            )
        )
        last_action[version] = now
    return actions
