"""Idle-first instance claiming and the per-version finite retry queue.

Claims follow a two-stage optimistic protocol: snapshot the idle set, then
compare-and-swap the chosen instance's connection counter. ``claim_steps`` is
written as a generator that yields between the two stages so an interleaving
harness can run several claimers against the same instances.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Generator, Iterable, Optional

from .domain import InstanceState, Request, is_idle


class ClaimOutcome(str, enum.Enum):
    CLAIMED = "Claimed"
    UNCLAIMED = "Unclaimed"
    RETRIED = "Retried"
    QUEUED = "QueuedAt"
    DROPPED_QUEUE_FULL = "DroppedQueueFull"
    DROPPED_RETRIES_EXHAUSTED = "DroppedRetriesExhausted"


@dataclass(frozen=True)
class ClaimResult:
    outcome: ClaimOutcome
    instance: Optional[InstanceState] = None
    times: int = 0
    position: Optional[int] = None

    @property
    def claimed(self) -> bool:
        return self.outcome is ClaimOutcome.CLAIMED


@dataclass(frozen=True)
class QueueConfig:
    capacity: int = 10
    retry_interval: float = 0.010
    max_retries: int = 10
    claim_retries: int = 3

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("queue capacity must be >= 0")
        if self.retry_interval <= 0:
            raise ValueError("retry_interval must be > 0")
        if self.max_retries < 0 or self.claim_retries < 0:
            raise ValueError("retry counts must be >= 0")


def idle_candidates(instances: Iterable[InstanceState]) -> list[InstanceState]:
    """Claimable instances, least loaded first, ties by id."""
    idle = [i for i in instances if is_idle(i) and not i.draining]
    idle.sort(key=lambda i: (i.active_connections, i.id))
    return idle


def claim_steps(
    instances: list[InstanceState], claim_retries: int = 3
) -> Generator[InstanceState, None, tuple[Optional[InstanceState], int]]:
    """Optimistic claim; yields the targeted instance between snapshot and CAS.

    Returns ``(instance or None, failed CAS attempts)``.
    """
    failures = 0
    for _ in range(claim_retries + 1):
        idle = idle_candidates(instances)
        if not idle:
            break
        target = idle[0]
        expected = target.active_connections
        yield target
        if target.compare_and_increment(expected):
            return target, failures
        failures += 1
    return None, failures


def claim_idle(instances: list[InstanceState], claim_retries: int = 3) -> ClaimResult:
    gen = claim_steps(instances, claim_retries)
    try:
        while True:
            next(gen)
    except StopIteration as stop:
        inst, failures = stop.value
    if inst is None:
        return ClaimResult(ClaimOutcome.UNCLAIMED, times=failures)
    return ClaimResult(ClaimOutcome.CLAIMED, inst, times=failures)


def release(instance: InstanceState, now: int) -> None:
    instance.release(now)


@dataclass
class QueueEntry:
    request: Request
    enqueued_at: int
    retries: int = 0


@dataclass
class VersionQueue:
    """Bounded FIFO of requests waiting on one function version."""

    capacity: int = 10
    entries: deque = field(default_factory=deque)
    drops: int = 0
    max_len: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def requests(self) -> list[Request]:
        return [e.request for e in self.entries]


def enqueue(request: Request, queue: VersionQueue, now: int = 0) -> ClaimResult:
    if len(queue.entries) >= queue.capacity:
        queue.drops += 1
        return ClaimResult(ClaimOutcome.DROPPED_QUEUE_FULL)
    queue.entries.append(QueueEntry(request, now))
    queue.max_len = max(queue.max_len, len(queue.entries))
    return ClaimResult(ClaimOutcome.QUEUED, position=len(queue.entries))


def retry_tick(
    queue: VersionQueue,
    instances: list[InstanceState],
    now: int,
    config: QueueConfig = QueueConfig(),
) -> list[tuple[Request, ClaimResult]]:
    """One retry pass over the queue in FIFO order.

    A request is dropped on its ``max_retries``-th failed retry, so residence
    never exceeds ``max_retries * retry_interval`` past the first tick.
    """
    results = []
    kept: deque = deque()
    while queue.entries:
        entry = queue.entries.popleft()
        res = claim_idle(instances, config.claim_retries)
        if res.claimed:
            results.append((entry.request, res))
            continue
        entry.retries += 1
        if entry.retries >= config.max_retries:
            results.append(
                (entry.request, ClaimResult(ClaimOutcome.DROPPED_RETRIES_EXHAUSTED, times=entry.retries))
            )
            continue
        kept.append(entry)
        results.append((entry.request, ClaimResult(ClaimOutcome.RETRIED, times=entry.retries)))
    queue.entries = kept
    return results
