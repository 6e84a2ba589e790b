import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faasorch.domain import FunctionVersion, InstanceState, Phase, Request
from faasorch.provider import (
    ClaimOutcome,
    QueueConfig,
    VersionQueue,
    claim_idle,
    claim_steps,
    enqueue,
    idle_candidates,
    retry_tick,
)

V = FunctionVersion("f", 128, 72, concurrency_limit=2)


def inst(i, conns=0, phase=Phase.READY):
    return InstanceState(f"i{i}", V, phase=phase, active_connections=conns)


def test_least_loaded_first_ties_by_id():
    pool = [inst(2, 1), inst(1, 1), inst(3, 0), inst(4, 2)]
    assert [i.id for i in idle_candidates(pool)] == ["i3", "i1", "i2"]


def test_claim_idle_and_exhaustion():
    pool = [inst(1)]
    assert claim_idle(pool).claimed
    assert claim_idle(pool).claimed
    res = claim_idle(pool)
    assert res.outcome is ClaimOutcome.UNCLAIMED and pool[0].active_connections == 2


def test_cold_instances_not_claimable():
    assert not claim_idle([inst(1, phase=Phase.COLD_STARTING)]).claimed


def test_two_claimers_last_slot_exactly_one_wins():
    pool = [inst(1, conns=1)]
    a, b = claim_steps(pool, claim_retries=0), claim_steps(pool, claim_retries=0)
    assert next(a) is pool[0] and next(b) is pool[0]
    results = []
    for g in (a, b):
        with pytest.raises(StopIteration) as stop:
            next(g)
        results.append(stop.value.value)
    winners = [r for r in results if r[0] is not None]
    assert len(winners) == 1 and pool[0].active_connections == 2


def test_loser_retries_onto_another_instance():
    pool = [inst(1), inst(2, conns=1)]
    a, b = claim_steps(pool, 3), claim_steps(pool, 3)
    assert next(a).id == "i1" and next(b).id == "i1"
    with pytest.raises(StopIteration) as sa:
        next(a)
    assert sa.value.value[0].id == "i1"
    assert next(b).id in ("i1", "i2")
    with pytest.raises(StopIteration) as sb:
        next(b)
    got, failures = sb.value.value
    assert got is not None and failures == 1


def test_enqueue_drops_iff_full():
    q = VersionQueue(capacity=2)
    assert enqueue(Request("a", "f", 1, 0), q).position == 1
    assert enqueue(Request("b", "f", 1, 0), q).position == 2
    assert enqueue(Request("c", "f", 1, 0), q).outcome is ClaimOutcome.DROPPED_QUEUE_FULL
    assert q.drops == 1 and len(q) == 2


def test_zero_capacity_queue_drops_everything():
    assert enqueue(Request("a", "f", 1, 0), VersionQueue(capacity=0)).outcome is ClaimOutcome.DROPPED_QUEUE_FULL


def test_retry_tick_fifo_and_drop_after_max_retries():
    cfg = QueueConfig(max_retries=3)
    q = VersionQueue(capacity=5)
    for name in "abc":
        enqueue(Request(name, "f", 1, 0), q)
    pool = [inst(1, conns=2)]
    for _ in range(2):
        out = retry_tick(q, pool, 0, cfg)
        assert all(r.outcome is ClaimOutcome.RETRIED for _, r in out)
    pool[0].active_connections = 1
    out = retry_tick(q, pool, 0, cfg)
    assert [(r.id, res.outcome) for r, res in out] == [
        ("a", ClaimOutcome.CLAIMED),
        ("b", ClaimOutcome.DROPPED_RETRIES_EXHAUSTED),
        ("c", ClaimOutcome.DROPPED_RETRIES_EXHAUSTED),
    ]
    assert len(q) == 0


def test_queue_config_validation():
    with pytest.raises(ValueError):
        QueueConfig(retry_interval=0)


def interleave(n_ops, n_inst, limit, n_claimers, seed):
    """Randomly interleave claim generators and releases; check invariants after every step."""
    version = FunctionVersion("f", 128, 72, concurrency_limit=limit)
    pool = [InstanceState(f"i{k}", version, phase=Phase.READY) for k in range(n_inst)]
    rng = np.random.default_rng(seed)
    held = {i.id: 0 for i in pool}
    claimers = [None] * n_claimers
    grants = 0
    for _ in range(n_ops):
        k = int(rng.integers(n_claimers + 1))
        if k == n_claimers:
            busy = [i for i in pool if held[i.id]]
            if busy:
                target = busy[int(rng.integers(len(busy)))]
                target.release(0)
                held[target.id] -= 1
            continue
        if claimers[k] is None:
            claimers[k] = claim_steps(pool, 3)
        try:
            next(claimers[k])
        except StopIteration as stop:
            got, _ = stop.value
            claimers[k] = None
            if got is not None:
                held[got.id] += 1
                grants += 1
        for i in pool:
            i.check()
            assert i.active_connections == held[i.id] <= limit
    return grants


def test_interleaved_claims_respect_limits():
    assert interleave(50_000, 3, 2, 6, seed=5) > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_interleaving_property(n_inst, limit, n_claimers, seed):
    interleave(2_000, n_inst, limit, n_claimers, seed)
