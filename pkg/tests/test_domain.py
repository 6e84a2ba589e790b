from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from faasorch.domain import (
    FunctionVersion,
    InstanceState,
    InvariantViolation,
    Phase,
    PiecewiseLinear,
    Request,
    RequestState,
    ResourcePrediction,
    can_serve,
    cpu_for_mem,
    is_idle,
    profile_from_dict,
    seconds_to_us,
)


def test_cpu_for_mem_proportional_map():
    assert cpu_for_mem(640) == 360
    assert cpu_for_mem(768) == 432
    assert cpu_for_mem(1280) == 720
    assert cpu_for_mem(1769) == 996


def test_version_identity_ignores_policy_fields():
    a = FunctionVersion("f", 640, 360, concurrency_limit=10)
    b = FunctionVersion("f", 640, 360, concurrency_limit=3, keep_alive=5)
    assert a == b and hash(a) == hash(b)
    assert a.id == "f@640Mi-360m"


def test_version_rejects_non_positive_resources():
    with pytest.raises(ValueError):
        FunctionVersion("f", 0, 100)


def test_idle_predicate():
    v = FunctionVersion("f", 640, 360)
    inst = InstanceState("i", v, phase=Phase.READY, active_connections=9)
    assert is_idle(inst)
    inst.active_connections = 10
    assert not is_idle(inst)
    assert not is_idle(InstanceState("c", v))


def test_can_serve_needs_both_dimensions():
    v = FunctionVersion("f", 640, 360)
    assert can_serve(v, ResourcePrediction(640, 360))
    assert not can_serve(v, ResourcePrediction(641, 100))
    assert not can_serve(v, ResourcePrediction(100, 361))


def test_release_below_zero_is_an_invariant_violation():
    inst = InstanceState("i", FunctionVersion("f", 128, 72), phase=Phase.READY)
    assert inst.compare_and_increment(0)
    inst.release(5)
    with pytest.raises(InvariantViolation):
        inst.release(6)


def test_cas_fails_on_stale_expectation():
    inst = InstanceState("i", FunctionVersion("f", 128, 72), phase=Phase.READY, active_connections=2)
    assert not inst.compare_and_increment(1)
    assert inst.active_connections == 2


def test_request_transitions_are_monotone():
    r = Request("r", "f", 10, arrival=0)
    r.advance(RequestState.PREDICTED, 5)
    with pytest.raises(InvariantViolation):
        r.advance(RequestState.ARRIVED, 6)
    with pytest.raises(InvariantViolation):
        r.advance(RequestState.ROUTED, 4)
    r.finish(RequestState.DROPPED_QUEUE_FULL, 7)
    with pytest.raises(InvariantViolation):
        r.advance(RequestState.EXECUTING, 8)


def test_billed_iff_executed():
    r = Request("r", "f", 10, arrival=0)
    with pytest.raises(InvariantViolation):
        r.finish(RequestState.SUCCEEDED, 3)
    r2 = Request("r2", "f", 10, arrival=0)
    with pytest.raises(InvariantViolation):
        r2.finish(RequestState.DROPPED_QUEUE_FULL, 3, billed_ms=1)


def test_linpack_profile_matches_memory_anchors(linpack):
    # 640 MiB covers payloads up to 6000 and fails beyond
    assert linpack.mem_required(6000) <= 640
    assert linpack.mem_required(8000) > 640
    assert linpack.mem_required(10768) <= 1769 < linpack.mem_required(10800)


def test_exec_below_floor_raises(linpack):
    with pytest.raises(ValueError):
        linpack.exec_seconds(8000, 640)


def test_more_memory_never_slower(linpack):
    assert linpack.exec_seconds(5000, 1769) <= linpack.exec_seconds(5000, 640)
    assert linpack.exec_seconds(5000, 3008) == linpack.exec_seconds(5000, 1769)


def test_profile_rejects_decreasing_memory_curve():
    doc = {
        "name": "x", "slo_seconds": 1, "payload_domain": [0, 10],
        "mem_req_curve": [[0, 200], [10, 100]],
        "time_curve": {"ref_mem": 128, "knots": [[0, 1]]},
    }
    with pytest.raises(ValueError):
        profile_from_dict(doc)


@given(st.lists(st.tuples(st.integers(0, 10_000), st.integers(0, 5000)), min_size=1, max_size=8,
                unique_by=lambda t: t[0]),
       st.floats(-1000, 11_000))
def test_piecewise_linear_stays_within_knot_range(knots, x):
    f = PiecewiseLinear(knots)
    ys = [y for _, y in knots]
    assert min(ys) - 1e-9 <= f(x) <= max(ys) + 1e-9


@given(st.integers(1, 200_000))
def test_cpu_for_mem_is_exact_ceiling(mem):
    c = cpu_for_mem(mem)
    assert c >= Fraction(mem) * Fraction("0.5625") > c - 1


def test_seconds_to_us_rounds():
    assert seconds_to_us(0.04) == 40_000
    assert seconds_to_us(1e-7) == 0
