import math

import numpy as np
import pytest

from faasorch.workload import Burst, SyntheticSpec, TraceError, generate, load_trace, merge_streams, write_trace


def test_same_seed_same_stream(linpack):
    spec = SyntheticSpec("linpack", 2.0, 8.5, 0.5, 100, seed=7)
    a, b = generate(spec, linpack), generate(spec, linpack)
    assert [(r.id, r.arrival, r.payload) for r in a] == [(r.id, r.arrival, r.payload) for r in b]


def test_poisson_rate_and_lognormal_payloads(linpack):
    spec = SyntheticSpec("linpack", 5.0, 8.0, 0.3, 2000, seed=1)
    reqs = generate(spec, linpack)
    n = len(reqs)
    # count is Poisson(10000); 4 sigma band
    assert abs(n - 10_000) < 4 * math.sqrt(10_000)
    logs = np.log([r.payload for r in reqs])
    assert abs(logs.mean() - 8.0) < 0.02
    assert abs(logs.std() - 0.3) < 0.02
    assert all(b.arrival >= a.arrival for a, b in zip(reqs, reqs[1:]))


def test_bursts_add_traffic_inside_window(linpack):
    base = SyntheticSpec("linpack", 0.5, 8.0, 0.3, 600, seed=3)
    burst = SyntheticSpec("linpack", 0.5, 8.0, 0.3, 600, seed=3, bursts=(Burst(100, 50, 10.0),))
    in_win = lambda rs: sum(1 for r in rs if 100e6 <= r.arrival < 150e6)
    assert in_win(generate(burst, linpack)) > in_win(generate(base, linpack)) + 300


def test_payloads_clamped_to_domain(linpack):
    reqs = generate(SyntheticSpec("linpack", 5.0, 12.0, 2.0, 50, seed=2), linpack)
    lo, hi = linpack.payload_domain
    assert all(lo <= r.payload <= hi for r in reqs)


def test_merge_orders_by_arrival_then_id(linpack):
    a = generate(SyntheticSpec("linpack", 2.0, 8.0, 0.3, 30, seed=1), linpack)
    b = generate(SyntheticSpec("linpack", 2.0, 8.0, 0.3, 30, seed=2), linpack)
    m = merge_streams([a, b])
    assert len(m) == len(a) + len(b)
    assert [(r.arrival, r.id) for r in m] == sorted((r.arrival, r.id) for r in m)


def test_trace_round_trip(tmp_path, profiles, linpack):
    reqs = generate(SyntheticSpec("linpack", 2.0, 8.0, 0.3, 20, seed=1), linpack)
    path = tmp_path / "t.csv"
    write_trace(reqs, path)
    back = load_trace(path, profiles=profiles)
    assert [(r.arrival, r.payload) for r in back] == [(r.arrival, r.payload) for r in reqs]


def test_trace_clock_scale(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("timestamp_ms,function,payload\n1000,f,5\n")
    assert load_trace(path, clock_scale=0.5)[0].arrival == 500_000


@pytest.mark.parametrize("body, msg", [
    ("ts,function,payload\n", "line 1"),
    ("timestamp_ms,function,payload\n-1,linpack,5\n", "line 2: negative"),
    ("timestamp_ms,function,payload\n5,linpack,5\n4,linpack,5\n", "line 3"),
    ("timestamp_ms,function,payload\n5,nope,5\n", "unknown function 'nope'"),
    ("timestamp_ms,function,payload\n5,linpack\n", "line 2"),
])
def test_trace_errors_name_the_line(tmp_path, profiles, body, msg):
    path = tmp_path / "t.csv"
    path.write_text(body)
    with pytest.raises(TraceError, match=msg):
        load_trace(path, profiles=profiles)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec("f", 0, 1, 1, 10)
