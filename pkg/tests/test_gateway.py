import numpy as np
import pytest

from faasorch.domain import FunctionVersion, InstanceState, Phase, Request, ResourcePrediction
from faasorch.gateway import Balancer, BalancerConfig, DecisionKind, ExploreMode, best_version, score

PRED = ResourcePrediction(640, 360)


def ver(mem, cpu=None):
    return FunctionVersion("linpack", mem, cpu if cpu is not None else int(mem * 0.5625 + 0.9999))


def ready(v, conns=0, n=0):
    return InstanceState(f"{v.id}#{n}", v, phase=Phase.READY, active_connections=conns)


class Fixed:
    """Random source returning preset values."""

    def __init__(self, u=0.0, r=0.0):
        self.u, self.r = u, r

    def uniform(self, lo, hi):
        return lo + self.u * (hi - lo)

    def random(self):
        return self.r


REQ = Request("r", "linpack", 6000, 0)


def test_score_zero_for_exact_fit():
    assert score(ver(640, 360), PRED) == 0
    assert score(ver(1280, 720), PRED) == pytest.approx(2.0)


def test_exact_idle_is_exploited_without_randomness():
    exact, big = ver(640, 360), ver(1280, 720)
    versions = {exact: [ready(exact)], big: [ready(big)]}
    d = Balancer().route(REQ, PRED, versions, Fixed(r=0.0))
    assert d.kind is DecisionKind.ROUTE_EXISTING and d.version == exact and not d.explored


def test_scored_exploit_picks_lowest_surplus():
    a, b = ver(768, 432), ver(1280, 720)
    versions = {b: [ready(b)], a: [ready(a)]}
    d = Balancer().route(REQ, PRED, versions, Fixed(r=0.99))
    assert d.kind is DecisionKind.ROUTE_EXISTING and d.version == a
    assert d.score_best == pytest.approx(0.4)


def test_bernoulli_explore_cold_starts_exact_version():
    a = ver(768, 432)
    d = Balancer().route(REQ, PRED, {a: [ready(a)]}, Fixed(r=0.1))
    assert d.kind is DecisionKind.COLD_START_NEW and d.version == ver(640, 360) and d.explored


def test_window_explore_when_draw_below_best():
    a = ver(768, 432)
    cfg = BalancerConfig(explore_mode=ExploreMode.WINDOW)
    lo = Balancer(cfg).route(REQ, PRED, {a: [ready(a)]}, Fixed(u=0.25))
    hi = Balancer(cfg).route(REQ, PRED, {a: [ready(a)]}, Fixed(u=0.75))
    assert lo.kind is DecisionKind.COLD_START_NEW and lo.score_cs < lo.score_best
    assert hi.kind is DecisionKind.ROUTE_EXISTING and hi.version == a


def test_zero_tolerance_window_always_exploits():
    a = ver(768, 432)
    cfg = BalancerConfig(explore_mode=ExploreMode.WINDOW, tolerance=0.0)
    d = Balancer(cfg).route(REQ, PRED, {a: [ready(a)]}, Fixed(u=0.0))
    assert d.kind is DecisionKind.ROUTE_EXISTING


def test_busy_versions_are_not_candidates():
    a = ver(768, 432)
    d = Balancer().route(REQ, PRED, {a: [ready(a, conns=10)]}, Fixed(r=0.99))
    assert d.kind is DecisionKind.COLD_START_NEW and d.version == ver(640, 360) and not d.explored


def test_undersized_versions_never_chosen():
    small = ver(512, 288)
    assert best_version(PRED, {small: [ready(small)]}) is None


def test_version_cap_falls_back_to_queue():
    big = ver(1280, 720)
    cfg = BalancerConfig(max_versions=1)
    d = Balancer(cfg).route(REQ, PRED, {big: [ready(big, conns=10)]}, Fixed(r=0.99))
    assert d.kind is DecisionKind.ENQUEUE and d.version == big


def test_version_cap_with_nothing_servable_enqueues_nowhere():
    small = ver(512, 288)
    d = Balancer(BalancerConfig(max_versions=1)).route(REQ, PRED, {small: [ready(small)]}, Fixed())
    assert d.kind is DecisionKind.ENQUEUE and d.version is None


def test_version_cap_blocks_exploration():
    a = ver(768, 432)
    d = Balancer(BalancerConfig(max_versions=1)).route(REQ, PRED, {a: [ready(a)]}, Fixed(r=0.0))
    assert d.kind is DecisionKind.ROUTE_EXISTING


def test_draining_instances_are_not_idle():
    exact = ver(640, 360)
    inst = ready(exact)
    inst.draining = True
    d = Balancer().route(REQ, PRED, {exact: [inst]}, Fixed(r=0.99))
    assert d.kind is DecisionKind.COLD_START_NEW


def test_tie_break_prefers_smaller_memory():
    # +128 MiB and +72 mc are both a 0.2 surplus over 640 MiB / 360 mc
    a, b = ver(768, 360), ver(640, 432)
    assert score(a, PRED) == pytest.approx(score(b, PRED))
    assert best_version(PRED, {a: [ready(a)], b: [ready(b)]}) == b


@pytest.mark.parametrize("mode, p, expected", [(ExploreMode.WINDOW, 0.2, 0.5), (ExploreMode.BERNOULLI, 0.2, 0.2)])
def test_explore_frequency(mode, p, expected):
    a = ver(768, 432)
    bal = Balancer(BalancerConfig(explore_mode=mode, explore_p=p))
    rng = np.random.default_rng(2024)
    n = 20_000
    hits = sum(bal.route(REQ, PRED, {a: [ready(a)]}, rng).explored for _ in range(n))
    assert abs(hits / n - expected) < 0.015
