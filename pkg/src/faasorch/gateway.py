"""Adaptive request balancer: exact-match, scored exploit, or explore by cold start."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence

from .domain import FunctionVersion, InstanceState, Request, ResourcePrediction, can_serve, is_idle


class ExploreMode(str, enum.Enum):
    WINDOW = "Window"
    BERNOULLI = "Bernoulli"


class DecisionKind(str, enum.Enum):
    ROUTE_EXISTING = "RouteExisting"
    COLD_START_NEW = "ColdStartNew"
    ENQUEUE = "Enqueue"


class RandomSource(Protocol):
    def uniform(self, low: float, high: float) -> float: ...

    def random(self) -> float: ...


@dataclass(frozen=True)
class BalancerConfig:
    tolerance: float = 0.20
    explore_mode: ExploreMode = ExploreMode.BERNOULLI
    explore_p: float = 0.20
    balancer_latency: float = 0.040
    max_versions: int = 50

    def __post_init__(self):
        object.__setattr__(self, "explore_mode", ExploreMode(self.explore_mode))
        if not 0 <= self.tolerance < 1:
            raise ValueError("tolerance must be in [0, 1)")
        if not 0 <= self.explore_p < 1:
            raise ValueError("explore_p must be in [0, 1)")
        if self.balancer_latency < 0:
            raise ValueError("balancer_latency must be >= 0")
        if self.max_versions < 1:
            raise ValueError("max_versions must be >= 1")


@dataclass(frozen=True)
class RoutingDecision:
    kind: DecisionKind
    version: Optional[FunctionVersion]
    score_best: Optional[float] = None
    score_cs: Optional[float] = None
    decision_latency: float = 0.0
    explored: bool = False


def score(version: FunctionVersion, pred: ResourcePrediction) -> float:
    """Relative resource surplus of ``version`` over ``pred``; 0 is an exact fit."""
    if not can_serve(version, pred):
        raise ValueError(f"{version.id} cannot serve a {pred.mem} MiB / {pred.cpu} mc prediction")
    return (version.mem - pred.mem) / pred.mem + (version.cpu - pred.cpu) / pred.cpu


def _has_idle(instances: Sequence[InstanceState]) -> bool:
    return any(is_idle(i) and not i.draining for i in instances)


def exact_version(function: str, pred: ResourcePrediction, template: Optional[FunctionVersion] = None) -> FunctionVersion:
    """The version S_name^{R_p} sized exactly to the prediction."""
    if template is None:
        return FunctionVersion(function, pred.mem, pred.cpu)
    return FunctionVersion(function, pred.mem, pred.cpu, template.concurrency_limit, template.keep_alive)


def best_version(
    pred: ResourcePrediction,
    versions: Mapping[FunctionVersion, Sequence[InstanceState]],
    require_idle: bool = True,
) -> Optional[FunctionVersion]:
    """Lowest-scoring servable version; ties go to smaller memory, then id."""
    candidates = [
        v for v, insts in versions.items()
        if can_serve(v, pred) and (not require_idle or _has_idle(insts))
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda v: (score(v, pred), v.mem, v.id))


class Balancer:
    def __init__(self, config: BalancerConfig = BalancerConfig(), concurrency_limit: int = 10, keep_alive: float = 300.0):
        self.config = config
        self._template = FunctionVersion("_", 1, 1, concurrency_limit, keep_alive)

    def _explore(self, s_best: float, rng: RandomSource) -> tuple[bool, Optional[float]]:
        cfg = self.config
        if cfg.explore_mode is ExploreMode.BERNOULLI:
            if cfg.explore_p == 0:
                return False, None
            return rng.random() < cfg.explore_p, None
        lo, hi = s_best * (1 - cfg.tolerance), s_best * (1 + cfg.tolerance)
        if hi <= lo:
            # degenerate window: the existing version is as good as a fresh one
            return False, s_best
        s_cs = rng.uniform(lo, hi)
        return s_cs <= s_best, s_cs

    def route(
        self,
        request: Request,
        pred: ResourcePrediction,
        versions: Mapping[FunctionVersion, Sequence[InstanceState]],
        rng: RandomSource,
        total_versions: Optional[int] = None,
    ) -> RoutingDecision:
        """Pick where ``request`` goes.

        ``versions`` maps each live version of the request's function to its
        instances; ``total_versions`` is the cluster-wide distinct-version
        count used for the deployment cap (defaults to ``len(versions)``).
        """
        latency = self.config.balancer_latency
        exact = exact_version(request.function, pred, self._template)
        exact_live = exact in versions
        n_versions = len(versions) if total_versions is None else total_versions
        can_deploy = exact_live or n_versions < self.config.max_versions

        if exact_live and _has_idle(versions[exact]):
            return RoutingDecision(DecisionKind.ROUTE_EXISTING, exact, 0.0, None, latency)

        f_best = best_version(pred, versions)
        if f_best is not None:
            s_best = score(f_best, pred)
            explore, s_cs = self._explore(s_best, rng)
            if explore and can_deploy:
                return RoutingDecision(DecisionKind.COLD_START_NEW, exact, s_best, s_cs, latency, explored=True)
            return RoutingDecision(DecisionKind.ROUTE_EXISTING, f_best, s_best, s_cs, latency)

        if can_deploy:
            return RoutingDecision(DecisionKind.COLD_START_NEW, exact, None, None, latency)
        fallback = best_version(pred, versions, require_idle=False)
        return RoutingDecision(DecisionKind.ENQUEUE, fallback, None, None, latency)
