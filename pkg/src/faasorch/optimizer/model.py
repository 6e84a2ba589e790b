"""Instance-count ILP: model data, construction from a cluster snapshot, and
an independent plan validator.

Objective (minimised)::

    alpha * sum_v x_v * cost_v
  + beta  * sum_r (demand_r - served_r) * penalty_r
  - gamma * sum_r served_r * utility_r
  + cs_weight * sum_v max(0, x_v - live_v) * cs_penalty      (off by default)

with served_r = sum_v y_rv over compatible pairs, subject to cluster CPU and
memory capacity, sum_r y_rv <= kappa_v * x_v, served_r <= demand_r and
x_v >= lower_v.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from ..domain import ClusterCapacity, FunctionVersion, ResourcePrediction, can_serve


@dataclass(frozen=True)
class OptimizerConfig:
    interval: float = 60.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    throughput_per_min: float = 10.0
    penalty_factor: float = 2.0
    utility_factor: float = 1.0
    cs_weight: float = 0.0
    cs_penalty: float = 0.0
    max_instances: int = 100
    node_limit: int = 20_000
    time_budget: Optional[float] = None
    exhaustive_threshold: int = 0
    reserved_cpu: int = 750
    reserved_mem: int = 1168
    solve_latency: float = 1.45
    apply_latency: float = 0.2

    def __post_init__(self):
        for name in ("interval", "throughput_per_min"):
            if getattr(self, name) <= 0:
                raise ValueError(f"optimizer.{name} must be > 0")
        for name in ("alpha", "beta", "gamma", "penalty_factor", "utility_factor", "cs_weight", "cs_penalty"):
            if getattr(self, name) < 0:
                raise ValueError(f"optimizer.{name} must be >= 0")
        if self.node_limit < 1:
            raise ValueError("optimizer.node_limit must be >= 1")

    @property
    def kappa(self) -> int:
        """Requests one instance is credited with per optimisation interval."""
        return int(math.floor(self.throughput_per_min * self.interval / 60.0 + 1e-9))


@dataclass(frozen=True)
class VersionTerm:
    version: FunctionVersion
    cost: float
    kappa: int
    lower: int = 0
    upper: Optional[int] = None
    live: int = 0

    @property
    def cpu(self) -> int:
        return self.version.cpu

    @property
    def mem(self) -> int:
        return self.version.mem


@dataclass(frozen=True)
class DemandClass:
    id: str
    function: str
    required: ResourcePrediction
    demand: int
    penalty: float
    utility: float

    def __post_init__(self):
        if self.demand < 0 or self.penalty < 0 or self.utility < 0:
            raise ValueError(f"class {self.id}: demand, penalty and utility must be >= 0")


@dataclass
class IlpModel:
    versions: list[VersionTerm]
    classes: list[DemandClass]
    capacity_cpu: int
    capacity_mem: int
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    cs_weight: float = 0.0
    cs_penalty: float = 0.0
    infeasible_reason: Optional[str] = None
    compat: list[list[bool]] = field(default_factory=list)

    def __post_init__(self):
        if not self.compat:
            self.compat = [
                [v.version.function == c.function and can_serve(v.version, c.required) for v in self.versions]
                for c in self.classes
            ]
        for term in self.versions:
            for val in (term.cost, term.kappa, term.lower):
                if not math.isfinite(val) or val < 0:
                    raise ValueError(f"{term.version.id}: coefficients must be finite and >= 0")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(r, v) for r in range(len(self.classes)) for v in range(len(self.versions)) if self.compat[r][v]]

    def upper_bound(self, v: int) -> int:
        term = self.versions[v]
        ub = min(self.capacity_cpu // term.cpu, self.capacity_mem // term.mem) if self.capacity_cpu >= 0 and self.capacity_mem >= 0 else 0
        if term.upper is not None:
            ub = min(ub, term.upper)
        return max(ub, 0)

    def class_weight(self, r: int) -> Fraction:
        c = self.classes[r]
        return Fraction(self.beta) * Fraction(c.penalty) + Fraction(self.gamma) * Fraction(c.utility)


class PlanStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_WITH_GAP = "FeasibleWithGap"
    INFEASIBLE = "Infeasible"


@dataclass
class OptimizerPlan:
    x_star: dict[FunctionVersion, int]
    y_assign: dict[tuple[str, FunctionVersion], int]
    objective: Fraction
    breakdown: dict[str, Fraction]
    status: PlanStatus
    gap: float = 0.0
    nodes: int = 0
    reason: Optional[str] = None

    @property
    def objective_value(self) -> float:
        return float(self.objective)


def objective_terms(model: IlpModel, x: Sequence[int], served: Sequence[int]) -> dict[str, Fraction]:
    """Exact objective breakdown for an integer point."""
    cost = sum((Fraction(t.cost) * xv for t, xv in zip(model.versions, x)), Fraction(0))
    unserved = sum(
        (Fraction(c.penalty) * (c.demand - s) for c, s in zip(model.classes, served)), Fraction(0)
    )
    utility = sum((Fraction(c.utility) * s for c, s in zip(model.classes, served)), Fraction(0))
    cold = sum((max(0, xv - t.live) for t, xv in zip(model.versions, x)), 0)
    return {
        "cost": Fraction(model.alpha) * cost,
        "penalty": Fraction(model.beta) * unserved,
        "utility": -Fraction(model.gamma) * utility,
        "cold_start": Fraction(model.cs_weight) * Fraction(model.cs_penalty) * cold,
    }


def total(terms: Mapping[str, Fraction]) -> Fraction:
    return sum(terms.values(), Fraction(0))


def check_plan(model: IlpModel, x: Sequence[int], y: Mapping[tuple[int, int], int]) -> list[str]:
    """Every violated constraint of (x, y), named; empty when feasible.

    Deliberately shares no code with the solver.
    """
    problems = []
    if len(x) != len(model.versions):
        return [f"x has {len(x)} entries for {len(model.versions)} versions"]
    for v, (term, xv) in enumerate(zip(model.versions, x)):
        if int(xv) != xv or xv < 0:
            problems.append(f"x[{term.version.id}]={xv} is not a non-negative integer")
        if xv < term.lower:
            problems.append(f"x[{term.version.id}]={xv} below lower bound {term.lower}")
        if term.upper is not None and xv > term.upper:
            problems.append(f"x[{term.version.id}]={xv} above upper bound {term.upper}")
    if sum(t.cpu * xv for t, xv in zip(model.versions, x)) > model.capacity_cpu:
        problems.append("cpu capacity exceeded")
    if sum(t.mem * xv for t, xv in zip(model.versions, x)) > model.capacity_mem:
        problems.append("memory capacity exceeded")
    load = [0] * len(model.versions)
    served = [0] * len(model.classes)
    for (r, v), val in y.items():
        if int(val) != val or val < 0:
            problems.append(f"y[{r},{v}]={val} is not a non-negative integer")
        if val and not model.compat[r][v]:
            problems.append(f"y[{r},{v}]={val} assigns class {model.classes[r].id} to incompatible version")
        load[v] += val
        served[r] += val
    for v, term in enumerate(model.versions):
        if load[v] > term.kappa * x[v]:
            problems.append(f"throughput of {term.version.id} exceeded: {load[v]} > {term.kappa}*{x[v]}")
    for r, c in enumerate(model.classes):
        if served[r] > c.demand:
            problems.append(f"class {c.id} over-served: {served[r]} > {c.demand}")
    return problems


# -- construction from a cluster snapshot ---------------------------------


@dataclass(frozen=True)
class DemandObservation:
    """Requests seen last interval for one (function, predicted config)."""

    function: str
    required: ResourcePrediction
    count: int
    mean_exec_seconds: float


@dataclass
class ClusterSnapshot:
    capacity: ClusterCapacity
    live: dict[FunctionVersion, int]
    busy: dict[FunctionVersion, int]
    demand: list[DemandObservation]
    served_recently: set
    max_versions: int = 50
    concurrency_limit: int = 10
    keep_alive: float = 300.0


def instance_cost(version: FunctionVersion, config: OptimizerConfig, price_per_gb_s: float) -> float:
    return version.mem / 1024.0 * config.interval * price_per_gb_s


def build_model(snapshot: ClusterSnapshot, config: OptimizerConfig, price_per_gb_s: float) -> IlpModel:
    """Translate last-interval demand and live state into an ILP.

    Candidate versions are every live version plus the exactly-sized version
    for each observed demand class, while the distinct-version cap allows.
    """
    cap_cpu = snapshot.capacity.total_cpu - config.reserved_cpu
    cap_mem = snapshot.capacity.total_mem - config.reserved_mem
    reason = None
    if cap_cpu < 0 or cap_mem < 0:
        reason = "capacity after reserving control-plane overheads is negative"

    versions: list[FunctionVersion] = sorted(snapshot.live, key=lambda v: v.id)
    known = set(versions)
    for obs in sorted(snapshot.demand, key=lambda o: (o.function, o.required.mem, o.required.cpu)):
        v = FunctionVersion(
            obs.function, obs.required.mem, obs.required.cpu, snapshot.concurrency_limit, snapshot.keep_alive
        )
        if v not in known and len(known) < snapshot.max_versions and obs.count > 0:
            versions.append(v)
            known.add(v)

    kappa = config.kappa
    terms = []
    for v in versions:
        lower = 1 if v in snapshot.served_recently else 0
        terms.append(
            VersionTerm(
                version=v,
                cost=instance_cost(v, config, price_per_gb_s),
                kappa=kappa,
                lower=lower,
                upper=config.max_instances,
                live=snapshot.live.get(v, 0),
            )
        )
    classes = []
    for obs in snapshot.demand:
        exec_cost = obs.required.mem / 1024.0 * obs.mean_exec_seconds * price_per_gb_s
        classes.append(
            DemandClass(
                id=f"{obs.function}@{obs.required.mem}Mi",
                function=obs.function,
                required=obs.required,
                demand=obs.count,
                penalty=exec_cost * config.penalty_factor,
                utility=exec_cost * config.utility_factor,
            )
        )
    return IlpModel(
        versions=terms,
        classes=classes,
        capacity_cpu=cap_cpu,
        capacity_mem=cap_mem,
        alpha=config.alpha,
        beta=config.beta,
        gamma=config.gamma,
        cs_weight=config.cs_weight,
        cs_penalty=config.cs_penalty,
        infeasible_reason=reason,
    )


def model_to_dict(model: IlpModel) -> dict:
    return {
        "capacity": {"cpu": model.capacity_cpu, "mem": model.capacity_mem},
        "weights": {"alpha": model.alpha, "beta": model.beta, "gamma": model.gamma,
                    "cs_weight": model.cs_weight, "cs_penalty": model.cs_penalty},
        "versions": [
            {"id": t.version.id, "cpu": t.cpu, "mem": t.mem, "cost": t.cost, "kappa": t.kappa,
             "lower": t.lower, "upper": t.upper, "live": t.live}
            for t in model.versions
        ],
        "classes": [
            {"id": c.id, "mem": c.required.mem, "cpu": c.required.cpu, "demand": c.demand,
             "penalty": c.penalty, "utility": c.utility}
            for c in model.classes
        ],
        "infeasible_reason": model.infeasible_reason,
    }


def plan_to_dict(plan: OptimizerPlan) -> dict:
    return {
        "status": plan.status.value,
        "gap": plan.gap,
        "nodes": plan.nodes,
        "reason": plan.reason,
        "objective": float(plan.objective),
        "breakdown": {k: float(v) for k, v in plan.breakdown.items()},
        "x_star": {v.id: n for v, n in sorted(plan.x_star.items(), key=lambda kv: kv[0].id)},
        "y_assign": {f"{r}->{v.id}": n for (r, v), n in sorted(plan.y_assign.items(), key=lambda kv: (kv[0][0], kv[0][1].id)) if n},
    }
