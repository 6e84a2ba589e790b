"""Single-threaded discrete-event loop wiring predictor, balancer, provider,
execution, redundancy and the optimiser together.

Events are ordered by (time, kind priority, insertion sequence), so a run is a
pure function of (config, workload, seed).
"""

from __future__ import annotations

import dataclasses
import enum
import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from ..domain import (
    FailureReason,
    FunctionProfile,
    FunctionVersion,
    InstanceState,
    InvariantViolation,
    Phase,
    Request,
    RequestState,
    ResourcePrediction,
    ScaleAction,
    cpu_for_mem,
    is_idle,
    seconds_to_us,
)
from ..gateway import Balancer, DecisionKind, best_version
from ..metrics import MetricsReport, compute_report, request_cost
from ..optimizer import (
    ClusterSnapshot,
    DemandObservation,
    PlanStatus,
    build_model,
    model_to_dict,
    plan_to_dict,
    reconcile,
    serving,
    solve,
)
from ..predictor import Predictor
from ..provider import ClaimOutcome, VersionQueue, claim_idle, enqueue, retry_tick
from ..redundancy import in_cooldown, scan_and_scale
from .eventlog import EventLog
from .execution import billed_ms, cpu_demand, execute


@dataclass(frozen=True)
class Prewarm:
    function: str
    mem: int
    count: int = 1


@dataclass(frozen=True)
class Fault:
    """Force ``count`` Ready instances of a version into a failure state at ``at`` seconds."""

    at: float
    function: str
    mem: int
    count: int = 1
    reason: str = "OOMKilled"

    def __post_init__(self):
        FailureReason(self.reason)
        if self.at < 0 or self.count < 1:
            raise ValueError(f"bad fault {self}")


@dataclass(frozen=True)
class SimConfig:
    concurrency_limit: int = 10
    keep_alive: float = 300.0
    max_instances: int = 100
    baseline_mem: int = 1769
    baseline_cpu: int = 1000
    baseline_initial: int = 1
    oom_fraction: float = 0.5
    cpu_per_mib: float = 0.5625
    strict: bool = False
    prewarm: tuple = ()
    faults: tuple = ()

    def __post_init__(self):
        if self.concurrency_limit < 1:
            raise ValueError("sim.concurrency_limit must be >= 1")
        if self.keep_alive < 0:
            raise ValueError("sim.keep_alive must be >= 0")
        if self.max_instances < 1:
            raise ValueError("sim.max_instances must be >= 1")
        if self.baseline_initial < 0:
            raise ValueError("sim.baseline_initial must be >= 0")
        if not 0 < self.oom_fraction <= 1:
            raise ValueError("sim.oom_fraction must be in (0, 1]")
        if self.cpu_per_mib <= 0:
            raise ValueError("sim.cpu_per_mib must be > 0")


class Variant(str, enum.Enum):
    BASELINE = "baseline"
    MVQ = "mvq"
    MEVQ = "mevq"
    MOEVQ = "moevq"

    @property
    def label(self) -> str:
        return {"baseline": "BaselineStatic", "mvq": "MVQ", "mevq": "MEVQ", "moevq": "MOEVQ"}[self.value]

    @property
    def redundancy(self) -> bool:
        return self in (Variant.MEVQ, Variant.MOEVQ)

    @property
    def optimizer(self) -> bool:
        return self is Variant.MOEVQ


class Ev(enum.IntEnum):
    """Event kinds; the value is the tie-break priority at equal times."""

    COLD_START_DONE = 0
    EXECUTION_DONE = 1
    INSTANCE_RESTART = 2
    FAULT = 3
    APPLY_SCALE = 4
    INSTANCE_EXPIRED = 5
    QUEUE_RETRY_TICK = 6
    ROUTING_DONE = 7
    PREDICTION_DONE = 8
    ARRIVAL = 9
    REDUNDANCY_TICK = 10
    OPTIMIZER_TICK = 11
    PREDICTOR_REFRESH_TICK = 12


@dataclass
class _Run:
    request: Request
    start: int
    demand: int
    outcome: RequestState


@dataclass
class RunResult:
    variant: Variant
    seed: int
    log: EventLog
    report: MetricsReport
    streaming_cost: Fraction
    plans: list = field(default_factory=list)


class Simulation:
    def __init__(self, cfg: Any, requests: Sequence[Request], variant: Variant,
                 seed: int, profiles: Mapping[str, FunctionProfile]):
        variant = Variant(variant)
        missing = sorted({r.function for r in requests} - set(profiles))
        if missing:
            raise ValueError(f"missing profile for function {missing[0]!r}")
        self.cfg = cfg
        self.sim: SimConfig = cfg.sim
        self.variant = variant
        self.seed = seed
        self.profiles = profiles
        self.log = EventLog()
        self.now = 0
        self._heap: list = []
        self._seq = 0

        streams = np.random.SeedSequence(seed).spawn(3)
        self.route_rng = np.random.default_rng(streams[0])
        self.cold_rng = np.random.default_rng(streams[1])
        pred_seed = int(streams[2].generate_state(1)[0])
        self.predictor = Predictor(dataclasses.replace(cfg.predictor, seed=pred_seed), self.sim.cpu_per_mib)
        self.balancer = Balancer(cfg.balancer, self.sim.concurrency_limit, self.sim.keep_alive)

        self.cap_cpu = cfg.cluster.total_cpu - cfg.optimizer.reserved_cpu
        self.cap_mem = cfg.cluster.total_mem - cfg.optimizer.reserved_mem
        self.used_cpu = 0
        self.used_mem = 0

        self.instances: dict[str, InstanceState] = {}
        self.by_version: dict[FunctionVersion, list[InstanceState]] = {}
        self.per_function: dict[str, int] = {}
        self.queues: dict[FunctionVersion, VersionQueue] = {}
        self.tick_pending: set = set()
        self.running: dict[str, dict[str, _Run]] = {}
        self.attached: dict[str, list[Request]] = {}
        self.incarnation: dict[str, int] = {}
        self._inst_counter = 0

        self.requests = [
            Request(r.id, r.function, r.payload, r.arrival, r.deadline_slo or profiles[r.function].slo_seconds)
            for r in sorted(requests, key=lambda r: (r.arrival, r.id))
        ]
        self.outstanding = len(self.requests)
        self.terminal = 0
        self.predictions: dict[str, ResourcePrediction] = {}
        self.routed_at: dict[str, int] = {}
        self.exec_start: dict[str, int] = {}
        self.streaming_cost = Fraction(0)

        self.demand: dict[tuple, list] = {}
        self.last_served: dict[FunctionVersion, int] = {}
        self.lower_bound: set = set()
        self.scale_last: dict[FunctionVersion, int] = {}
        self.plans: list[dict] = []
        self.dump_plans = getattr(cfg, "dump_plans", False)

    # -- scheduling -------------------------------------------------------

    def push(self, at: int, kind: Ev, *payload) -> None:
        heapq.heappush(self._heap, (at, int(kind), self._seq, payload))
        self._seq += 1

    def record(self, kind: str, request_id: Optional[str] = None, version: Optional[str] = None, **detail):
        self.log.append(self.now, kind, request_id, version, **detail)

    @property
    def active(self) -> bool:
        return self.outstanding > 0

    # -- instances --------------------------------------------------------

    def version(self, function: str, mem: int, cpu: Optional[int] = None) -> FunctionVersion:
        if cpu is None:
            cpu = cpu_for_mem(mem, self.sim.cpu_per_mib)
        return FunctionVersion(function, mem, cpu, self.sim.concurrency_limit, self.sim.keep_alive)

    def can_create(self, v: FunctionVersion) -> bool:
        return (
            self.used_cpu + v.cpu <= self.cap_cpu
            and self.used_mem + v.mem <= self.cap_mem
            and self.per_function.get(v.function, 0) < self.sim.max_instances
        )

    def create_instance(self, v: FunctionVersion, source: str, delay_us: int, warm: bool = False) -> InstanceState:
        self._inst_counter += 1
        inst = InstanceState(f"{v.id}#{self._inst_counter}", v, created_at=self.now)
        self.instances[inst.id] = inst
        self.by_version.setdefault(v, []).append(inst)
        self.per_function[v.function] = self.per_function.get(v.function, 0) + 1
        self.used_cpu += v.cpu
        self.used_mem += v.mem
        self.running[inst.id] = {}
        self.attached[inst.id] = []
        self.incarnation[inst.id] = 0
        if warm:
            inst.mark_ready(self.now)
            self.record("InstanceStarted", version=v.id, instance=inst.id, function=v.function,
                        mem=v.mem, cpu=v.cpu, source=source, ready_at_ms=self.now / 1000)
            self.schedule_expiry(inst)
        else:
            ready = self.now + delay_us + self.cfg.latency.cold_start_us(self.cold_rng)
            self.record("InstanceStarted", version=v.id, instance=inst.id, function=v.function,
                        mem=v.mem, cpu=v.cpu, source=source, ready_at_ms=ready / 1000)
            self.push(ready, Ev.COLD_START_DONE, inst.id, 0)
        return inst

    def remove_instance(self, inst: InstanceState, reason: str) -> None:
        if self.running[inst.id] or inst.active_connections:
            raise InvariantViolation(f"removing busy instance {inst.id}")
        v = inst.version
        del self.instances[inst.id]
        self.by_version[v].remove(inst)
        self.per_function[v.function] -= 1
        self.used_cpu -= v.cpu
        self.used_mem -= v.mem
        del self.running[inst.id]
        for req in self.attached.pop(inst.id):
            self.enqueue_request(req, v)
        self.incarnation.pop(inst.id)
        if not self.by_version[v] and not self.queues.get(v):
            del self.by_version[v]
        self.record("InstanceRemoved", version=v.id, instance=inst.id, function=v.function, reason=reason)

    def schedule_expiry(self, inst: InstanceState) -> None:
        if inst.active_connections == 0 and inst.phase is Phase.READY:
            self.push(inst.last_used + seconds_to_us(self.sim.keep_alive) + 1, Ev.INSTANCE_EXPIRED,
                      inst.id, inst.last_used)

    def fail_instance(self, inst: InstanceState, reason: FailureReason) -> None:
        inst.fail(reason)
        self.incarnation[inst.id] += 1
        self.record("InstanceFailed", version=inst.version.id, instance=inst.id,
                    function=inst.version.function, reason=reason.value)
        for rid in sorted(self.running[inst.id]):
            run = self.running[inst.id].pop(rid)
            inst.release(self.now)
            self.finish(run.request, RequestState.FAILED_OOM, inst, billed_ms(self.now - run.start))
        self.push(self.now + seconds_to_us(self.cfg.latency.restart_backoff), Ev.INSTANCE_RESTART,
                  inst.id, self.incarnation[inst.id])

    # -- request lifecycle ------------------------------------------------

    def finish(self, req: Request, state: RequestState, inst: Optional[InstanceState] = None,
               billed: Optional[int] = None) -> None:
        req.finish(state, self.now, billed)
        mem = inst.version.mem if billed is not None else None
        if billed is not None:
            self.streaming_cost += request_cost(mem, billed, self.cfg.pricing)
        start = self.exec_start.get(req.id)
        routed = self.routed_at.get(req.id)
        self.record(
            "RequestDone", req.id, inst.version.id if inst is not None else None,
            function=req.function, state=state.value, arrival_ms=req.arrival / 1000,
            routed_ms=None if routed is None else routed / 1000,
            exec_start_ms=None if start is None else start / 1000,
            slo_ms=seconds_to_us(req.deadline_slo) / 1000, billed_ms=billed, mem=mem,
            instance=inst.id if inst is not None else None,
        )
        self.terminal += 1
        self.outstanding -= 1

    def start_execution(self, req: Request, inst: InstanceState) -> None:
        """Run ``req`` on ``inst``, whose connection slot is already claimed."""
        profile = self.profiles[req.function]
        mine = cpu_demand(profile, inst, self.sim.cpu_per_mib)
        others = sum(r.demand for r in self.running[inst.id].values())
        seconds, outcome = execute(req, inst, profile, others + mine, self.sim.oom_fraction)
        duration = max(1, seconds_to_us(seconds))
        req.advance(RequestState.EXECUTING, self.now)
        self.exec_start[req.id] = self.now
        self.last_served[inst.version] = self.now
        self.running[inst.id][req.id] = _Run(req, self.now, mine, outcome)
        self.record("ExecStart", req.id, inst.version.id, instance=inst.id,
                    connections=inst.active_connections)
        self.push(self.now + duration, Ev.EXECUTION_DONE, inst.id, req.id, self.incarnation[inst.id])

    def try_claim(self, req: Request, v: FunctionVersion) -> bool:
        res = claim_idle(self.by_version.get(v, []), self.cfg.queue.claim_retries)
        if res.claimed:
            self.start_execution(req, res.instance)
        return res.claimed

    def enqueue_request(self, req: Request, v: Optional[FunctionVersion]) -> None:
        if v is None:
            self.record("Enqueue", req.id, None, queue_len_before=0, outcome=ClaimOutcome.DROPPED_QUEUE_FULL.value,
                        position=None)
            self.finish(req, RequestState.DROPPED_QUEUE_FULL)
            return
        q = self.queues.setdefault(v, VersionQueue(self.cfg.queue.capacity))
        self.by_version.setdefault(v, [])
        before = len(q)
        res = enqueue(req, q, self.now)
        self.record("Enqueue", req.id, v.id, queue_len_before=before, outcome=res.outcome.value,
                    position=res.position)
        if res.outcome is ClaimOutcome.DROPPED_QUEUE_FULL:
            self.finish(req, RequestState.DROPPED_QUEUE_FULL)
            return
        req.advance(RequestState.QUEUED, self.now)
        if v not in self.tick_pending:
            self.tick_pending.add(v)
            self.push(self.now + seconds_to_us(self.cfg.queue.retry_interval), Ev.QUEUE_RETRY_TICK, v)
        self.reactive_scale(v)

    def cold_start_for(self, req: Request, v: FunctionVersion) -> None:
        for inst in self.by_version.get(v, []):
            if inst.phase is Phase.COLD_STARTING and not inst.draining \
                    and len(self.attached[inst.id]) < v.concurrency_limit:
                self.attached[inst.id].append(req)
                self.record("ColdStartAttach", req.id, v.id, instance=inst.id)
                return
        if self.can_create(v):
            inst = self.create_instance(v, "balancer", seconds_to_us(self.cfg.latency.apply_action))
            self.attached[inst.id].append(req)
            self.record("ColdStartAttach", req.id, v.id, instance=inst.id)
            return
        # no room for a new instance: wait on this version or the closest one that can serve
        fn_versions = self.versions_of(req.function)
        target = v if fn_versions.get(v) else best_version(self.predictions[req.id], fn_versions, require_idle=False)
        self.enqueue_request(req, target)

    def versions_of(self, function: str) -> dict[FunctionVersion, list[InstanceState]]:
        return {v: insts for v, insts in self.by_version.items() if v.function == function}

    def reactive_scale(self, v: FunctionVersion) -> None:
        """Platform-default autoscaling for the static baseline: +1 when saturated and queued."""
        if self.variant is not Variant.BASELINE or not self.queues.get(v):
            return
        insts = self.by_version.get(v, [])
        if any(is_idle(i) or i.phase is Phase.COLD_STARTING for i in insts):
            return
        if not self.can_create(v):
            return
        self.record("ScaleAction", version=v.id, function=v.function, source="reactive",
                    from_count=len(insts), to_count=len(insts) + 1, remove=[], drain=[])
        self.create_instance(v, "reactive", seconds_to_us(self.cfg.latency.apply_action))

    # -- handlers ---------------------------------------------------------

    def on_arrival(self, idx: int) -> None:
        req = self.requests[idx]
        self.record("Arrival", req.id, None, function=req.function, payload=req.payload)
        if self.variant is Variant.BASELINE:
            v = self.version(req.function, self.sim.baseline_mem, self.sim.baseline_cpu)
            req.advance(RequestState.ROUTED, self.now)
            self.routed_at[req.id] = self.now
            self.record("Routed", req.id, v.id, decision="Static")
            if not self.try_claim(req, v):
                self.enqueue_request(req, v)
            return
        pred, latency = self.predictor.predict(req, self.profiles[req.function])
        self.push(self.now + seconds_to_us(latency), Ev.PREDICTION_DONE, idx, pred)

    def on_prediction_done(self, idx: int, pred: ResourcePrediction) -> None:
        req = self.requests[idx]
        req.advance(RequestState.PREDICTED, self.now)
        self.predictions[req.id] = pred
        self.record("PredictionDone", req.id, None, mem=pred.mem, cpu=pred.cpu, cached=pred.cached,
                    clamped=pred.clamped)
        profile = self.profiles[req.function]
        payload = profile.clamp(req.payload)
        nominal = (profile.exec_seconds(payload, pred.mem) if pred.mem >= profile.mem_required(payload)
                   else profile.floor_seconds(payload))
        obs = self.demand.setdefault((req.function, pred.mem, pred.cpu), [0, 0.0])
        obs[0] += 1
        obs[1] += nominal
        decision = self.balancer.route(req, pred, self.versions_of(req.function), self.route_rng,
                                       total_versions=len(self.by_version))
        self.push(self.now + seconds_to_us(decision.decision_latency), Ev.ROUTING_DONE, idx, decision)

    def on_routing_done(self, idx: int, decision) -> None:
        req = self.requests[idx]
        req.advance(RequestState.ROUTED, self.now)
        self.routed_at[req.id] = self.now
        v = decision.version
        self.record("Routed", req.id, v.id if v is not None else None, decision=decision.kind.value,
                    explored=decision.explored, score_best=decision.score_best, score_cs=decision.score_cs)
        if decision.kind is DecisionKind.ROUTE_EXISTING:
            if not self.try_claim(req, v):
                self.enqueue_request(req, v)
        elif decision.kind is DecisionKind.COLD_START_NEW:
            self.cold_start_for(req, v)
        else:
            self.enqueue_request(req, v)

    def on_queue_tick(self, v: FunctionVersion) -> None:
        self.tick_pending.discard(v)
        q = self.queues[v]
        for req, res in retry_tick(q, self.by_version.get(v, []), self.now, self.cfg.queue):
            if res.outcome is ClaimOutcome.RETRIED:
                continue
            waited = self.now - req.timestamps[RequestState.QUEUED]
            self.record("QueueLeave", req.id, v.id, outcome=res.outcome.value, waited_us=waited, retries=res.times)
            if res.claimed:
                self.start_execution(req, res.instance)
            else:
                self.finish(req, RequestState.DROPPED_RETRIES_EXHAUSTED)
        if q:
            self.tick_pending.add(v)
            self.push(self.now + seconds_to_us(self.cfg.queue.retry_interval), Ev.QUEUE_RETRY_TICK, v)
            self.reactive_scale(v)
        elif v in self.by_version and not self.by_version[v]:
            del self.by_version[v]

    def on_execution_done(self, inst_id: str, req_id: str, incarnation: int) -> None:
        inst = self.instances.get(inst_id)
        if inst is None or self.incarnation[inst_id] != incarnation or req_id not in self.running[inst_id]:
            return
        run = self.running[inst_id].pop(req_id)
        billed = billed_ms(self.now - run.start)
        inst.release(self.now)
        self.finish(run.request, run.outcome, inst, billed)
        if run.outcome is RequestState.FAILED_OOM:
            self.fail_instance(inst, FailureReason.OOM_KILLED)
            return
        if inst.active_connections == 0:
            if inst.draining:
                self.remove_instance(inst, "drained")
            else:
                self.schedule_expiry(inst)

    def on_cold_start_done(self, inst_id: str, incarnation: int) -> None:
        inst = self.instances.get(inst_id)
        if inst is None or self.incarnation[inst_id] != incarnation or inst.phase is not Phase.COLD_STARTING:
            return
        inst.mark_ready(self.now)
        self.record("InstanceReady", version=inst.version.id, instance=inst.id)
        waiting, self.attached[inst.id] = self.attached[inst.id], []
        for req in waiting:
            if not self.try_claim(req, inst.version):
                self.enqueue_request(req, inst.version)
        self.schedule_expiry(inst)

    def on_instance_restart(self, inst_id: str, incarnation: int) -> None:
        inst = self.instances.get(inst_id)
        if inst is None or self.incarnation[inst_id] != incarnation or inst.phase is not Phase.FAILED:
            return
        inst.phase = Phase.COLD_STARTING
        inst.failure = None
        self.record("InstanceRestarted", version=inst.version.id, instance=inst.id)
        self.push(self.now + self.cfg.latency.cold_start_us(self.cold_rng), Ev.COLD_START_DONE,
                  inst.id, incarnation)

    def on_expired(self, inst_id: str, stamp: int) -> None:
        inst = self.instances.get(inst_id)
        if inst is None or inst.phase is not Phase.READY or inst.active_connections or inst.last_used != stamp:
            return
        v = inst.version
        alive = [i for i in serving(self.by_version[v])]
        keep = False
        if self.variant is Variant.BASELINE:
            keep = len(alive) <= max(1, self.sim.baseline_initial)
        elif self.variant.optimizer:
            keep = v in self.lower_bound and len(alive) <= 1
        if keep:
            if self.active:
                self.push(self.now + seconds_to_us(self.sim.keep_alive), Ev.INSTANCE_EXPIRED, inst.id, stamp)
            return
        self.remove_instance(inst, "expired")

    def on_fault(self, fault: Fault) -> None:
        v = self.version(fault.function, fault.mem)
        ready = sorted((i for i in self.by_version.get(v, []) if i.phase is Phase.READY), key=lambda i: i.id)
        for inst in ready[: fault.count]:
            self.fail_instance(inst, FailureReason(fault.reason))

    def apply_scale(self, action: ScaleAction) -> None:
        v = action.version
        removed = 0
        for iid in action.remove_ids:
            inst = self.instances.get(iid)
            if inst is None:
                continue
            if inst.active_connections or self.running[iid]:
                inst.draining = True
            else:
                self.remove_instance(inst, action.source)
                removed += 1
        for iid in action.drain_ids:
            inst = self.instances.get(iid)
            if inst is None:
                continue
            inst.draining = True
            if inst.active_connections == 0 and not self.running[iid]:
                self.remove_instance(inst, action.source)
        add = max(0, action.to_count - action.from_count + len(action.remove_ids))
        for _ in range(add):
            if not self.can_create(v):
                self.record("ScaleSkipped", version=v.id, function=v.function, reason="capacity")
                break
            self.create_instance(v, action.source, 0)

    def log_action(self, a: ScaleAction) -> None:
        self.record("ScaleAction", version=a.version.id, function=a.version.function, source=a.source,
                    from_count=a.from_count, to_count=a.to_count, remove=list(a.remove_ids),
                    drain=list(a.drain_ids))

    def on_redundancy_tick(self) -> None:
        actions = scan_and_scale(self.by_version, self.now, self.scale_last, self.cfg.redundancy)
        for a in actions:
            self.log_action(a)
            self.push(self.now + seconds_to_us(a.apply_latency), Ev.APPLY_SCALE, a)
        if self.active:
            self.push(self.now + seconds_to_us(self.cfg.redundancy.check_interval), Ev.REDUNDANCY_TICK)

    def on_optimizer_tick(self) -> None:
        ocfg = self.cfg.optimizer
        window = seconds_to_us(ocfg.interval)
        demand = [
            DemandObservation(fn, ResourcePrediction(mem, cpu), n, total / n)
            for (fn, mem, cpu), (n, total) in self.demand.items()
        ]
        self.demand = {}
        snapshot = ClusterSnapshot(
            capacity=self.cfg.cluster,
            live={v: len(serving(i)) for v, i in self.by_version.items() if serving(i)},
            busy={v: sum(1 for x in i if x.active_connections) for v, i in self.by_version.items()},
            demand=demand,
            served_recently={v for v, t in self.last_served.items() if self.now - t <= window and v in self.by_version},
            max_versions=self.cfg.balancer.max_versions,
            concurrency_limit=self.sim.concurrency_limit,
            keep_alive=self.sim.keep_alive,
        )
        model = build_model(snapshot, ocfg, float(self.cfg.pricing.gb_s))
        plan = solve(model, budget=ocfg.time_budget, node_limit=ocfg.node_limit,
                     exhaustive_threshold=ocfg.exhaustive_threshold)
        self.lower_bound = {t.version for t in model.versions if t.lower >= 1}
        self.record("OptimizerPlan", status=plan.status.value, objective=float(plan.objective),
                    nodes=plan.nodes, gap=plan.gap, reason=plan.reason,
                    x_star={v.id: n for v, n in sorted(plan.x_star.items(), key=lambda kv: kv[0].id)})
        if self.dump_plans:
            self.plans.append({"at_ms": self.now / 1000, "model": model_to_dict(model), "plan": plan_to_dict(plan)})
        if plan.status is not PlanStatus.INFEASIBLE:
            cooling = [v for v in self.by_version
                       if self.variant.redundancy and in_cooldown(v, self.now, self.scale_last, self.cfg.redundancy)]
            delay = seconds_to_us(ocfg.solve_latency)
            for a in reconcile(plan, self.by_version, ocfg.apply_latency, suppress_down=cooling):
                self.log_action(a)
                self.push(self.now + delay + seconds_to_us(a.apply_latency), Ev.APPLY_SCALE, a)
        if self.active:
            self.push(self.now + window, Ev.OPTIMIZER_TICK)

    def on_refresh_tick(self) -> None:
        if self.predictor.refresh(self.now / 1e6):
            self.record("PredictorRefresh", cleared=True)
        if self.active:
            self.push(self.now + seconds_to_us(self.cfg.predictor.refresh_interval), Ev.PREDICTOR_REFRESH_TICK)

    # -- main loop --------------------------------------------------------

    def setup(self) -> None:
        if self.variant is Variant.BASELINE:
            fns = sorted({r.function for r in self.requests})
            for fn in fns:
                v = self.version(fn, self.sim.baseline_mem, self.sim.baseline_cpu)
                for _ in range(self.sim.baseline_initial):
                    if self.can_create(v):
                        self.create_instance(v, "initial", 0, warm=True)
        else:
            for p in self.sim.prewarm:
                v = self.version(p.function, p.mem)
                for _ in range(p.count):
                    if self.can_create(v):
                        self.create_instance(v, "prewarm", 0, warm=True)
            self.push(seconds_to_us(self.cfg.predictor.refresh_interval), Ev.PREDICTOR_REFRESH_TICK)
            if self.variant.redundancy:
                self.push(seconds_to_us(self.cfg.redundancy.check_interval), Ev.REDUNDANCY_TICK)
            if self.variant.optimizer:
                self.push(seconds_to_us(self.cfg.optimizer.interval), Ev.OPTIMIZER_TICK)
        for f in self.sim.faults:
            self.push(seconds_to_us(f.at), Ev.FAULT, f)
        for idx, req in enumerate(self.requests):
            self.push(req.arrival, Ev.ARRIVAL, idx)

    def check(self) -> None:
        if not (0 <= self.used_cpu <= self.cap_cpu and 0 <= self.used_mem <= self.cap_mem):
            raise InvariantViolation(f"cluster over capacity: {self.used_cpu} mc, {self.used_mem} MiB")
        for inst in self.instances.values():
            inst.check()
            if inst.active_connections != len(self.running[inst.id]):
                raise InvariantViolation(f"{inst.id}: C_p disagrees with running requests")
        for q in self.queues.values():
            if len(q) > q.capacity:
                raise InvariantViolation("queue over capacity")

    def run(self) -> RunResult:
        handlers = {
            Ev.ARRIVAL: self.on_arrival,
            Ev.PREDICTION_DONE: self.on_prediction_done,
            Ev.ROUTING_DONE: self.on_routing_done,
            Ev.QUEUE_RETRY_TICK: self.on_queue_tick,
            Ev.EXECUTION_DONE: self.on_execution_done,
            Ev.COLD_START_DONE: self.on_cold_start_done,
            Ev.INSTANCE_RESTART: self.on_instance_restart,
            Ev.INSTANCE_EXPIRED: self.on_expired,
            Ev.FAULT: self.on_fault,
            Ev.APPLY_SCALE: self.apply_scale,
            Ev.REDUNDANCY_TICK: self.on_redundancy_tick,
            Ev.OPTIMIZER_TICK: self.on_optimizer_tick,
            Ev.PREDICTOR_REFRESH_TICK: self.on_refresh_tick,
        }
        self.setup()
        while self._heap:
            at, kind, _, payload = heapq.heappop(self._heap)
            if at < self.now:
                raise InvariantViolation("event scheduled in the past")
            self.now = at
            handlers[Ev(kind)](*payload)
            if self.sim.strict:
                self.check()
        if self.outstanding:
            raise InvariantViolation(f"{self.outstanding} requests never reached a terminal state")
        self.record("RunEnd", arrivals=len(self.requests), terminal=self.terminal,
                    variant=self.variant.value, seed=self.seed)
        report = compute_report(self.log.records, self.variant.value, self.seed, self.cfg.pricing)
        return RunResult(self.variant, self.seed, self.log, report, self.streaming_cost, self.plans)


def run(cfg: Any, requests: Sequence[Request], variant: Variant | str, seed: int,
        profiles: Mapping[str, FunctionProfile]) -> RunResult:
    """Simulate ``requests`` under ``variant``; the input requests are not mutated."""
    return Simulation(cfg, requests, Variant(variant), seed, profiles).run()
