"""Billing, SLA accounting and cross-variant comparison, computed from event logs.

Costs are exact rationals (``fractions.Fraction``) in currency units, so
streaming and post-hoc totals can be compared for equality; reports also carry
the total rounded to integer micro-units.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .domain import RequestState


class IntegrityError(ValueError):
    """The event log is incomplete or inconsistent."""

    def __init__(self, message: str, last_valid_seq: Optional[int] = None):
        super().__init__(message if last_valid_seq is None else f"{message} (last valid seq {last_valid_seq})")
        self.last_valid_seq = last_valid_seq


@dataclass(frozen=True)
class PricingConfig:
    # AWS Lambda x86 list prices
    price_per_gb_s: str = "0.0000166667"
    price_per_request: str = "0.0000002"

    def __post_init__(self):
        object.__setattr__(self, "price_per_gb_s", str(self.price_per_gb_s))
        object.__setattr__(self, "price_per_request", str(self.price_per_request))
        if self.gb_s < 0 or self.per_request < 0:
            raise ValueError("prices must be >= 0")

    @property
    def gb_s(self) -> Fraction:
        return Fraction(self.price_per_gb_s)

    @property
    def per_request(self) -> Fraction:
        return Fraction(self.price_per_request)


def request_cost(mem_mib: int, billed_ms: int, pricing: PricingConfig) -> Fraction:
    return Fraction(mem_mib, 1024) * Fraction(billed_ms, 1000) * pricing.gb_s + pricing.per_request


def to_micro(amount: Fraction) -> int:
    return round(amount * 1_000_000)


EXECUTED = (RequestState.SUCCEEDED.value, RequestState.FAILED_OOM.value)


def bill(records: Iterable[Mapping], pricing: PricingConfig = PricingConfig()) -> tuple[Fraction, dict[str, Fraction]]:
    """Total cost and per-request costs of every executed request in a log."""
    per_request: dict[str, Fraction] = {}
    for rec in records:
        if rec["kind"] != "RequestDone":
            continue
        d = rec["detail"]
        if d["state"] not in EXECUTED:
            continue
        if d.get("billed_ms") is None or d.get("mem") is None:
            raise IntegrityError(f"request {rec.get('request_id')} executed without billed_ms", rec["seq"])
        per_request[rec["request_id"]] = request_cost(d["mem"], d["billed_ms"], pricing)
    return sum(per_request.values(), Fraction(0)), per_request


@dataclass
class FunctionMetrics:
    function: str
    total_requests: int = 0
    succeeded: int = 0
    success_rate: float = 0.0
    sla_rate: float = 0.0
    sla_exec_rate: float = 0.0
    drop_rate: float = 0.0
    oom_rate: float = 0.0
    total_cost: Fraction = Fraction(0)
    unique_configurations: int = 0
    total_unique_instances: int = 0
    scale_events: int = 0
    failures_by_type: dict = field(default_factory=dict)
    mean_latency_s: float = 0.0
    overall_score: Optional[float] = None

    @property
    def total_cost_micro(self) -> int:
        return to_micro(self.total_cost)


@dataclass
class MetricsReport:
    variant: str
    seed: int
    functions: dict[str, FunctionMetrics]
    aggregate: FunctionMetrics

    def rows(self) -> list[FunctionMetrics]:
        return [self.functions[k] for k in sorted(self.functions)] + [self.aggregate]


def _ms_to_us(ms: float) -> int:
    return round(ms * 1000)


def _finish(m: FunctionMetrics, outcome: Counter, sla: int, sla_exec: int, latency_us: int) -> None:
    n = m.total_requests
    m.succeeded = outcome[RequestState.SUCCEEDED.value]
    m.success_rate = m.succeeded / n if n else 0.0
    dropped = outcome[RequestState.DROPPED_QUEUE_FULL.value] + outcome[RequestState.DROPPED_RETRIES_EXHAUSTED.value]
    m.drop_rate = dropped / n if n else 0.0
    m.oom_rate = outcome[RequestState.FAILED_OOM.value] / n if n else 0.0
    m.sla_rate = sla / m.succeeded if m.succeeded else 0.0
    m.sla_exec_rate = sla_exec / m.succeeded if m.succeeded else 0.0
    m.mean_latency_s = latency_us / m.succeeded / 1e6 if m.succeeded else 0.0


def compute_report(
    records: Sequence[Mapping],
    variant: str = "",
    seed: int = 0,
    pricing: PricingConfig = PricingConfig(),
) -> MetricsReport:
    """Derive a MetricsReport purely from event-log records."""
    _, costs = bill(records, pricing)
    per_fn: dict[str, FunctionMetrics] = {}
    outcomes: dict[str, Counter] = defaultdict(Counter)
    sla = Counter()
    sla_exec = Counter()
    latency = Counter()
    configs: dict[str, set] = defaultdict(set)
    instances = Counter()
    scale_events = Counter()
    instance_failures: dict[str, Counter] = defaultdict(Counter)

    def fm(fn: str) -> FunctionMetrics:
        if fn not in per_fn:
            per_fn[fn] = FunctionMetrics(fn)
        return per_fn[fn]

    for rec in records:
        kind = rec["kind"]
        d = rec.get("detail", {})
        if kind == "RequestDone":
            fn = d["function"]
            m = fm(fn)
            m.total_requests += 1
            outcomes[fn][d["state"]] += 1
            if d["state"] == RequestState.SUCCEEDED.value:
                e2e = _ms_to_us(rec["at_ms"]) - _ms_to_us(d["arrival_ms"])
                run = _ms_to_us(rec["at_ms"]) - _ms_to_us(d["exec_start_ms"])
                slo = _ms_to_us(d["slo_ms"])
                latency[fn] += e2e
                sla[fn] += e2e <= slo
                sla_exec[fn] += run <= slo
            if rec["request_id"] in costs:
                m.total_cost += costs[rec["request_id"]]
        elif kind == "InstanceStarted":
            fn = d["function"]
            fm(fn)
            configs[fn].add(rec["version"])
            instances[fn] += 1
        elif kind == "ScaleAction":
            scale_events[fm(d["function"]).function] += 1
        elif kind == "InstanceFailed":
            instance_failures[fm(d["function"]).function][d["reason"]] += 1

    agg = FunctionMetrics("*")
    agg_outcome: Counter = Counter()
    for fn, m in per_fn.items():
        m.unique_configurations = len(configs[fn])
        m.total_unique_instances = instances[fn]
        m.scale_events = scale_events[fn]
        m.failures_by_type = dict(sorted({
            **{k: v for k, v in outcomes[fn].items() if k != RequestState.SUCCEEDED.value},
            **{f"instance_{k}": v for k, v in instance_failures[fn].items()},
        }.items()))
        _finish(m, outcomes[fn], sla[fn], sla_exec[fn], latency[fn])
        agg.total_requests += m.total_requests
        agg.total_cost += m.total_cost
        agg.unique_configurations += m.unique_configurations
        agg.total_unique_instances += m.total_unique_instances
        agg.scale_events += m.scale_events
        agg_outcome.update(outcomes[fn])
        for k, v in m.failures_by_type.items():
            agg.failures_by_type[k] = agg.failures_by_type.get(k, 0) + v
    agg.failures_by_type = dict(sorted(agg.failures_by_type.items()))
    _finish(agg, agg_outcome, sum(sla.values()), sum(sla_exec.values()), sum(latency.values()))
    return MetricsReport(variant, seed, per_fn, agg)


def score(
    reports: Sequence[MetricsReport],
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
) -> list[float]:
    """Min-max normalised weighted sum of SLA rate, cheapness and success rate.

    Cost enters through ``-cost`` so that the score is unchanged by any positive
    affine rescaling of costs. A metric with no spread normalises to 1.
    """
    if len(reports) < 2:
        raise ValueError("overall score needs at least two reports to compare")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"score weights must be non-negative and sum to 1, got {weights}")

    def norm(values: list[float]) -> list[float]:
        lo, hi = min(values), max(values)
        if hi == lo:
            return [1.0] * len(values)
        return [(v - lo) / (hi - lo) for v in values]

    sla = norm([r.aggregate.sla_rate for r in reports])
    cheap = norm([-float(r.aggregate.total_cost) for r in reports])
    succ = norm([r.aggregate.success_rate for r in reports])
    w1, w2, w3 = weights
    return [w1 * a + w2 * b + w3 * c for a, b, c in zip(sla, cheap, succ)]


REPORT_COLUMNS = (
    "variant", "seed", "function", "total_requests", "succeeded", "success_rate", "sla_rate",
    "sla_exec_rate", "drop_rate", "oom_rate", "total_cost", "total_cost_micro",
    "unique_configurations", "total_unique_instances", "scale_events", "failed_oom",
    "dropped_queue_full", "dropped_retries_exhausted", "instance_oom_kills", "mean_latency_s",
    "overall_score",
)


def report_rows(report: MetricsReport) -> list[dict]:
    out = []
    for m in report.rows():
        fb = m.failures_by_type
        out.append({
            "variant": report.variant,
            "seed": report.seed,
            "function": m.function,
            "total_requests": m.total_requests,
            "succeeded": m.succeeded,
            "success_rate": f"{m.success_rate:.6f}",
            "sla_rate": f"{m.sla_rate:.6f}",
            "sla_exec_rate": f"{m.sla_exec_rate:.6f}",
            "drop_rate": f"{m.drop_rate:.6f}",
            "oom_rate": f"{m.oom_rate:.6f}",
            "total_cost": f"{float(m.total_cost):.9f}",
            "total_cost_micro": m.total_cost_micro,
            "unique_configurations": m.unique_configurations,
            "total_unique_instances": m.total_unique_instances,
            "scale_events": m.scale_events,
            "failed_oom": fb.get(RequestState.FAILED_OOM.value, 0),
            "dropped_queue_full": fb.get(RequestState.DROPPED_QUEUE_FULL.value, 0),
            "dropped_retries_exhausted": fb.get(RequestState.DROPPED_RETRIES_EXHAUSTED.value, 0),
            "instance_oom_kills": fb.get("instance_OOMKilled", 0),
            "mean_latency_s": f"{m.mean_latency_s:.6f}",
            "overall_score": "" if m.overall_score is None else f"{m.overall_score:.6f}",
        })
    return out


def reports_to_csv(reports: Iterable[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        writer.writerows(report_rows(rep))
    return buf.getvalue()


def report_to_dict(report: MetricsReport) -> dict:
    def conv(m: FunctionMetrics) -> dict:
        d = {f.name: getattr(m, f.name) for f in fields(m)}
        d["total_cost"] = f"{m.total_cost.numerator}/{m.total_cost.denominator}"
        d["total_cost_micro"] = m.total_cost_micro
        return d

    return {
        "variant": report.variant,
        "seed": report.seed,
        "aggregate": conv(report.aggregate),
        "functions": {k: conv(report.functions[k]) for k in sorted(report.functions)},
    }
