"""Experiment configuration: defaults, YAML loading, overrides and validation.

Precedence is flags > ``SAARTHI_*`` environment variables > config file >
built-in defaults. Environment keys use a double underscore between section
and field, e.g. ``SAARTHI_QUEUE__CAPACITY=5``.
"""

from __future__ import annotations

import copy
import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from .domain import ClusterCapacity, FunctionProfile, load_builtin_profiles, load_profile
from .gateway import BalancerConfig
from .metrics import PricingConfig
from .optimizer.model import OptimizerConfig
from .predictor import PredictorConfig
from .provider import QueueConfig
from .redundancy import RedundancyConfig
from .simengine.engine import Fault, Prewarm, SimConfig
from .simengine.latency import LatencyModel
from .workload import Burst, SyntheticSpec, generate, load_trace, merge_streams

ENV_PREFIX = "SAARTHI_"
VARIANTS = ("baseline", "mvq", "mevq", "moevq")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StreamConfig:
    function: str
    rate: float
    payload_mu: float
    payload_sigma: float
    bursts: tuple = ()


@dataclass(frozen=True)
class WorkloadConfig:
    kind: str = "synthetic"
    duration: float = 600.0
    streams: tuple = ()
    trace_path: Optional[str] = None
    clock_scale: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    cluster: ClusterCapacity = ClusterCapacity()
    profiles: tuple = ()
    workload: WorkloadConfig = WorkloadConfig()
    variants: tuple = ("baseline", "mvq", "mevq", "moevq")
    seeds: tuple = (1,)
    predictor: PredictorConfig = PredictorConfig()
    balancer: BalancerConfig = BalancerConfig()
    queue: QueueConfig = QueueConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    redundancy: RedundancyConfig = RedundancyConfig()
    pricing: PricingConfig = PricingConfig()
    latency: LatencyModel = LatencyModel()
    sim: SimConfig = SimConfig()
    score_weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    dump_plans: bool = False
    out: str = "results"


# Where each default comes from; printed by ``--explain-config``.
CITATIONS = {
    "cluster.total_cpu": "evaluation cluster of 68 vCPUs",
    "cluster.total_mem": "evaluation cluster of 288 GB memory",
    "sim.concurrency_limit": "function concurrency set to 10",
    "sim.max_instances": "deployments may scale up to 100 instances",
    "sim.baseline_mem": "baseline OpenFaaS-CE at 1769 MiB memory",
    "sim.baseline_cpu": "baseline OpenFaaS-CE at 1 vCPU",
    "sim.cpu_per_mib": "CPU allocated proportional to memory (1769 MiB ~ 1 vCPU)",
    "queue.capacity": "G/G/c/K queue length fixed to 10",
    "queue.retry_interval": "queue retry interval of 10 milliseconds",
    "balancer.tolerance": "exploration window of +/-20% around the best score",
    "balancer.explore_p": "exploration probability for cold starts of 20%",
    "balancer.balancer_latency": "balancer overhead averages 40 milliseconds",
    "balancer.max_versions": "at most 50 distinct function deployments",
    "predictor.refresh_interval": "prediction model refresh interval of 2 hours",
    "predictor.unique_latency": "0.1 s per unique inference",
    "predictor.cached_latency": "0.1 ms per cached inference",
    "optimizer.interval": "optimiser runs every minute",
    "optimizer.throughput_per_min": "average function throughput of 10 requests per minute",
    "optimizer.solve_latency": "one optimisation loop takes 1.45 s",
    "optimizer.apply_latency": "applying a scaling decision takes 0.2 s",
    "optimizer.cs_weight": "cold-start trade-off term disabled by default",
    "optimizer.reserved_cpu": "control-plane pods: gateway 100m, provider 100m, monitor 300m, optimiser 250m",
    "optimizer.reserved_mem": "control-plane pods: gateway 200Mi, provider 200Mi, monitor 256Mi, optimiser 512Mi",
    "redundancy.check_interval": "failure checks every 15 seconds",
    "redundancy.cooldown": "30-second cooldown between scaling actions",
    "redundancy.apply_latency": "fault-tolerance decisions take 0.2 s to apply",
    "redundancy.failure_states": "failing pod states OOMKilled and CrashLoopBackOff",
    "latency.cold_start_min": "cold starts take 2 to 6 seconds",
    "latency.cold_start_max": "cold starts take 2 to 6 seconds",
    "latency.apply_action": "applying a cold-start decision takes 0.2 s",
    "pricing.price_per_gb_s": "AWS Lambda GB-second pricing",
    "pricing.price_per_request": "AWS Lambda per-request pricing",
}


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(_to_plain(v) for v in obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return _to_plain(cfg)


def _coerce(value: Any, default: Any) -> Any:
    """Parse string overrides into the type of ``default``."""
    if not isinstance(value, str):
        return value
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    if isinstance(default, (int, float, tuple, list, frozenset)) or default is None:
        parsed = yaml.safe_load(value)
        return parsed
    return value


def _build(cls, doc: Mapping, where: str):
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{where}: expected a mapping, got {type(doc).__name__}")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(doc) - set(names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    defaults = cls()
    for key, val in doc.items():
        kwargs[key] = _coerce(val, getattr(defaults, key))
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _build_workload(doc: Mapping) -> WorkloadConfig:
    doc = dict(doc)
    streams = []
    for i, s in enumerate(doc.pop("streams", []) or []):
        s = dict(s)
        bursts = tuple(Burst(**b) for b in s.pop("bursts", []) or [])
        try:
            streams.append(StreamConfig(bursts=bursts, **s))
        except TypeError as exc:
            raise ConfigError(f"workload.streams[{i}]: {exc}") from None
    wl = _build(WorkloadConfig, doc, "workload")
    if wl.kind not in ("synthetic", "trace"):
        raise ConfigError(f"workload.kind must be 'synthetic' or 'trace', got {wl.kind!r}")
    return dataclasses.replace(wl, streams=tuple(streams))


def _build_sim(doc: Mapping) -> SimConfig:
    doc = dict(doc)
    prewarm = tuple(Prewarm(**p) for p in doc.pop("prewarm", []) or [])
    faults = tuple(Fault(**f) for f in doc.pop("faults", []) or [])
    return dataclasses.replace(_build(SimConfig, doc, "sim"), prewarm=prewarm, faults=faults)


SECTIONS = {
    "cluster": ClusterCapacity,
    "predictor": PredictorConfig,
    "balancer": BalancerConfig,
    "queue": QueueConfig,
    "optimizer": OptimizerConfig,
    "redundancy": RedundancyConfig,
    "pricing": PricingConfig,
    "latency": LatencyModel,
}


def parse_seeds(spec: Any) -> tuple[int, ...]:
    """Seeds as an int, a list, ``"1..5"`` (inclusive) or ``"1,3,7"``."""
    if isinstance(spec, int):
        return (spec,)
    if isinstance(spec, (list, tuple)):
        return tuple(s for item in spec for s in parse_seeds(item))
    out = []
    for part in str(spec).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty seed range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError(f"no seeds in {spec!r}")
    return tuple(out)


def parse_variants(spec: Any) -> tuple[str, ...]:
    items = spec if isinstance(spec, (list, tuple)) else str(spec).split(",")
    out = []
    for v in items:
        v = str(v).strip().lower()
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
        out.append(v)
    return tuple(out)


def from_dict(doc: Mapping) -> ExperimentConfig:
    doc = dict(doc or {})
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for name, cls in SECTIONS.items():
        if name in doc:
            kwargs[name] = _build(cls, doc[name] or {}, name)
    if "workload" in doc:
        kwargs["workload"] = _build_workload(doc["workload"] or {})
    if "sim" in doc:
        kwargs["sim"] = _build_sim(doc["sim"] or {})
    if "variants" in doc:
        kwargs["variants"] = parse_variants(doc["variants"])
    if "seeds" in doc:
        kwargs["seeds"] = parse_seeds(doc["seeds"])
    if "profiles" in doc:
        kwargs["profiles"] = tuple(str(p) for p in doc["profiles"] or [])
    if "score_weights" in doc:
        w = tuple(float(x) for x in doc["score_weights"])
        if len(w) != 3 or any(x < 0 for x in w) or abs(sum(w) - 1) > 1e-9:
            raise ConfigError(f"score_weights must be three non-negative numbers summing to 1, got {w}")
        kwargs["score_weights"] = w
    for key in ("dump_plans", "out"):
        if key in doc:
            kwargs[key] = doc[key]
    return ExperimentConfig(**kwargs)


def _set_path(doc: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = doc
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted}: {p} is not a section")
    node[parts[-1]] = value


def env_overrides(environ: Mapping[str, str]) -> dict[str, str]:
    out = {}
    for key, val in environ.items():
        if key.startswith(ENV_PREFIX):
            out[key[len(ENV_PREFIX):].lower().replace("__", ".")] = val
    return out


def _coerce_leaf(dotted: str, value: str) -> Any:
    defaults = config_to_dict(ExperimentConfig())
    node: Any = defaults
    for p in dotted.split("."):
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[p]
    if isinstance(node, str) or dotted in ("seeds", "variants"):
        return value
    return _coerce(value, node)


def load_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, str]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    doc: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        base = Path(path).parent
        doc["profiles"] = [str(base / p) if not Path(p).is_absolute() else p for p in doc.get("profiles", []) or []]
        wl = doc.get("workload") or {}
        if wl.get("trace_path") and not Path(wl["trace_path"]).is_absolute():
            wl["trace_path"] = str(base / wl["trace_path"])
    doc = copy.deepcopy(doc)
    for source in (env_overrides(os.environ if environ is None else environ), overrides or {}):
        for dotted, val in source.items():
            _set_path(doc, dotted, _coerce_leaf(dotted, val) if isinstance(val, str) else val)
    return from_dict(doc)


def load_profiles(cfg: ExperimentConfig) -> dict[str, FunctionProfile]:
    profiles = load_builtin_profiles()
    for p in cfg.profiles:
        try:
            prof = load_profile(p)
        except OSError as exc:
            raise ConfigError(f"cannot read profile {p}: {exc}") from None
        profiles[prof.name] = prof
    return profiles


def validate(cfg: ExperimentConfig, profiles: Mapping[str, FunctionProfile]) -> None:
    """Cross-section checks that need the loaded profiles."""
    wl = cfg.workload
    if wl.kind == "synthetic":
        if not wl.streams:
            raise ConfigError("workload.streams is empty")
        for s in wl.streams:
            if s.function not in profiles:
                raise ConfigError(f"missing profile for function {s.function!r}")
            SyntheticSpec(s.function, s.rate, s.payload_mu, s.payload_sigma, wl.duration, 0, s.bursts)
    elif not wl.trace_path:
        raise ConfigError("workload.trace_path is required for trace workloads")
    for p in cfg.sim.prewarm:
        if p.function not in profiles:
            raise ConfigError(f"missing profile for prewarmed function {p.function!r}")


def explain(cfg: ExperimentConfig) -> list[str]:
    flat: list[tuple[str, Any]] = []

    def walk(prefix: str, node: Any):
        if isinstance(node, dict):
            for k, v in node.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        else:
            flat.append((prefix, node))

    walk("", config_to_dict(cfg))
    lines = []
    for key, val in flat:
        src = CITATIONS.get(key)
        lines.append(f"{key} = {val!r}" + (f"    # {src}" if src else ""))
    return lines


def build_requests(cfg: ExperimentConfig, profiles: Mapping[str, FunctionProfile], seed: int) -> list:
    """The request stream for one seed; every variant of that seed sees the same stream."""
    wl = cfg.workload
    if wl.kind == "trace":
        return load_trace(wl.trace_path, wl.clock_scale, profiles)
    streams = []
    for i, s in enumerate(wl.streams):
        stream_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        spec = SyntheticSpec(s.function, s.rate, s.payload_mu, s.payload_sigma, wl.duration, stream_seed, s.bursts)
        streams.append(generate(spec, profiles[s.function]))
    return merge_streams(streams)
