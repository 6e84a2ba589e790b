"""Request streams: synthetic Poisson/log-normal generation and CSV trace replay."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .domain import FunctionProfile, Request, seconds_to_us

TRACE_COLUMNS = ("timestamp_ms", "function", "payload")


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class Burst:
    """Extra Poisson traffic of ``rate`` req/s laid over [start, start + duration)."""

    start: float
    duration: float
    rate: float


@dataclass(frozen=True)
class SyntheticSpec:
    function: str
    rate_lambda: float
    payload_mu: float
    payload_sigma: float
    duration: float
    seed: int = 0
    bursts: tuple[Burst, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.rate_lambda <= 0:
            raise ValueError("rate_lambda must be > 0")
        if self.payload_sigma < 0:
            raise ValueError("payload_sigma must be >= 0")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        for b in self.bursts:
            if b.rate <= 0 or b.duration < 0:
                raise ValueError(f"bad burst {b}")


def _poisson_times(rng: np.random.Generator, rate: float, start: float, end: float) -> list[float]:
    times = []
    t = start
    while True:
        t += rng.exponential(1.0 / rate)
        if t >= end:
            return times
        times.append(t)


def generate(spec: SyntheticSpec, profile: FunctionProfile) -> list[Request]:
    """Draw a request stream; identical (spec, profile) always yields the same stream."""
    ss = np.random.SeedSequence(spec.seed)
    arrival_ss, payload_ss, *burst_ss = ss.spawn(2 + len(spec.bursts))

    times = _poisson_times(np.random.default_rng(arrival_ss), spec.rate_lambda, 0.0, spec.duration)
    for b, bss in zip(spec.bursts, burst_ss):
        end = min(b.start + b.duration, spec.duration)
        times.extend(_poisson_times(np.random.default_rng(bss), b.rate, b.start, end))
    times.sort()

    prng = np.random.default_rng(payload_ss)
    logs = prng.normal(spec.payload_mu, spec.payload_sigma, size=len(times))
    requests = []
    for i, (t, z) in enumerate(zip(times, logs)):
        payload = profile.clamp(int(round(math.exp(z))))
        requests.append(
            Request(
                id=f"{spec.function}-{i:06d}",
                function=spec.function,
                payload=payload,
                arrival=seconds_to_us(t),
                deadline_slo=profile.slo_seconds,
            )
        )
    return requests


def merge_streams(streams: Iterable[list[Request]]) -> list[Request]:
    """Interleave per-function streams by arrival time (ties by request id)."""
    merged = [r for s in streams for r in s]
    merged.sort(key=lambda r: (r.arrival, r.id))
    return merged


def load_trace(
    path: str | Path,
    clock_scale: float = 1.0,
    profiles: Optional[Mapping[str, FunctionProfile]] = None,
) -> list[Request]:
    """Read a ``timestamp_ms,function,payload`` CSV into requests.

    Arrival times are ``timestamp_ms * clock_scale``. Payloads are passed through.
    """
    if clock_scale <= 0:
        raise TraceError("clock_scale must be > 0")
    requests: list[Request] = []
    counters: dict[str, int] = {}
    last_ts = -math.inf
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(h.strip() for h in header) != TRACE_COLUMNS:
            raise TraceError(f"line 1: expected header {','.join(TRACE_COLUMNS)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise TraceError(f"line {lineno}: expected 3 columns, got {len(row)}")
            try:
                ts = float(row[0])
                payload = int(row[2])
            except ValueError:
                raise TraceError(f"line {lineno}: malformed row {row}") from None
            fn = row[1].strip()
            if ts < 0:
                raise TraceError(f"line {lineno}: negative timestamp {ts}")
            if ts < last_ts:
                raise TraceError(f"line {lineno}: timestamps must be non-decreasing")
            if profiles is not None and fn not in profiles:
                raise TraceError(f"line {lineno}: unknown function '{fn}'")
            last_ts = ts
            idx = counters.get(fn, 0)
            counters[fn] = idx + 1
            slo = profiles[fn].slo_seconds if profiles is not None else 0.0
            requests.append(
                Request(
                    id=f"{fn}-{idx:06d}",
                    function=fn,
                    payload=payload,
                    arrival=seconds_to_us(ts * clock_scale / 1000.0),
                    deadline_slo=slo,
                )
            )
    return requests


def write_trace(requests: Iterable[Request], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in requests:
            writer.writerow([f"{r.arrival / 1000:.3f}", r.function, r.payload])
