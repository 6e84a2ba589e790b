"""Modeled control-plane and platform latencies (seconds)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import seconds_to_us


@dataclass(frozen=True)
class LatencyModel:
    cold_start_min: float = 2.0
    cold_start_max: float = 6.0
    apply_action: float = 0.2
    optimizer_solve: float = 1.45
    # delay before the platform restarts a crashed instance in place
    restart_backoff: float = 30.0

    def __post_init__(self):
        for name in ("cold_start_min", "cold_start_max", "apply_action", "optimizer_solve", "restart_backoff"):
            if getattr(self, name) < 0:
                raise ValueError(f"latency.{name} must be >= 0")
        if self.cold_start_min > self.cold_start_max:
            raise ValueError("latency.cold_start_min must be <= cold_start_max")

    def cold_start_us(self, rng: np.random.Generator) -> int:
        return seconds_to_us(rng.uniform(self.cold_start_min, self.cold_start_max))
