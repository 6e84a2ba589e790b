"""Input-aware resource prediction with an inference cache and periodic refresh.

Two predictors stand in for a trained model: ``TableLookup`` reads the
profile's memory-requirement curve directly (ground truth) and ``NoisyOracle``
perturbs it with seeded uniform noise so that mis-predictions occur.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    DEFAULT_CPU_PER_MIB,
    FunctionProfile,
    Request,
    ResourcePrediction,
    cpu_for_mem,
)

__all__ = ["PredictorKind", "PredictorConfig", "Predictor", "ResourcePrediction", "quantize_up"]


class PredictorKind(str, enum.Enum):
    TABLE_LOOKUP = "TableLookup"
    NOISY_ORACLE = "NoisyOracle"


@dataclass(frozen=True)
class PredictorConfig:
    kind: PredictorKind = PredictorKind.TABLE_LOOKUP
    refresh_interval: float = 7200.0
    unique_latency: float = 0.1
    cached_latency: float = 0.0001
    noise_pct: float = 0.0
    quantize_step: int = 64
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", PredictorKind(self.kind))
        if self.unique_latency < 0 or self.cached_latency < 0:
            raise ValueError("predictor latencies must be >= 0")
        if self.quantize_step <= 0:
            raise ValueError("quantize_step must be > 0")
        if not 0 <= self.noise_pct < 100:
            raise ValueError("noise_pct must be in [0, 100)")
        if self.refresh_interval <= 0:
            raise ValueError("refresh_interval must be > 0")


def quantize_up(mem: float, step: int) -> int:
    return max(step, math.ceil(mem / step) * step)


class Predictor:
    def __init__(self, config: PredictorConfig = PredictorConfig(), cpu_per_mib: float = DEFAULT_CPU_PER_MIB):
        self.config = config
        self.cpu_per_mib = cpu_per_mib
        self._cache: dict[tuple[str, int], ResourcePrediction] = {}
        self._rng = np.random.default_rng(config.seed)
        self.last_refresh = 0.0
        self.hits = 0
        self.misses = 0

    def _raw_mem(self, profile: FunctionProfile, payload: int) -> float:
        mem = profile.mem_required(payload)
        if self.config.kind is PredictorKind.NOISY_ORACLE:
            eps = self._rng.uniform(-self.config.noise_pct, self.config.noise_pct) / 100.0
            mem *= 1.0 + eps
        return mem

    def predict(self, request: Request, profile: FunctionProfile) -> tuple[ResourcePrediction, float]:
        """Return (prediction, inference latency in seconds)."""
        payload = profile.clamp(request.payload)
        clamped = payload != request.payload
        key = (request.function, payload)
        hit = self._cache.get(key)
        if hit is not None:
            self.hits += 1
            return (
                ResourcePrediction(hit.mem, hit.cpu, cached=True, clamped=clamped),
                self.config.cached_latency,
            )
        self.misses += 1
        mem = quantize_up(self._raw_mem(profile, payload), self.config.quantize_step)
        pred = ResourcePrediction(mem, cpu_for_mem(mem, self.cpu_per_mib), cached=False, clamped=clamped)
        self._cache[key] = pred
        return pred, self.config.unique_latency

    def refresh(self, now: float) -> bool:
        """Drop cached inferences once ``refresh_interval`` seconds have passed."""
        if now - self.last_refresh < self.config.refresh_interval:
            return False
        self._cache.clear()
        self.last_refresh = now
        return True

    @property
    def cache_size(self) -> int:
        return len(self._cache)
