"""Small builders for engine-level tests."""

import dataclasses

from faasorch.config import ExperimentConfig
from faasorch.domain import Request, seconds_to_us
from faasorch.simengine import Fault, Prewarm, SimConfig


def make_cfg(prewarm=(), faults=(), strict=True, **sections):
    sim = SimConfig(strict=strict, prewarm=tuple(Prewarm(*p) for p in prewarm),
                    faults=tuple(Fault(*f) for f in faults))
    cfg = ExperimentConfig(sim=sim)
    return dataclasses.replace(cfg, **sections)


def requests(spec, fn="linpack"):
    """``spec`` is a list of (arrival seconds, payload)."""
    return [Request(f"{fn}-{i:06d}", fn, p, seconds_to_us(t)) for i, (t, p) in enumerate(spec)]


def kinds(log, kind):
    return [r for r in log.records if r["kind"] == kind]
