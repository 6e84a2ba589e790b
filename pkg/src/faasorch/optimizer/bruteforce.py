"""Exhaustive reference optimum for small models.

Enumerates every instance-count vector x inside its bounds and capacity, and
for each one every served vector s. A served vector is achievable iff it meets
Hall's condition on the class/version bipartite graph: for every subset T of
classes, sum_{r in T} s_r <= sum_{v in N(T)} kappa_v * x_v. An assignment y
realising the best s is then recovered by a small max-flow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import networkx as nx
import numpy as np

from .model import IlpModel, objective_terms, total


@dataclass
class BruteForceResult:
    objective: Fraction
    x: list[int]
    served: list[int]
    y: dict[tuple[int, int], int]


def _assignment(model: IlpModel, x: list[int], served: list[int]) -> dict[tuple[int, int], int]:
    g = nx.DiGraph()
    for r, s in enumerate(served):
        g.add_edge("src", ("r", r), capacity=s)
    for v, t in enumerate(model.versions):
        g.add_edge(("v", v), "dst", capacity=t.kappa * x[v])
    for r, v in model.pairs:
        g.add_edge(("r", r), ("v", v), capacity=model.classes[r].demand)
    flow_value, flow = nx.maximum_flow(g, "src", "dst") if served else (0, {})
    if flow_value != sum(served):
        raise AssertionError("Hall condition accepted an unroutable served vector")
    return {(r, v): flow[("r", r)].get(("v", v), 0) for r, v in model.pairs}


def brute_force(model: IlpModel) -> Optional[BruteForceResult]:
    n_cls = len(model.classes)
    ranges = [range(t.lower, model.upper_bound(v) + 1) for v, t in enumerate(model.versions)]

    if n_cls:
        served_grid = np.array(
            list(itertools.product(*[range(c.demand + 1) for c in model.classes])), dtype=np.int64
        )
    else:
        served_grid = np.zeros((1, 0), dtype=np.int64)
    subsets = [T for k in range(1, n_cls + 1) for T in itertools.combinations(range(n_cls), k)]
    if subsets:
        subset_sums = np.stack([served_grid[:, list(T)].sum(axis=1) for T in subsets], axis=1)
    else:
        subset_sums = np.zeros((len(served_grid), 0), dtype=np.int64)
    neighbours = [
        [v for v in range(len(model.versions)) if any(model.compat[r][v] for r in T)] for T in subsets
    ]
    weights = [model.class_weight(r) for r in range(n_cls)]
    scale = math.lcm(*(w.denominator for w in weights)) if weights else 1
    scaled_weights = np.array([int(w * scale) for w in weights], dtype=object)

    best_by_caps: dict[tuple, list[int]] = {}
    best: Optional[BruteForceResult] = None
    for x in itertools.product(*ranges):
        x = list(x)
        if sum(t.cpu * xv for t, xv in zip(model.versions, x)) > model.capacity_cpu:
            continue
        if sum(t.mem * xv for t, xv in zip(model.versions, x)) > model.capacity_mem:
            continue
        caps = [t.kappa * xv for t, xv in zip(model.versions, x)]
        hall = tuple(sum(caps[v] for v in nb) for nb in neighbours)
        served = best_by_caps.get(hall)
        if served is None:
            ok = np.all(subset_sums <= np.array(hall, dtype=np.int64), axis=1) if subsets else np.ones(len(served_grid), bool)
            feasible = served_grid[ok]
            vals = feasible.astype(object) @ scaled_weights
            served = [int(s) for s in feasible[int(np.argmax(vals))]]
            best_by_caps[hall] = served
        val = total(objective_terms(model, x, served))
        if best is None or val < best.objective:
            best = BruteForceResult(val, x, served, {})
    if best is not None:
        best.y = _assignment(model, best.x, best.served)
    return best
