"""Best-first branch and bound over LP relaxations (HiGHS via scipy)."""

from __future__ import annotations

import heapq
import math
import time
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .model import IlpModel, OptimizerPlan, PlanStatus, check_plan, objective_terms, total

INT_TOL = 1e-6


class _Relaxation:
    """Dense LP data for a model; variables are [x_v..., y_rv..., z_v...]."""

    def __init__(self, model: IlpModel):
        self.model = model
        n = len(model.versions)
        self.n = n
        self.pairs = model.pairs
        p = len(self.pairs)
        self.use_cs = model.cs_weight * model.cs_penalty > 0
        nz = n if self.use_cs else 0
        self.nvar = n + p + nz

        c = np.zeros(self.nvar)
        for v, t in enumerate(model.versions):
            c[v] = model.alpha * t.cost
        for k, (r, _) in enumerate(self.pairs):
            cl = model.classes[r]
            c[n + k] = -(model.beta * cl.penalty + model.gamma * cl.utility)
        if self.use_cs:
            c[n + p:] = model.cs_weight * model.cs_penalty
        self.c = c
        self.const = sum(model.beta * cl.demand * cl.penalty for cl in model.classes)

        rows, rhs = [], []
        rows.append(np.concatenate([[t.cpu for t in model.versions], np.zeros(p + nz)]))
        rhs.append(model.capacity_cpu)
        rows.append(np.concatenate([[t.mem for t in model.versions], np.zeros(p + nz)]))
        rhs.append(model.capacity_mem)
        for v, t in enumerate(model.versions):
            row = np.zeros(self.nvar)
            row[v] = -t.kappa
            for k, (_, vv) in enumerate(self.pairs):
                if vv == v:
                    row[n + k] = 1.0
            rows.append(row)
            rhs.append(0.0)
        for r, cl in enumerate(model.classes):
            row = np.zeros(self.nvar)
            for k, (rr, _) in enumerate(self.pairs):
                if rr == r:
                    row[n + k] = 1.0
            rows.append(row)
            rhs.append(cl.demand)
        if self.use_cs:
            for v, t in enumerate(model.versions):
                row = np.zeros(self.nvar)
                # z_v >= x_v - live_v
                row[v] = 1.0
                row[n + p + v] = -1.0
                rows.append(row)
                rhs.append(t.live)
        self.A = np.array(rows)
        self.b = np.array(rhs, dtype=float)

        lb = np.zeros(self.nvar)
        ub = np.zeros(self.nvar)
        for v, t in enumerate(model.versions):
            lb[v] = t.lower
            ub[v] = model.upper_bound(v)
        for k, (r, _) in enumerate(self.pairs):
            ub[n + k] = model.classes[r].demand
        if self.use_cs:
            for v in range(n):
                ub[n + p + v] = ub[v]
        self.lb, self.ub = lb, ub

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> Optional[tuple[float, np.ndarray]]:
        res = linprog(self.c, A_ub=self.A, b_ub=self.b, bounds=np.column_stack([lb, ub]), method="highs")
        if res.status != 0:
            return None
        return res.fun + self.const, res.x

    def split(self, sol: np.ndarray) -> tuple[list[int], dict[tuple[int, int], int]]:
        x = [int(round(sol[v])) for v in range(self.n)]
        y = {pair: int(round(sol[self.n + k])) for k, pair in enumerate(self.pairs)}
        return x, y


def infeasibility(model: IlpModel) -> Optional[str]:
    """Name the violated constraint when lower bounds cannot fit at all."""
    if model.infeasible_reason:
        return model.infeasible_reason
    for v, t in enumerate(model.versions):
        if t.lower > model.upper_bound(v):
            return f"lower bound {t.lower} of {t.version.id} exceeds its capacity bound {model.upper_bound(v)}"
    if sum(t.lower * t.cpu for t in model.versions) > model.capacity_cpu:
        return "cpu capacity cannot hold the no-scale-to-zero lower bounds"
    if sum(t.lower * t.mem for t in model.versions) > model.capacity_mem:
        return "memory capacity cannot hold the no-scale-to-zero lower bounds"
    return None


def _served(model: IlpModel, y: dict[tuple[int, int], int]) -> list[int]:
    served = [0] * len(model.classes)
    for (r, _), val in y.items():
        served[r] += val
    return served


def make_plan(model: IlpModel, x, y, status: PlanStatus, gap: float = 0.0, nodes: int = 0) -> OptimizerPlan:
    terms = objective_terms(model, x, _served(model, y))
    return OptimizerPlan(
        x_star={t.version: int(xv) for t, xv in zip(model.versions, x)},
        y_assign={(model.classes[r].id, model.versions[v].version): int(val) for (r, v), val in y.items()},
        objective=total(terms),
        breakdown=terms,
        status=status,
        gap=gap,
        nodes=nodes,
    )


def infeasible_plan(reason: str) -> OptimizerPlan:
    return OptimizerPlan({}, {}, Fraction(0), {}, PlanStatus.INFEASIBLE, reason=reason)


def solve(
    model: IlpModel,
    budget: Optional[float] = None,
    node_limit: int = 20_000,
    exhaustive_threshold: int = 0,
) -> OptimizerPlan:
    """Solve ``model`` to optimality, or stop at ``node_limit`` / ``budget`` seconds.

    The node limit is the deterministic budget; the wall-clock budget is a
    safety net and makes results timing-dependent when it triggers.
    """
    reason = infeasibility(model)
    if reason:
        return infeasible_plan(reason)
    if not model.versions:
        return make_plan(model, [], {}, PlanStatus.OPTIMAL)

    if len(model.versions) + len(model.pairs) <= exhaustive_threshold:
        from .bruteforce import brute_force

        best = brute_force(model)
        if best is None:
            return infeasible_plan("no integer point satisfies the constraints")
        return make_plan(model, best.x, best.y, PlanStatus.OPTIMAL)

    relax = _Relaxation(model)
    start = time.perf_counter()

    # x at its lower bounds with nothing served is feasible once the bounds fit
    inc_x = [t.lower for t in model.versions]
    inc_y = {pair: 0 for pair in relax.pairs}
    incumbent = total(objective_terms(model, inc_x, _served(model, inc_y)))

    heap = [(-math.inf, 0, relax.lb.copy(), relax.ub.copy())]
    seq = 1
    nodes = 0
    while heap:
        if nodes >= node_limit or (budget is not None and time.perf_counter() - start > budget):
            break
        parent_bound, _, lb, ub = heapq.heappop(heap)
        inc_f = float(incumbent)
        tol = 1e-7 * (1.0 + abs(inc_f))
        if parent_bound >= inc_f - tol:
            continue
        nodes += 1
        res = relax.solve(lb, ub)
        if res is None:
            continue
        bound, sol = res
        if bound >= inc_f - tol:
            continue
        frac = np.abs(sol - np.round(sol))
        if frac.max() <= INT_TOL:
            x, y = relax.split(sol)
            # an integral LP point that fails exact validation after rounding is dropped
            if not check_plan(model, x, y):
                val = total(objective_terms(model, x, _served(model, y)))
                if val < incumbent:
                    incumbent, inc_x, inc_y = val, x, y
            continue
        # branch on the most fractional variable, instance counts first
        n_x = relax.n
        j = int(np.argmax(frac[:n_x])) if frac[:n_x].max() > INT_TOL else int(np.argmax(frac))
        down_ub = ub.copy()
        down_ub[j] = math.floor(sol[j])
        up_lb = lb.copy()
        up_lb[j] = math.ceil(sol[j])
        heapq.heappush(heap, (bound, seq, lb, down_ub))
        heapq.heappush(heap, (bound, seq + 1, up_lb, ub))
        seq += 2

    if heap and any(h[0] < float(incumbent) - 1e-7 * (1.0 + abs(float(incumbent))) for h in heap):
        best_bound = min(h[0] for h in heap)
        gap = float(incumbent) - best_bound if math.isfinite(best_bound) else math.inf
        return make_plan(model, inc_x, inc_y, PlanStatus.FEASIBLE_WITH_GAP, gap=gap, nodes=nodes)
    return make_plan(model, inc_x, inc_y, PlanStatus.OPTIMAL, nodes=nodes)
