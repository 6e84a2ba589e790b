"""Instance-count optimisation: ILP model, branch-and-bound solver, oracle, reconcile."""

from .bruteforce import BruteForceResult, brute_force
from .model import (
    ClusterSnapshot,
    DemandClass,
    DemandObservation,
    IlpModel,
    OptimizerConfig,
    OptimizerPlan,
    PlanStatus,
    VersionTerm,
    build_model,
    check_plan,
    model_to_dict,
    objective_terms,
    plan_to_dict,
)
from .reconcile import reconcile, serving
from .solver import solve

__all__ = [
    "BruteForceResult",
    "ClusterSnapshot",
    "DemandClass",
    "DemandObservation",
    "IlpModel",
    "OptimizerConfig",
    "OptimizerPlan",
    "PlanStatus",
    "VersionTerm",
    "brute_force",
    "build_model",
    "check_plan",
    "model_to_dict",
    "objective_terms",
    "plan_to_dict",
    "reconcile",
    "serving",
    "solve",
]
