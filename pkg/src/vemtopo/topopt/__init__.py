"""Density filter, MMA and OC updates, and the optimization driver."""
from vemtopo.topopt.filter import FilterOperator, build_filter, identity_filter
from vemtopo.topopt.mma import MMAState, mma_update, subsolve
from vemtopo.topopt.oc import oc_update
from vemtopo.topopt.optimize import (
    DensityField,
    Evaluator,
    HistoryRecord,
    OptimizationState,
    OptimizerOptions,
    history_rows,
    objective_and_sensitivity,
    physical_from_raw,
    run_optimization,
)

__all__ = [
    "DensityField", "Evaluator", "FilterOperator", "HistoryRecord", "MMAState",
    "OptimizationState", "OptimizerOptions", "build_filter", "history_rows", "identity_filter",
    "mma_update", "objective_and_sensitivity", "oc_update", "physical_from_raw",
    "run_optimization", "subsolve",
]
