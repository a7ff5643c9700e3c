"""Recourse auditing for linear classifiers.

Given a linear model and a population, this package certifies whether each
negatively predicted individual can flip their prediction through feasible
changes to actionable features, computes minimal-cost actions under
percentile-based or linear costs, enumerates flipsets, and estimates
cost-of-recourse distributions and bounds.
"""

from .actions import (
    ActionGrid,
    ActionSetSpec,
    FeatureAction,
    PercentileModel,
    action_set_from_document,
    action_set_to_document,
    build_action_grid,
    discretization_gap,
    fit_percentiles,
    prune_by_sign,
)
from .analysis import (
    BoundCheck,
    DiscretizationInstance,
    DisparityReport,
    GuaranteeResult,
    RecourseBound,
    discretization_error_report,
    disparity_report,
    expected_cost_bound,
    recourse_guarantee_check,
    verify_bound,
)
from .audit import AuditRecord, AuditReport, run_audit, summarize_thresholds
from .costs import CostSpec, CostTable, ScaledNormCost, action_cost, build_cost_table
from .errors import CombinationCapError, InputError, ParseError
from .flipset import Flipset, FlipsetDocument, FlipsetItem, enumerate_actions, render_flipset
from .model import (
    Dataset,
    LinearModel,
    Prediction,
    align_dataset,
    calibrate_threshold,
    load_dataset,
    load_model,
    model_from_document,
    model_to_document,
    predict,
    save_model,
    score_rows,
)
from .solver import (
    INFEASIBLE,
    NO_ACTION_NEEDED,
    OPTIMAL,
    RecourseProblem,
    RecourseSolution,
    brute_force_solve,
    build_problem,
    closed_form_cost,
    endpoint_feasibility,
    solve,
    solve_region,
)

__version__ = "0.1.0"

__all__ = [
    "ActionGrid",
    "ActionSetSpec",
    "AuditRecord",
    "AuditReport",
    "BoundCheck",
    "CombinationCapError",
    "CostSpec",
    "CostTable",
    "Dataset",
    "DiscretizationInstance",
    "DisparityReport",
    "FeatureAction",
    "Flipset",
    "FlipsetDocument",
    "FlipsetItem",
    "GuaranteeResult",
    "INFEASIBLE",
    "InputError",
    "LinearModel",
    "NO_ACTION_NEEDED",
    "OPTIMAL",
    "ParseError",
    "PercentileModel",
    "Prediction",
    "RecourseBound",
    "RecourseProblem",
    "RecourseSolution",
    "ScaledNormCost",
    "action_cost",
    "action_set_from_document",
    "action_set_to_document",
    "align_dataset",
    "brute_force_solve",
    "build_action_grid",
    "build_cost_table",
    "build_problem",
    "calibrate_threshold",
    "closed_form_cost",
    "discretization_error_report",
    "discretization_gap",
    "disparity_report",
    "endpoint_feasibility",
    "enumerate_actions",
    "expected_cost_bound",
    "fit_percentiles",
    "load_dataset",
    "load_model",
    "model_from_document",
    "model_to_document",
    "predict",
    "prune_by_sign",
    "recourse_guarantee_check",
    "render_flipset",
    "run_audit",
    "save_model",
    "score_rows",
    "solve",
    "solve_region",
    "summarize_thresholds",
    "verify_bound",
]
