"""Cost-of-recourse bounds, feasibility screens, and disparity reporting.

The expected-cost machinery works with the scaled-norm cost family
c(a | x) = c_x * ||a||: per negatively predicted point the closed-form unit
score u_x = w_A . x_A / ||w_A||^2 drives both the empirical mean cost and the
assembled upper bound

    p_plus * gamma_plus + p_minus * gamma_minus + 2 * gamma_max * R_A,

where the gammas are conditional means / the max of c_x * u_x over the
negative-prediction sample split by true label, and R_A measures how often
the sign of the actionable score component disagrees with the true label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .actions import ActionSetSpec, build_action_grid, discretization_gap
from .audit import QUANTILE_LEVELS, AuditRecord
from .costs import ScaledNormCost
from .errors import InputError
from .model import Dataset, LinearModel, align_dataset
from .solver import (
    INFEASIBLE,
    OPTIMAL,
    RecourseProblem,
    _actionable_indices,
    brute_force_solve,
    closed_form_cost,
)

GUARANTEED_ALL = "guaranteed_all"
GUARANTEED_NONE = "guaranteed_none"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class RecourseBound:
    """Plug-in estimates of the expected-cost bound components."""

    p_plus: float
    p_minus: float
    gamma_plus: float
    gamma_minus: float
    gamma_max: float
    internal_risk: float
    bound: float
    unit_scores: np.ndarray
    n_denied: int

    def to_json_dict(self) -> dict:
        return {
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
            "gamma_plus": self.gamma_plus,
            "gamma_minus": self.gamma_minus,
            "gamma_max": self.gamma_max,
            "internal_risk": self.internal_risk,
            "bound": self.bound,
            "n_denied": self.n_denied,
        }


@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    empirical_mean: float
    bound: float

    def to_json_dict(self) -> dict:
        return {"holds": self.holds, "empirical_mean": self.empirical_mean, "bound": self.bound}


def _denied_sample(
    model: LinearModel,
    data: Dataset,
    actionable: ActionSetSpec | Iterable[str] | None,
    c_x_fn: Callable[[np.ndarray], float] | None,
):
    aligned = align_dataset(data, model)
    if aligned.labels is None:
        raise InputError("expected-cost bounds require a labeled sample")
    w = model.coefficient_vector()
    scores = aligned.rows @ w + model.intercept
    denied = scores < 0.0
    if not denied.any():
        raise InputError("no negatively predicted rows in the sample")
    ids = _actionable_indices(model, actionable)
    w_a = w[ids]
    norm_sq = float(w_a @ w_a)
    if norm_sq == 0.0:
        raise InputError("all actionable coefficients are zero")
    rows = aligned.rows[denied]
    labels = aligned.labels[denied]
    u = (rows[:, ids] @ w_a) / norm_sq
    if c_x_fn is None:
        c = np.ones(rows.shape[0])
    else:
        c = np.array([float(c_x_fn(row)) for row in rows])
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise InputError("the cost scale function must return positive finite values")
    return u, c, labels


def expected_cost_bound(
    model: LinearModel,
    data: Dataset,
    actionable: ActionSetSpec | Iterable[str] | None = None,
    c_x_fn: Callable[[np.ndarray], float] | None = None,
) -> RecourseBound:
    """Assemble the expected-cost bound from a labeled sample.

    Conditional cells with no sample points contribute zero with probability
    weight zero. The scale function defaults to the constant 1.
    """
    u, c, labels = _denied_sample(model, data, actionable, c_x_fn)
    cu = c * u
    pos = labels == 1
    neg = ~pos
    p_plus = float(np.mean(pos))
    p_minus = 1.0 - p_plus
    gamma_plus = float(np.mean(cu[pos])) if pos.any() else 0.0
    gamma_minus = float(np.mean(-cu[neg])) if neg.any() else 0.0
    gamma_max = float(np.max(np.abs(cu)))
    risk = 0.0
    if pos.any():
        risk += p_plus * float(np.mean(u[pos] <= 0.0))
    if neg.any():
        risk += p_minus * float(np.mean(u[neg] >= 0.0))
    bound = p_plus * gamma_plus + p_minus * gamma_minus + 2.0 * gamma_max * risk
    return RecourseBound(
        p_plus=p_plus,
        p_minus=p_minus,
        gamma_plus=gamma_plus,
        gamma_minus=gamma_minus,
        gamma_max=gamma_max,
        internal_risk=risk,
        bound=bound,
        unit_scores=u,
        n_denied=int(u.size),
    )


def verify_bound(
    model: LinearModel,
    data: Dataset,
    actionable: ActionSetSpec | Iterable[str] | None = None,
    c_x_fn: Callable[[np.ndarray], float] | None = None,
) -> BoundCheck:
    """Check the assembled bound against the closed-form mean cost."""
    bound = expected_cost_bound(model, data, actionable, c_x_fn)
    u, c, _ = _denied_sample(model, data, actionable, c_x_fn)
    mean = float(np.mean(c * np.abs(u)))
    return BoundCheck(holds=bool(mean <= bound.bound + 1e-9), empirical_mean=mean, bound=bound.bound)


@dataclass(frozen=True)
class GuaranteeResult:
    verdict: str
    reasons: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {"verdict": self.verdict, "reasons": list(self.reasons)}


def recourse_guarantee_check(model: LinearModel, spec: ActionSetSpec) -> GuaranteeResult:
    """Screen whether recourse is guaranteed for all, for none, or unknown.

    Guaranteed for all: every feature the model actually uses can move in
    both directions over a nonempty range, and the achievable score range
    straddles the decision threshold. Guaranteed for none: the used features
    are all fixed, or every achievable score falls on one side of the
    threshold. Anything else requires an audit.
    """
    spec.validate_for(model)
    w = model.coefficient_vector()
    used = [j for j in range(model.dim) if w[j] != 0.0]

    smin, smax = model.intercept, model.intercept
    for j in range(model.dim):
        fa = spec[model.feature_names[j]]
        lo, hi = w[j] * fa.lb, w[j] * fa.ub
        smin += min(lo, hi)
        smax += max(lo, hi)

    reasons: list[str] = []
    if used and all(not spec[model.feature_names[j]].actionable for j in used):
        return GuaranteeResult(
            GUARANTEED_NONE,
            ("every feature with a nonzero coefficient is fixed, so no action changes the score",),
        )
    if smax < 0.0:
        return GuaranteeResult(
            GUARANTEED_NONE,
            ("no point inside the feature bounds can reach a nonnegative score",),
        )
    if smin >= 0.0:
        return GuaranteeResult(
            GUARANTEED_NONE,
            ("every point inside the feature bounds is already predicted +1",),
        )

    for j in used:
        fa = spec[model.feature_names[j]]
        if fa.actionability != "any":
            reasons.append(
                f"feature '{fa.name}' has a nonzero coefficient but cannot move in both directions"
            )
        elif fa.lb >= fa.ub:
            reasons.append(f"feature '{fa.name}' has an empty range")
    if reasons:
        return GuaranteeResult(INDETERMINATE, tuple(reasons))
    return GuaranteeResult(
        GUARANTEED_ALL,
        ("all used features move freely within their bounds and both classes are reachable",),
    )


@dataclass(frozen=True)
class DiscretizationInstance:
    """One grid-vs-continuous comparison instance (scaled-norm cost)."""

    model: LinearModel
    x: np.ndarray
    spec: ActionSetSpec
    c_x: float = 1.0


@dataclass(frozen=True)
class DiscretizationRecord:
    grid_cost: float
    continuous_cost: float
    gap: float
    bound: float
    within_bound: bool

    def to_json_dict(self) -> dict:
        return {
            "grid_cost": self.grid_cost,
            "continuous_cost": self.continuous_cost,
            "gap": self.gap,
            "bound": self.bound,
            "within_bound": self.within_bound,
        }


def discretization_error_report(
    instances: Iterable[DiscretizationInstance],
) -> tuple[DiscretizationRecord, ...]:
    """Grid-optimal scaled-norm cost vs the closed form, against c_x * Delta.

    Instances must use all-actionable interval action sets with
    endpoint-containing grids over negatively predicted points.
    """
    records = []
    for inst in instances:
        score = inst.model.score(inst.x)
        if score >= 0.0:
            raise InputError("discretization instances must be negatively predicted points")
        grid = build_action_grid(inst.spec, inst.x, inst.model)
        _, delta = discretization_gap(grid)
        problem = RecourseProblem(model=inst.model, x=np.asarray(inst.x, float), grid=grid)
        solution = brute_force_solve(problem, ScaledNormCost(inst.c_x))
        if solution.status != OPTIMAL:
            raise InputError("discretization instance has no feasible grid action")
        continuous = closed_form_cost(inst.model, inst.x, inst.c_x, inst.spec)
        gap = solution.cost - continuous
        bound = inst.c_x * delta
        records.append(
            DiscretizationRecord(
                grid_cost=float(solution.cost),
                continuous_cost=float(continuous),
                gap=float(gap),
                bound=float(bound),
                within_bound=bool(gap <= bound + 1e-9),
            )
        )
    return tuple(records)


@dataclass(frozen=True)
class GroupStats:
    count: int
    n_optimal: int
    n_infeasible: int
    feasibility_rate: float | None
    cost_quantiles: dict[str, float] | None

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "n_optimal": self.n_optimal,
            "n_infeasible": self.n_infeasible,
            "feasibility_rate": self.feasibility_rate,
            "cost_quantiles": self.cost_quantiles,
        }


@dataclass(frozen=True)
class DisparityReport:
    """Per-group feasibility and cost statistics, optionally within matched cells."""

    matching: str
    groups: dict[str, GroupStats]
    cells: dict[str, dict[str, GroupStats]] | None = None

    def to_json_dict(self) -> dict:
        doc: dict = {
            "matching": self.matching,
            "groups": {g: s.to_json_dict() for g, s in self.groups.items()},
        }
        if self.cells is not None:
            doc["cells"] = {
                cell: {g: s.to_json_dict() for g, s in members.items()}
                for cell, members in self.cells.items()
            }
        return doc


def _group_stats(records: Sequence[AuditRecord]) -> GroupStats:
    n_opt = sum(1 for r in records if r.status == OPTIMAL)
    n_inf = sum(1 for r in records if r.status == INFEASIBLE)
    costs = np.array([r.cost for r in records if r.status == OPTIMAL], dtype=float)
    quantiles = None
    if costs.size:
        values = np.percentile(costs, QUANTILE_LEVELS)
        quantiles = {f"p{level}": float(v) for level, v in zip(QUANTILE_LEVELS, values)}
    rate = n_opt / (n_opt + n_inf) if (n_opt + n_inf) else None
    return GroupStats(
        count=len(records),
        n_optimal=n_opt,
        n_infeasible=n_inf,
        feasibility_rate=rate,
        cost_quantiles=quantiles,
    )


def disparity_report(
    records: Sequence[AuditRecord],
    group_assignment: Mapping[int, str] | Sequence[str],
    matching: str = "none",
) -> DisparityReport:
    """Compare feasibility and cost distributions across groups.

    ``group_assignment`` maps row index to group label (or is a sequence
    indexed by row). With ``matching="by_label_and_score_band"`` statistics
    are additionally computed inside (true label, score decile) cells, which
    compares individuals with the same outcome and similar predicted risk.
    """
    if matching not in ("none", "by_label_and_score_band"):
        raise InputError(f"unknown matching rule '{matching}'")
    audited = [r for r in records if r.status in (OPTIMAL, INFEASIBLE)]

    def group_of(record: AuditRecord) -> str:
        try:
            return str(group_assignment[record.row])
        except (KeyError, IndexError):
            raise InputError(f"row {record.row} has no group assignment") from None

    by_group: dict[str, list[AuditRecord]] = {}
    for r in audited:
        by_group.setdefault(group_of(r), []).append(r)
    groups = {g: _group_stats(rs) for g, rs in sorted(by_group.items())}

    cells = None
    if matching == "by_label_and_score_band":
        if any(r.true_label is None for r in audited):
            raise InputError("matched comparisons need true labels on the audited records")
        scores = np.array([r.score for r in audited])
        edges = np.percentile(scores, np.arange(10, 100, 10)) if scores.size else np.array([])
        cells = {}
        for r in audited:
            band = int(np.searchsorted(edges, r.score, side="right"))
            key = f"y={r.true_label:+d},band={band}"
            cells.setdefault(key, {}).setdefault(group_of(r), []).append(r)
        cells = {
            key: {g: _group_stats(rs) for g, rs in sorted(members.items())}
            for key, members in sorted(cells.items())
        }
    return DisparityReport(matching=matching, groups=groups, cells=cells)
