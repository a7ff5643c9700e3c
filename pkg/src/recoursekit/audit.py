"""Population-level recourse audit: per-point certified solves and reporting.

Every dataset row gets exactly one record. Rows already predicted +1 are
skipped (they need no recourse and are excluded from the feasibility
denominator); all other rows are solved to a certified optimum or certified
infeasibility. Reports are deterministic for fixed inputs regardless of the
worker count, and the JSON/CSV emissions use fixed float formatting so they
are byte-comparable across runs.
"""

from __future__ import annotations

import hashlib
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .actions import ActionSetSpec, PercentileModel, action_set_to_document
from .costs import CostSpec
from .errors import InputError
from .model import Dataset, LinearModel, align_dataset, model_to_document
from .serialize import dumps_canonical, format_float
from .solver import INFEASIBLE, OPTIMAL, build_problem, solve

SKIPPED_POSITIVE = "skipped_positive"

QUANTILE_LEVELS = (10, 25, 50, 75, 90)


@dataclass(frozen=True)
class AuditRecord:
    """Outcome of one row's solve (or skip)."""

    row: int
    score: float
    predicted_label: int
    true_label: int | None
    status: str
    cost: float | None
    support: tuple[str, ...]
    solve_time_s: float


@dataclass(frozen=True)
class AuditReport:
    """Feasibility rate and cost distribution over the audited rows.

    The feasibility denominator counts only rows predicted -1; quantiles are
    linear-interpolated order statistics over the optimal costs. Per-record
    solve times stay in memory for benchmarking and are deliberately left out
    of the serialized forms, which must be byte-identical across runs.
    """

    records: tuple[AuditRecord, ...]
    cost_variant: str
    margin: float
    fingerprint: str

    @property
    def n_rows(self) -> int:
        return len(self.records)

    @property
    def n_skipped(self) -> int:
        return sum(1 for r in self.records if r.status == SKIPPED_POSITIVE)

    @property
    def n_optimal(self) -> int:
        return sum(1 for r in self.records if r.status == OPTIMAL)

    @property
    def n_infeasible(self) -> int:
        return sum(1 for r in self.records if r.status == INFEASIBLE)

    @property
    def n_audited(self) -> int:
        return self.n_optimal + self.n_infeasible

    @property
    def feasibility_rate(self) -> float | None:
        audited = self.n_audited
        if audited == 0:
            return None
        return self.n_optimal / audited

    def optimal_costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records if r.status == OPTIMAL], dtype=float)

    @property
    def cost_quantiles(self) -> dict[str, float] | None:
        costs = self.optimal_costs()
        if costs.size == 0:
            return None
        values = np.percentile(costs, QUANTILE_LEVELS)
        return {f"p{level}": float(v) for level, v in zip(QUANTILE_LEVELS, values)}

    def to_json_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "cost_variant": self.cost_variant,
            "margin": self.margin,
            "n_rows": self.n_rows,
            "n_audited": self.n_audited,
            "n_optimal": self.n_optimal,
            "n_infeasible": self.n_infeasible,
            "n_skipped_positive": self.n_skipped,
            "feasibility_rate": self.feasibility_rate,
            "cost_quantiles": self.cost_quantiles,
            "records": [
                {
                    "row": r.row,
                    "score": r.score,
                    "predicted_label": r.predicted_label,
                    "true_label": r.true_label,
                    "status": r.status,
                    "cost": r.cost,
                    "support": list(r.support),
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return dumps_canonical(self.to_json_dict())

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("row,label,status,cost,support\n")
        for r in self.records:
            cost = format_float(r.cost) if r.cost is not None else ""
            out.write(f"{r.row},{r.predicted_label},{r.status},{cost},{';'.join(r.support)}\n")
        return out.getvalue()


def configuration_fingerprint(
    model: LinearModel, spec: ActionSetSpec, cost_spec: CostSpec, margin: float
) -> str:
    payload = dumps_canonical(
        {
            "model": model_to_document(model),
            "actions": action_set_to_document(spec),
            "cost": cost_spec.to_document(),
            "margin": margin,
        }
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def run_audit(
    model: LinearModel,
    data: Dataset,
    spec: ActionSetSpec,
    cost_spec: CostSpec,
    percentiles: PercentileModel | None = None,
    margin: float = 0.0,
    *,
    jobs: int = 1,
) -> AuditReport:
    """Solve the recourse problem for every negatively predicted row.

    ``jobs`` sizes a worker pool for the per-row solves; the report is
    identical for any job count because records are assembled in row order.
    """
    aligned = align_dataset(data, model)
    spec.validate_for(model)
    if cost_spec.variant == "l2":
        raise InputError("audits require a table-backed cost variant, not l2")
    w = model.coefficient_vector()
    scores = aligned.rows @ w + model.intercept

    def audit_row(i: int) -> AuditRecord:
        score = float(scores[i])
        true_label = int(aligned.labels[i]) if aligned.labels is not None else None
        if score >= 0.0:
            return AuditRecord(i, score, 1, true_label, SKIPPED_POSITIVE, None, (), 0.0)
        x = aligned.rows[i]
        problem = build_problem(model, x, spec, cost_spec, percentiles, margin=margin)
        started = time.perf_counter()
        solution = solve(problem)
        elapsed = time.perf_counter() - started
        if solution.status == OPTIMAL:
            support = tuple(
                model.feature_names[j] for j in sorted(solution.support)
            )
            return AuditRecord(i, score, -1, true_label, OPTIMAL, solution.cost, support, elapsed)
        if solution.status == INFEASIBLE:
            return AuditRecord(i, score, -1, true_label, INFEASIBLE, None, (), elapsed)
        raise RuntimeError(f"unexpected solve status '{solution.status}' for row {i}")

    indices = range(aligned.n)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = tuple(pool.map(audit_row, indices))
    else:
        records = tuple(audit_row(i) for i in indices)

    return AuditReport(
        records=records,
        cost_variant=cost_spec.variant,
        margin=float(margin),
        fingerprint=configuration_fingerprint(model, spec, cost_spec, float(margin)),
    )


def summarize_thresholds(report: AuditReport, thresholds: Sequence[float]) -> list[int]:
    """Per threshold t, how many optimally-solved rows have cost > t.

    Under the max-percentile-shift cost this is the number of individuals who
    would lack recourse if every feature change were capped at t percentiles,
    read off a single audit run.
    """
    if report.cost_variant != "max_pct":
        raise InputError(
            "threshold summaries require an audit run under the max_pct cost variant"
        )
    costs = report.optimal_costs()
    return [int(np.sum(costs > t)) for t in thresholds]
