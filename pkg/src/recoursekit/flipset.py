"""Enumeration of minimal-cost actions with distinct supports, and rendering.

Items are the per-support minimal-cost actions in nondecreasing cost order:
each round yields the cheapest action whose changed-feature set has not
appeared yet, exactly as if the previous supports had been banned one by one
before re-solving. Internally the support space is split into disjoint
regions (feature must change / must not change), so each region is solved
once with structural constraints instead of exact-set bans and the search
bounds stay tight. Enumeration run to exhaustion yields one minimal-cost
action for every feature subset that can flip the prediction; an empty
exhausted list is a certificate that no actionable recourse exists.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .serialize import dumps_canonical, format_float
from .solver import OPTIMAL, RecourseProblem, RecourseSolution, solve_region

CAVEAT = (
    "This list may omit other changeable features; each item flips the "
    "prediction only if every feature not shown in it stays unchanged."
)


@dataclass(frozen=True)
class FeatureChange:
    feature: str
    current: float
    required: float


@dataclass(frozen=True)
class FlipsetItem:
    """One minimal-cost action, listed as current -> required values."""

    changes: tuple[FeatureChange, ...]
    cost: float
    support: tuple[int, ...]


@dataclass(frozen=True)
class Flipset:
    """Ordered items with pairwise-distinct supports and nondecreasing costs.

    ``exhausted`` is True when enumeration stopped because no further
    flipping support exists, rather than because the item budget was reached.
    """

    items: tuple[FlipsetItem, ...]
    exhausted: bool


def enumerate_actions(problem: RecourseProblem, T: int | float | None = None) -> Flipset:
    """Enumerate up to T minimal-cost actions with distinct supports.

    ``T`` of None (or infinity) enumerates until no flipping support remains.
    Requires a negatively predicted point; T = 0 is rejected so that "did not
    ask for items" is never confused with "certified that none exist".
    Supports already on the problem's exclusion list are never emitted.
    """
    if problem.score() >= 0.0:
        raise InputError("the point is already predicted +1; no flipset is needed")
    if T is None or (isinstance(T, float) and math.isinf(T) and T > 0):
        budget = None
    elif isinstance(T, (int, float)) and float(T).is_integer() and T >= 1:
        budget = int(T)
    else:
        raise InputError(f"item count must be a positive integer or unbounded, got {T!r}")

    names = problem.model.feature_names
    actionable = tuple(problem.grid.feature_indices)
    heap: list = []
    seq = 0

    def push_region(must_change: frozenset[int], must_not_change: frozenset[int]) -> None:
        nonlocal seq
        solution = solve_region(problem, must_change, must_not_change)
        if solution.status != OPTIMAL:
            return
        seq += 1
        key = (
            solution.cost,
            len(solution.support),
            tuple(sorted(solution.support)),
            float(np.abs(solution.action).sum()),
            seq,
        )
        heapq.heappush(heap, (key, solution, must_change, must_not_change))

    push_region(frozenset(), frozenset())
    items: list[FlipsetItem] = []
    exhausted = False
    while True:
        if budget is not None and len(items) >= budget:
            break
        if not heap:
            exhausted = True
            break
        _, solution, must_change, must_not_change = heapq.heappop(heap)
        support = frozenset(solution.support)
        if support not in problem.excluded_supports:
            items.append(_item_from_solution(solution, problem, names))
        # split the region around this support: each child pins the earlier
        # free features to this support's membership and flips one, which
        # partitions the remaining supports without overlap
        pinned_in, pinned_out = set(must_change), set(must_not_change)
        for j in actionable:
            if j in pinned_in or j in pinned_out:
                continue
            if j in support:
                push_region(frozenset(pinned_in), frozenset(pinned_out | {j}))
                pinned_in.add(j)
            else:
                push_region(frozenset(pinned_in | {j}), frozenset(pinned_out))
                pinned_out.add(j)
    return Flipset(items=tuple(items), exhausted=exhausted)


def _item_from_solution(
    solution: RecourseSolution, problem: RecourseProblem, names: Sequence[str]
) -> FlipsetItem:
    support = tuple(sorted(solution.support))
    changes = tuple(
        FeatureChange(
            feature=names[j],
            current=float(problem.x[j]),
            required=float(problem.x[j] + solution.action[j]),
        )
        for j in support
    )
    return FlipsetItem(changes=changes, cost=float(solution.cost), support=support)


@dataclass(frozen=True)
class FlipsetDocument:
    """Rendered flipset: a fixed-width text table plus a JSON payload."""

    text: str
    data: dict

    def to_json(self) -> str:
        return dumps_canonical(self.data)


def render_flipset(
    flipset: Flipset,
    prediction_score: float | None = None,
) -> FlipsetDocument:
    """Render items as Features to Change / Current Values / Required Values.

    An empty exhausted flipset renders as a certified no-recourse statement.
    """
    data: dict = {
        "items": [
            {
                "changes": [
                    {"feature": c.feature, "current": c.current, "required": c.required}
                    for c in item.changes
                ],
                "cost": item.cost,
            }
            for item in flipset.items
        ],
        "exhausted": flipset.exhausted,
        "caveat": CAVEAT,
    }
    if prediction_score is not None:
        data["prediction"] = {
            "score": float(prediction_score),
            "label": 1 if prediction_score >= 0 else -1,
        }

    if not flipset.items:
        if flipset.exhausted:
            body = "No actionable recourse exists for this point under the given action set (certified)."
        else:
            body = "No actions enumerated."
        return FlipsetDocument(text=body + "\n\n" + CAVEAT + "\n", data=data)

    name_w = max(
        [len("Features to Change")]
        + [len(c.feature) for item in flipset.items for c in item.changes]
    )
    cur_w = max(
        [len("Current Values")]
        + [len(format_float(c.current)) for item in flipset.items for c in item.changes]
    )
    req_w = max(
        [len("Required Values")]
        + [len(format_float(c.required)) for item in flipset.items for c in item.changes]
    )
    width = name_w + 2 + cur_w + 6 + req_w
    lines = [
        f"{'Features to Change':<{name_w}}  {'Current Values':>{cur_w}}      {'Required Values':>{req_w}}",
        "=" * width,
    ]
    for i, item in enumerate(flipset.items):
        if i:
            lines.append("-" * width)
        for c in item.changes:
            lines.append(
                f"{c.feature:<{name_w}}  {format_float(c.current):>{cur_w}}  ->  "
                f"{format_float(c.required):>{req_w}}"
            )
        lines.append(f"{'[cost: ' + format_float(item.cost) + ']':>{width}}")
    lines += ["=" * width, "", CAVEAT]
    return FlipsetDocument(text="\n".join(lines) + "\n", data=data)
