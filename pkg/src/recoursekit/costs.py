"""Action cost functions and precomputed per-action cost tables.

Four variants are supported:

* ``max_pct`` — the largest per-feature percentile shift; solved as a
  minimax objective. An optimum of 0.25 certifies that every flipping action
  moves some feature by at least 25 percentiles.
* ``total_log_pct`` — sum over features of |log((1 - Q(x_j + a_j)) /
  (1 - Q(x_j)))|; grows without bound as a feature approaches the top of the
  population, so high-percentile moves are expensive.
* ``linear`` — sum of weighted absolute action magnitudes.
* ``l2`` — scale * ||a||_2; not separable, so it is served only by the
  exhaustive oracle and the closed-form bound machinery, never by cost tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .actions import ActionGrid, ActionSetSpec, PercentileModel
from .errors import InputError

VARIANTS = ("max_pct", "total_log_pct", "linear", "l2")
PERCENTILE_VARIANTS = ("max_pct", "total_log_pct")


@dataclass(frozen=True)
class CostSpec:
    """Choice of cost function plus optional per-feature weight overrides."""

    variant: str = "max_pct"
    weights: Mapping[str, float] | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise InputError(
                f"unknown cost variant '{self.variant}'; expected one of {', '.join(VARIANTS)}"
            )
        if self.weights is not None:
            clean = {}
            for name, w in self.weights.items():
                w = float(w)
                if not (math.isfinite(w) and w > 0):
                    raise InputError(f"cost weight for feature '{name}' must be positive")
                clean[str(name)] = w
            object.__setattr__(self, "weights", dict(clean))
        object.__setattr__(self, "scale", float(self.scale))
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise InputError("cost scale must be positive")

    @property
    def minimax(self) -> bool:
        return self.variant == "max_pct"

    @property
    def separable(self) -> bool:
        return self.variant in ("total_log_pct", "linear")

    def weight(self, feature: str) -> float:
        if self.weights is None:
            return 1.0
        return self.weights.get(feature, 1.0)

    def to_document(self) -> dict:
        doc: dict = {"variant": self.variant}
        if self.weights:
            doc["weights"] = dict(self.weights)
        if self.scale != 1.0:
            doc["scale"] = self.scale
        return doc


@dataclass(frozen=True)
class CostTable:
    """Nonnegative per-action costs c_jk aligned with an action grid.

    ``minimax`` selects the solver objective: max over features instead of
    the separable sum. Costs are zero at the no-action entry and nondecreasing
    in |a| along each direction away from 0.
    """

    feature_indices: tuple[int, ...]
    costs: tuple[np.ndarray, ...]
    minimax: bool = False

    def __post_init__(self) -> None:
        frozen = []
        for c in self.costs:
            arr = np.asarray(c, dtype=float).copy()
            if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
                raise InputError("cost table entries must be finite and nonnegative")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "costs", tuple(frozen))
        if len(self.feature_indices) != len(self.costs):
            raise InputError("cost table needs one cost array per feature")


def _clamped_tail(q: np.ndarray | float, n: int):
    """1 - Q with the top-rank value replaced by 1/(2n) to keep logs finite."""
    tail = 1.0 - np.asarray(q, dtype=float)
    return np.where(tail <= 0.0, 1.0 / (2 * n), tail)


def _percentile_feature_cost(
    variant: str, values: np.ndarray, xj: float, Q: PercentileModel, feature: str
) -> np.ndarray:
    q0 = Q.percentile(feature, xj)
    q = Q.percentile(feature, xj + values)
    if variant == "max_pct":
        cost = np.abs(q - q0)
    else:
        n = Q.sample_size(feature)
        cost = np.abs(np.log(_clamped_tail(q, n) / _clamped_tail(q0, n)))
    cost[values == 0.0] = 0.0
    return cost


def action_cost(
    spec: CostSpec,
    x: Sequence[float],
    a: Sequence[float],
    Q: PercentileModel | None = None,
    feature_names: Sequence[str] | None = None,
    action_set: ActionSetSpec | None = None,
) -> float:
    """Cost of applying action vector ``a`` at point ``x``.

    Percentile variants require a fitted percentile model whose features
    cover ``feature_names`` (defaults to the percentile model's own order).
    When ``action_set`` is given, the action is validated against it first.
    """
    xv = np.asarray(x, dtype=float)
    av = np.asarray(a, dtype=float)
    if xv.shape != av.shape:
        raise InputError("point and action must have the same length")
    if spec.variant in PERCENTILE_VARIANTS:
        if Q is None:
            raise InputError(f"cost variant '{spec.variant}' requires a percentile model")
        if feature_names is None:
            feature_names = Q.feature_names
        if len(feature_names) != xv.size:
            raise InputError("feature names must have one entry per point value")
    elif feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(xv.size))

    if action_set is not None:
        _validate_action(action_set, feature_names, xv, av)

    if spec.variant == "l2":
        return float(spec.scale * np.linalg.norm(av))
    if spec.variant == "linear":
        weights = np.array([spec.weight(n) for n in feature_names])
        return float(np.sum(weights * np.abs(av)))

    per_feature = []
    for j, name in enumerate(feature_names):
        c = float(
            _percentile_feature_cost(
                spec.variant, np.array([av[j]]), float(xv[j]), Q, name
            )[0]
        ) * spec.weight(name)
        per_feature.append(c)
    if spec.variant == "max_pct":
        return float(max(per_feature)) if per_feature else 0.0
    return float(sum(per_feature))


def _validate_action(
    action_set: ActionSetSpec, names: Sequence[str], x: np.ndarray, a: np.ndarray
) -> None:
    for j, name in enumerate(names):
        fa = action_set[name]
        aj, xj = float(a[j]), float(x[j])
        if aj == 0.0:
            continue
        if not fa.actionable:
            raise InputError(f"feature '{name}' is fixed but the action changes it")
        if fa.actionability == "increase_only" and aj < 0:
            raise InputError(f"feature '{name}' may only increase")
        if fa.actionability == "decrease_only" and aj > 0:
            raise InputError(f"feature '{name}' may only decrease")
        if not (fa.lb - 1e-12 <= xj + aj <= fa.ub + 1e-12):
            raise InputError(f"feature '{name}': action leaves the bounds [{fa.lb}, {fa.ub}]")


def build_cost_table(
    spec: CostSpec,
    grid: ActionGrid,
    Q: PercentileModel | None = None,
) -> CostTable:
    """Precompute per-action costs for every grid entry.

    The ``l2`` variant has no per-feature decomposition and is rejected here;
    use the exhaustive oracle for it.
    """
    if spec.variant == "l2":
        raise InputError(
            "the l2 cost has no separable table; solve it with the exhaustive oracle"
        )
    if spec.variant in PERCENTILE_VARIANTS and Q is None:
        raise InputError(f"cost variant '{spec.variant}' requires a percentile model")

    costs = []
    for p, name in enumerate(grid.feature_names):
        values = grid.values[p]
        if spec.variant == "linear":
            c = spec.weight(name) * np.abs(values)
        else:
            c = spec.weight(name) * _percentile_feature_cost(
                spec.variant, values, float(grid.x[grid.feature_indices[p]]), Q, name
            )
        costs.append(c)
    return CostTable(
        feature_indices=grid.feature_indices,
        costs=tuple(costs),
        minimax=spec.minimax,
    )


class ScaledNormCost:
    """The c * ||a||_2 cost as a callable action functional.

    Exposes a vectorized ``batch`` method so exhaustive enumeration can
    evaluate whole blocks of candidate actions at once.
    """

    def __init__(self, scale: float = 1.0):
        scale = float(scale)
        if not (math.isfinite(scale) and scale > 0):
            raise InputError("scale must be positive")
        self.scale = scale

    def __call__(self, a: Sequence[float]) -> float:
        return self.scale * float(np.linalg.norm(np.asarray(a, dtype=float)))

    def batch(self, actions: np.ndarray) -> np.ndarray:
        return self.scale * np.sqrt(np.sum(np.asarray(actions, dtype=float) ** 2, axis=1))
