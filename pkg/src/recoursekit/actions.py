"""Per-feature actionability rules, discretized action grids, and percentiles.

An action grid holds, for every non-fixed feature, the sorted feasible action
magnitudes (always containing 0 and the feasible-interval endpoints) together
with their score gains under a model. Fixed features are omitted, which is
the same as giving them the single action 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, ParseError
from .model import Dataset, LinearModel, validate_point

KINDS = ("real", "integer", "binary")
ACTIONABILITIES = ("fixed", "any", "increase_only", "decrease_only")
DEFAULT_GRID_SIZE = 100


@dataclass(frozen=True)
class FeatureAction:
    """Actionability rule for one feature.

    ``grid_size`` is the number of equal action steps used to discretize a
    real feature's feasible interval (the grid then has grid_size + 1 points
    plus 0 and both endpoints). Integer and binary features enumerate every
    feasible integer action and ignore it.
    """

    name: str
    kind: str
    lb: float
    ub: float
    actionability: str = "any"
    grid_size: int = DEFAULT_GRID_SIZE
    linked_group: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"feature '{self.name}': unknown kind '{self.kind}'")
        if self.actionability not in ACTIONABILITIES:
            raise InputError(
                f"feature '{self.name}': unknown actionability '{self.actionability}'"
            )
        object.__setattr__(self, "lb", float(self.lb))
        object.__setattr__(self, "ub", float(self.ub))
        if not (math.isfinite(self.lb) and math.isfinite(self.ub)):
            raise InputError(f"feature '{self.name}': bounds must be finite")
        if self.lb > self.ub:
            raise InputError(
                f"feature '{self.name}': lower bound {self.lb} exceeds upper bound {self.ub}"
            )
        if self.kind == "binary" and (self.lb, self.ub) != (0.0, 1.0):
            raise InputError(f"feature '{self.name}': binary features must have bounds [0, 1]")
        if int(self.grid_size) != self.grid_size or self.grid_size < 1:
            raise InputError(f"feature '{self.name}': grid_size must be a positive integer")
        object.__setattr__(self, "grid_size", int(self.grid_size))

    @property
    def actionable(self) -> bool:
        return self.actionability != "fixed"


@dataclass(frozen=True)
class ActionSetSpec:
    """An ordered collection of per-feature actionability rules."""

    features: tuple[FeatureAction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise InputError("action set features must have unique names")
        groups: dict[str, list[FeatureAction]] = {}
        for f in self.features:
            if f.linked_group is not None:
                groups.setdefault(f.linked_group, []).append(f)
        for group, members in groups.items():
            if len(members) < 2:
                raise InputError(f"linked group '{group}' must contain at least 2 features")
            for f in members:
                if f.kind != "binary":
                    raise InputError(
                        f"linked group '{group}': feature '{f.name}' is not binary"
                    )

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, name: str) -> FeatureAction:
        for f in self.features:
            if f.name == name:
                return f
        raise InputError(f"action set has no entry for feature '{name}'")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def validate_for(self, model: LinearModel) -> None:
        """Every model feature must have an actionability rule."""
        missing = [n for n in model.feature_names if n not in self.names]
        if missing:
            raise InputError(
                f"action set has no entry for feature '{missing[0]}'"
            )

    def linked_groups_for(self, model: LinearModel) -> tuple[frozenset[int], ...]:
        """Linked groups as sets of model feature indices (at most one may change)."""
        groups: dict[str, set[int]] = {}
        for j, name in enumerate(model.feature_names):
            fa = self[name]
            if fa.linked_group is not None and fa.actionable:
                groups.setdefault(fa.linked_group, set()).add(j)
        return tuple(frozenset(g) for _, g in sorted(groups.items()) if len(g) >= 2)


def action_set_to_document(spec: ActionSetSpec) -> list[dict]:
    doc = []
    for f in spec.features:
        entry: dict = {
            "name": f.name,
            "kind": f.kind,
            "lb": f.lb,
            "ub": f.ub,
            "actionability": f.actionability,
        }
        if f.kind == "real":
            entry["grid_size"] = f.grid_size
        if f.linked_group is not None:
            entry["linked_group"] = f.linked_group
        doc.append(entry)
    return doc


def action_set_from_document(
    doc: Sequence[Mapping], default_grid_size: int = DEFAULT_GRID_SIZE
) -> ActionSetSpec:
    if not isinstance(doc, Sequence) or isinstance(doc, (str, bytes)):
        raise ParseError("action set document must be a JSON array of feature objects")
    features = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, Mapping):
            raise ParseError(f"action set entry {i} is not an object")
        for key in ("name", "kind", "lb", "ub", "actionability"):
            if key not in entry:
                raise ParseError(f"action set entry {i} is missing the '{key}' field")
        features.append(
            FeatureAction(
                name=str(entry["name"]),
                kind=str(entry["kind"]),
                lb=entry["lb"],
                ub=entry["ub"],
                actionability=str(entry["actionability"]),
                grid_size=int(entry.get("grid_size", default_grid_size)),
                linked_group=(
                    str(entry["linked_group"]) if entry.get("linked_group") is not None else None
                ),
            )
        )
    return ActionSetSpec(tuple(features))


@dataclass(frozen=True)
class ActionGrid:
    """Discretized feasible actions per non-fixed feature, with score gains.

    Invariants: every feature's values are sorted, contain 0, respect the
    declared direction, keep x + a inside bounds (integral for integer and
    binary features), and include both feasible-interval endpoints.
    """

    feature_indices: tuple[int, ...]
    feature_names: tuple[str, ...]
    values: tuple[np.ndarray, ...]
    gains: tuple[np.ndarray, ...]
    x: np.ndarray

    def __post_init__(self) -> None:
        vals = tuple(_frozen(v) for v in self.values)
        gains = tuple(_frozen(g) for g in self.gains)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "x", _frozen(self.x))

    @property
    def n_features(self) -> int:
        return len(self.feature_indices)

    def max_gain_total(self) -> float:
        return float(sum(float(g.max()) for g in self.gains)) if self.gains else 0.0

    def gaps(self) -> np.ndarray:
        """Largest consecutive spacing of the induced value grid, per feature."""
        out = np.zeros(self.n_features)
        for p, v in enumerate(self.values):
            if v.size > 1:
                out[p] = float(np.diff(v).max())
        return out


def _frozen(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float).copy()
    arr.flags.writeable = False
    return arr


def build_action_grid(spec: ActionSetSpec, x: Sequence[float], model: LinearModel) -> ActionGrid:
    """Discretize the feasible actions from ``x`` for every non-fixed feature.

    Real features get grid_size equal action steps over the feasible interval
    plus both endpoints and 0; integer and binary features enumerate every
    feasible integer action. A feature with no room to move in its allowed
    direction yields the single action 0 (conditionally immutable here).
    """
    xv = validate_point(model, x)
    spec.validate_for(model)
    w = model.coefficient_vector()

    indices: list[int] = []
    names: list[str] = []
    values: list[np.ndarray] = []
    gains: list[np.ndarray] = []
    for j, name in enumerate(model.feature_names):
        fa = spec[name]
        xj = float(xv[j])
        if not (fa.lb <= xj <= fa.ub):
            raise InputError(
                f"feature '{name}': value {xj} is outside bounds [{fa.lb}, {fa.ub}]"
            )
        if fa.kind in ("integer", "binary") and xj != int(xj):
            raise InputError(f"feature '{name}': value {xj} is not an integer")
        if not fa.actionable:
            continue

        lo = fa.lb - xj if fa.actionability in ("any", "decrease_only") else 0.0
        hi = fa.ub - xj if fa.actionability in ("any", "increase_only") else 0.0
        if fa.kind in ("integer", "binary"):
            acts = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
        else:
            acts = np.linspace(lo, hi, fa.grid_size + 1)
            acts = np.concatenate([acts, [lo, hi, 0.0]])
        acts = np.unique(acts)
        indices.append(j)
        names.append(name)
        values.append(acts)
        gains.append(w[j] * acts)

    return ActionGrid(
        feature_indices=tuple(indices),
        feature_names=tuple(names),
        values=tuple(values),
        gains=tuple(gains),
        x=xv,
    )


def prune_by_sign(grid: ActionGrid, model: LinearModel) -> ActionGrid:
    """Drop actions whose gain cannot help flip the prediction.

    Keeps 0 always; a nonzero action survives only when its gain w_j * a is
    strictly positive. With nonnegative cost tables this leaves the optimal
    solve value unchanged (when no support exclusions are in play).
    """
    w = model.coefficient_vector()
    values, gains = [], []
    for p, j in enumerate(grid.feature_indices):
        v = grid.values[p]
        keep = (v == 0.0) | (w[j] * v > 0.0)
        values.append(v[keep])
        gains.append(w[j] * v[keep])
    return replace(grid, values=tuple(values), gains=tuple(gains))


def discretization_gap(grid: ActionGrid) -> tuple[np.ndarray, float]:
    """Per-feature largest grid spacing and the aggregate sqrt(sum of squares)."""
    deltas = grid.gaps()
    return deltas, float(np.sqrt(np.sum(deltas**2)))


@dataclass(frozen=True)
class PercentileModel:
    """Per-feature empirical CDFs over a target population.

    Uses the right-continuous rank rule Q(v) = #{sample <= v} / n, so
    Q(min sample) >= 1/n > 0 and Q(max sample) = 1.
    """

    feature_names: tuple[str, ...]
    samples: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(_frozen(np.sort(s)) for s in self.samples))
        if len(self.feature_names) != len(self.samples):
            raise InputError("percentile model needs one sample per feature")
        for name, s in zip(self.feature_names, self.samples):
            if s.size == 0:
                raise InputError(f"feature '{name}': empty percentile sample")

    def _column(self, feature: str | int) -> np.ndarray:
        if isinstance(feature, str):
            try:
                feature = self.feature_names.index(feature)
            except ValueError:
                raise InputError(f"percentile model has no feature named '{feature}'") from None
        return self.samples[feature]

    def sample_size(self, feature: str | int) -> int:
        return int(self._column(feature).size)

    def percentile(self, feature: str | int, value):
        """Q(value) for one feature; accepts scalars or arrays."""
        s = self._column(feature)
        ranks = np.searchsorted(s, value, side="right")
        q = ranks / s.size
        return float(q) if np.isscalar(value) else q


def fit_percentiles(data: Dataset) -> PercentileModel:
    """Fit right-continuous empirical CDFs from a population sample."""
    if data.n == 0:
        raise InputError("cannot fit percentiles on an empty dataset")
    return PercentileModel(
        feature_names=data.feature_names,
        samples=tuple(data.rows[:, j] for j in range(len(data.feature_names))),
    )
