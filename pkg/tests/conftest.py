"""Shared fixtures and randomized instance generators.

Generators are deterministic given a numpy Generator, and sized so that the
exhaustive oracle stays cheap: small dimension, few grid points per feature.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import pytest
from hypothesis import settings

import recoursekit as rk

settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")


@dataclass
class Instance:
    model: rk.LinearModel
    x: np.ndarray
    spec: rk.ActionSetSpec
    cost_spec: rk.CostSpec
    percentiles: rk.PercentileModel
    problem: rk.RecourseProblem


def _sample_value(rng: np.random.Generator, fa: rk.FeatureAction) -> float:
    if fa.kind == "real":
        return float(rng.uniform(fa.lb, fa.ub))
    return float(rng.integers(int(fa.lb), int(fa.ub) + 1))


def random_action_set(
    rng: np.random.Generator,
    d: int,
    *,
    allow_groups: bool = True,
    actionability_pool: tuple[str, ...] = ("fixed", "any", "any", "increase_only", "decrease_only"),
) -> rk.ActionSetSpec:
    features = []
    for j in range(d):
        kind = rng.choice(("real", "integer", "binary"))
        if kind == "binary":
            lb, ub = 0.0, 1.0
        elif kind == "integer":
            lb = float(rng.integers(-3, 3))
            ub = lb + float(rng.integers(1, 5))
        else:
            lb = float(rng.uniform(-3.0, 0.0))
            ub = lb + float(rng.uniform(0.5, 4.0))
        features.append(
            rk.FeatureAction(
                name=f"f{j}",
                kind=str(kind),
                lb=lb,
                ub=ub,
                actionability=str(rng.choice(actionability_pool)),
                grid_size=int(rng.integers(1, 4)),
            )
        )
    if allow_groups and rng.random() < 0.4:
        binaries = [i for i, f in enumerate(features) if f.kind == "binary" and f.actionable]
        if len(binaries) >= 2:
            chosen = rng.choice(binaries, size=2, replace=False)
            for i in chosen:
                features[i] = replace(features[i], linked_group="g0")
    return rk.ActionSetSpec(tuple(features))


def random_instance(
    rng: np.random.Generator,
    *,
    d_max: int = 6,
    allow_exclusions: bool = True,
    allow_groups: bool = True,
    allow_margin: bool = True,
    variants: tuple[str, ...] = ("linear", "total_log_pct", "max_pct"),
    force_negative: bool = True,
) -> Instance:
    d = int(rng.integers(1, d_max + 1))
    spec = random_action_set(rng, d, allow_groups=allow_groups)
    x = np.array([_sample_value(rng, f) for f in spec])

    w = rng.normal(size=d)
    w[rng.random(size=d) < 0.15] = 0.0
    raw = float(w @ x)
    if force_negative:
        intercept = -raw - float(rng.uniform(0.05, 2.0))
    else:
        intercept = -raw + float(rng.normal(scale=1.0))
    model = rk.LinearModel(tuple(f.name for f in spec), tuple(w), intercept)

    population = np.array(
        [[_sample_value(rng, f) for f in spec] for _ in range(25)]
    )
    percentiles = rk.fit_percentiles(rk.Dataset(model.feature_names, population))

    variant = str(rng.choice(variants))
    weights = None
    if rng.random() < 0.3:
        weights = {f.name: float(rng.uniform(0.5, 2.0)) for f in spec if rng.random() < 0.5}
        weights = weights or None
    cost_spec = rk.CostSpec(variant=variant, weights=weights)

    margin = float(rng.uniform(0.0, 0.4)) if (allow_margin and rng.random() < 0.3) else 0.0
    problem = rk.build_problem(model, x, spec, cost_spec, percentiles, margin=margin)

    if allow_exclusions and rng.random() < 0.4:
        actionable = list(problem.grid.feature_indices)
        excluded = set()
        for _ in range(int(rng.integers(1, 3))):
            if not actionable:
                break
            size = int(rng.integers(1, len(actionable) + 1))
            excluded.add(frozenset(rng.choice(actionable, size=size, replace=False).tolist()))
        problem = replace(problem, excluded_supports=frozenset(excluded))

    return Instance(model, x, spec, cost_spec, percentiles, problem)


def random_l2_instance(
    rng: np.random.Generator,
    *,
    d_max: int = 4,
    grid_size: int = 6,
    c_x: float | None = None,
) -> rk.DiscretizationInstance:
    """Negatively predicted point with a box of actions around the continuous optimum.

    The actionable coefficients are unit-norm with zero intercept and the box
    is wide enough to contain the straight-line projection onto the decision
    boundary, so the closed-form cost is exactly the continuous optimum.
    """
    d = int(rng.integers(2, d_max + 1))
    w = rng.normal(size=d)
    while np.linalg.norm(w) < 1e-6:
        w = rng.normal(size=d)
    w = w / np.linalg.norm(w)
    x = rng.uniform(-2.0, 2.0, size=d)
    if float(w @ x) >= 0.0:
        x = -x
    while float(w @ x) >= -1e-6:
        x = rng.uniform(-2.0, 2.0, size=d)
        if float(w @ x) >= 0.0:
            x = -x
    model = rk.LinearModel(tuple(f"f{j}" for j in range(d)), tuple(w), 0.0)
    spec = rk.ActionSetSpec(
        tuple(
            rk.FeatureAction(
                name=f"f{j}",
                kind="real",
                lb=float(x[j] - 5.0),
                ub=float(x[j] + 5.0),
                actionability="any",
                grid_size=grid_size,
            )
            for j in range(d)
        )
    )
    scale = float(rng.uniform(0.5, 2.0)) if c_x is None else c_x
    return rk.DiscretizationInstance(model=model, x=x, spec=spec, c_x=scale)


def gaussian_labeled_sample(
    rng: np.random.Generator, model: rk.LinearModel, n: int = 40
) -> rk.Dataset:
    rows = rng.uniform(-2.0, 2.0, size=(n, model.dim))
    labels = rng.choice((-1, 1), size=n)
    return rk.Dataset(model.feature_names, rows, labels)


def flip_capable_supports(problem: rk.RecourseProblem) -> set[frozenset[int]]:
    """All changed-feature sets admitting a flipping action, by enumeration."""
    import itertools

    from recoursekit.solver import FLIP_SLACK

    grid = problem.grid
    s0 = problem.score()
    groups = problem.linked_groups
    supports: set[frozenset[int]] = set()
    option_lists = [
        [(float(a), float(g)) for a, g in zip(values, gains)]
        for values, gains in zip(grid.values, grid.gains)
    ]
    for combo in itertools.product(*option_lists):
        gain = s0 + sum(g for _, g in combo)
        if gain < problem.margin - FLIP_SLACK:
            continue
        support = frozenset(
            j for j, (a, _) in zip(grid.feature_indices, combo) if a != 0.0
        )
        if any(len(support & g) > 1 for g in groups):
            continue
        supports.add(support)
    supports.discard(frozenset())
    return supports


def assert_solutions_agree(a: rk.RecourseSolution, b: rk.RecourseSolution, tol: float = 1e-9):
    assert a.status == b.status, f"status mismatch: {a.status} vs {b.status}"
    if a.status == rk.OPTIMAL:
        assert a.cost == pytest.approx(b.cost, abs=tol)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


# Hand instances reused across modules ---------------------------------------

@pytest.fixture
def six_combo() -> rk.RecourseProblem:
    """Two features, 2 x 3 grid options, separable costs; optimum (0, 0.5) at 0.2."""
    model = rk.LinearModel(("a", "b"), (1.0, 2.0), -1.0)
    grid = rk.ActionGrid(
        feature_indices=(0, 1),
        feature_names=("a", "b"),
        values=(np.array([0.0, 1.0]), np.array([0.0, 0.5, 1.0])),
        gains=(np.array([0.0, 1.0]), np.array([0.0, 1.0, 2.0])),
        x=np.zeros(2),
    )
    table = rk.CostTable(
        feature_indices=(0, 1),
        costs=(np.array([0.0, 0.3]), np.array([0.0, 0.2, 0.5])),
    )
    return rk.RecourseProblem(model=model, x=np.zeros(2), grid=grid, cost_table=table)


@pytest.fixture
def denial_example() -> Instance:
    """Three binaries with an immutable first feature and threshold 2.5.

    Any point with the immutable feature at 0 is certifiably denied: the best
    reachable score is 1 + 1 - 2.5 < 0.
    """
    model = rk.LinearModel(("f1", "f2", "f3"), (1.0, 1.0, 1.0), -2.5)
    spec = rk.ActionSetSpec(
        (
            rk.FeatureAction("f1", "binary", 0, 1, "fixed"),
            rk.FeatureAction("f2", "binary", 0, 1, "any"),
            rk.FeatureAction("f3", "binary", 0, 1, "any"),
        )
    )
    x = np.array([0.0, 1.0, 1.0])
    population = rk.Dataset(model.feature_names, np.array([[0, 0, 0], [1, 1, 1], [0, 1, 0]]))
    percentiles = rk.fit_percentiles(population)
    cost_spec = rk.CostSpec(variant="linear")
    problem = rk.build_problem(model, x, spec, cost_spec, percentiles)
    return Instance(model, x, spec, cost_spec, percentiles, problem)
