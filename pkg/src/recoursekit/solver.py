"""Exact solver for the discretized minimal-cost recourse problem.

One action value is chosen per actionable feature so that the shifted score
clears the decision threshold (plus an optional robustness margin), at
minimal cost. The search is best-first branch and bound over features with
an admissible lower bound from the piecewise-linear relaxation of the
per-feature (gain, cost) frontiers, so results are certified optima or
certified infeasibility. A separate exhaustive oracle enumerates the full
grid and accepts arbitrary cost functionals.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .actions import ActionGrid, ActionSetSpec, build_action_grid
from .costs import CostSpec, CostTable, build_cost_table
from .errors import CombinationCapError, InputError
from .model import LinearModel, validate_point

# Flip constraint slack, applied in favor of feasibility: an action is
# accepted when score(x + a) >= margin - FLIP_SLACK.
FLIP_SLACK = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NO_ACTION_NEEDED = "no_action_needed"

OBJECTIVES = ("separable_sum", "minimax")

BRUTE_FORCE_CAP = 1_000_000


@dataclass(frozen=True)
class SolveStats:
    """Search effort and proof status for benchmarking."""

    nodes_explored: int = 0
    proved_optimal: bool = False


@dataclass(frozen=True)
class RecourseSolution:
    status: str
    action: np.ndarray | None = None
    cost: float | None = None
    support: frozenset[int] = frozenset()
    stats: SolveStats = field(default_factory=SolveStats)

    def __post_init__(self) -> None:
        if self.action is not None:
            a = np.asarray(self.action, dtype=float).copy()
            a.flags.writeable = False
            object.__setattr__(self, "action", a)
        object.__setattr__(self, "support", frozenset(self.support))


@dataclass(frozen=True)
class RecourseProblem:
    """One solve instance: point, grid, costs, objective, and constraints.

    ``excluded_supports`` bans selections whose changed-feature set equals one
    of the listed sets exactly (subsets and supersets stay allowed).
    ``linked_groups`` lists feature-index sets in which at most one feature
    may change, as produced for one-hot encodings.
    """

    model: LinearModel
    x: np.ndarray
    grid: ActionGrid
    cost_table: CostTable | None = None
    objective: str = "separable_sum"
    excluded_supports: frozenset[frozenset[int]] = frozenset()
    linked_groups: tuple[frozenset[int], ...] = ()
    margin: float = 0.0

    def __post_init__(self) -> None:
        xv = validate_point(self.model, self.x)
        xv = xv.copy()
        xv.flags.writeable = False
        object.__setattr__(self, "x", xv)
        if self.objective not in OBJECTIVES:
            raise InputError(f"unknown objective '{self.objective}'")
        margin = float(self.margin)
        if not (math.isfinite(margin) and margin >= 0.0):
            raise InputError("margin must be finite and nonnegative")
        object.__setattr__(self, "margin", margin)
        if not np.array_equal(self.grid.x, xv):
            raise InputError("action grid was built for a different point")
        actionable = set(self.grid.feature_indices)
        excluded = frozenset(frozenset(s) for s in self.excluded_supports)
        for s in excluded:
            if not s <= actionable:
                raise InputError("excluded supports must contain only actionable feature indices")
        object.__setattr__(self, "excluded_supports", excluded)
        groups = tuple(frozenset(g) for g in self.linked_groups)
        for g in groups:
            if not g <= set(range(self.model.dim)):
                raise InputError("linked groups must contain valid feature indices")
        object.__setattr__(self, "linked_groups", groups)
        if self.cost_table is not None:
            t = self.cost_table
            if t.feature_indices != self.grid.feature_indices:
                raise InputError("cost table features do not match the action grid")
            for c, v in zip(t.costs, self.grid.values):
                if c.shape != v.shape:
                    raise InputError("cost table entries do not match the grid values")
            if t.minimax != (self.objective == "minimax"):
                raise InputError(
                    "cost table interpretation does not match the problem objective"
                )

    def score(self) -> float:
        return self.model.score(self.x)


def build_problem(
    model: LinearModel,
    x: Sequence[float],
    action_spec: ActionSetSpec,
    cost_spec: CostSpec,
    percentiles=None,
    *,
    margin: float = 0.0,
    excluded_supports: Iterable[frozenset[int]] = (),
) -> RecourseProblem:
    """Assemble a solve instance from an action set and a cost choice."""
    grid = build_action_grid(action_spec, x, model)
    table = build_cost_table(cost_spec, grid, percentiles)
    return RecourseProblem(
        model=model,
        x=np.asarray(x, dtype=float),
        grid=grid,
        cost_table=table,
        objective="minimax" if cost_spec.minimax else "separable_sum",
        excluded_supports=frozenset(frozenset(s) for s in excluded_supports),
        linked_groups=action_spec.linked_groups_for(model),
        margin=margin,
    )


# --- search internals -------------------------------------------------------

@dataclass
class _Feat:
    index: int
    actions: np.ndarray
    gains: np.ndarray
    costs: np.ndarray
    group: int = -1


def _prepare(problem: RecourseProblem, *, sign_prune: bool, costs: str = "table") -> list[_Feat]:
    group_of: dict[int, int] = {}
    for gid, members in enumerate(problem.linked_groups):
        for j in members:
            group_of[j] = gid
    feats = []
    for p, j in enumerate(problem.grid.feature_indices):
        a = problem.grid.values[p]
        g = problem.grid.gains[p]
        if costs == "table":
            c = problem.cost_table.costs[p]
        else:
            c = np.zeros_like(a)
        if sign_prune:
            keep = (a == 0.0) | (g > 0.0)
            a, g, c = a[keep], g[keep], c[keep]
        feats.append(_Feat(index=j, actions=a, gains=g, costs=c, group=group_of.get(j, -1)))
    return feats


def _ordered(feats: list[_Feat]) -> list[_Feat]:
    return sorted(feats, key=lambda f: (-float(f.gains.max(initial=0.0)), f.index))


class _BoundTables:
    """Suffix structures for the admissible lower bound and feasibility prune.

    For a fixed feature order, every search node's undecided features form a
    suffix, so the merged gain/cost frontier segments of each suffix are
    precomputed once. The bound at residual gain v is the cheapest fractional
    fill of v from the suffix's segments in increasing cost-per-gain order; it
    never exceeds the cost of any completion.
    """

    def __init__(self, feats: list[_Feat]):
        d = len(feats)
        # best achievable remaining gain per suffix; linked groups contribute
        # at most one member (the relaxation ignores which one the prefix
        # already used, which can only overestimate)
        self.smax = np.zeros(d + 1)
        singles = 0.0
        group_best: dict[int, float] = {}
        for i in range(d - 1, -1, -1):
            mg = float(feats[i].gains.max())
            if feats[i].group < 0:
                singles += mg
            else:
                group_best[feats[i].group] = max(group_best.get(feats[i].group, mg), mg)
            self.smax[i] = singles + sum(group_best.values())

        # Each feature's contribution starts at its own cheapest option (the
        # no-action point when one exists) so that features without a free
        # option still pay their mandatory minimum in the bound.
        bases = [_frontier(f.gains, f.costs) for f in feats]
        self._base_cost = np.zeros(d + 1)
        self._base_gain = np.zeros(d + 1)
        for i in range(d - 1, -1, -1):
            self._base_cost[i] = self._base_cost[i + 1] + bases[i][1]
            self._base_gain[i] = self._base_gain[i + 1] + bases[i][0]
        segments: list[tuple[float, float, float, int]] = []
        for pos, (_, _, segs) in enumerate(bases):
            for dg, dc in segs:
                segments.append((dc / dg, dg, dc, pos))
        segments.sort(key=lambda s: (s[0], s[3]))
        slopes = np.array([s[0] for s in segments])
        dgs = np.array([s[1] for s in segments])
        dcs = np.array([s[2] for s in segments])
        pos = np.array([s[3] for s in segments], dtype=int)
        self._suffix = []
        for i in range(d + 1):
            mask = pos >= i
            self._suffix.append(
                (np.cumsum(dgs[mask]), np.cumsum(dcs[mask]), slopes[mask])
            )

    def bound(self, level: int, needs: np.ndarray) -> np.ndarray:
        """Lower bound on the remaining cost to gain at least ``needs``."""
        cumg, cumc, slopes = self._suffix[level]
        out = np.full(needs.shape, self._base_cost[level])
        residual = needs - self._base_gain[level]
        positive = residual > 0.0
        if not positive.any():
            return out
        nv = residual[positive]
        vals = np.full(nv.shape, np.inf)
        if cumg.size:
            idx = np.searchsorted(cumg, nv, side="left")
            ok = idx < cumg.size
            iok = idx[ok]
            vals[ok] = cumc[iok] - slopes[iok] * (cumg[iok] - nv[ok])
        out[positive] += vals
        return out


def _frontier(
    gains: np.ndarray, costs: np.ndarray
) -> tuple[float, float, list[tuple[float, float]]]:
    """Base point and lower convex frontier of one feature's options.

    The base is the best-gain option among the cheapest ones; the segments
    climb from it toward the maximum gain with nondecreasing cost-per-gain
    slopes. Options left of the base are dominated (less gain, never
    cheaper) and irrelevant to the relaxation.
    """
    c_min = float(costs.min())
    base_g = float(gains[costs == c_min].max())
    mask = gains > base_g
    if not mask.any():
        return base_g, c_min, []
    pts = sorted(zip(gains[mask].tolist(), costs[mask].tolist()))
    dedup: list[tuple[float, float]] = [(base_g, c_min)]
    for g, c in pts:
        if g == dedup[-1][0]:
            continue  # sorted, so the first occurrence has the lowest cost
        dedup.append((g, c))
    hull: list[tuple[float, float]] = []
    for p in dedup:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0) <= 0.0:
                hull.pop()
            else:
                break
        hull.append(p)
    return base_g, c_min, [
        (hull[i + 1][0] - hull[i][0], hull[i + 1][1] - hull[i][1])
        for i in range(len(hull) - 1)
    ]


_Candidate = tuple[float, int, tuple[int, ...], float, tuple[int, ...]]


def _complete_candidate(feats: list[_Feat], choices: tuple[int, ...], cost: float) -> _Candidate:
    changed = [
        (f.index, float(f.actions[k])) for f, k in zip(feats, choices) if f.actions[k] != 0.0
    ]
    support = tuple(sorted(j for j, _ in changed))
    total_abs = float(sum(abs(a) for _, a in changed))
    return (cost, len(support), support, total_abs, choices)


def _branch_and_bound(
    feats: list[_Feat],
    need: float,
    excluded: frozenset[frozenset[int]],
) -> tuple[_Candidate | None, int]:
    """Exact minimum of the separable cost subject to the gain requirement.

    Returns the best candidate under the tie order (cost, support size,
    lexicographic support, total |a|), or None when no valid selection exists.
    """
    d = len(feats)
    if any(f.actions.size == 0 for f in feats):
        return None, 0
    tables = _BoundTables(feats)
    if tables.smax[0] < need - FLIP_SLACK:
        return None, 0

    best: _Candidate | None = None
    seq = 0
    root_bound = float(tables.bound(0, np.array([need - FLIP_SLACK]))[0])
    if math.isinf(root_bound):
        return None, 0
    heap: list[tuple[float, int, int, float, float, int, tuple[int, ...], int]] = [
        (root_bound, seq, 0, 0.0, 0.0, 0, (), 0)
    ]
    nodes = 0

    # One greedy dive seeds the incumbent so the main loop can prune hard.
    dive = _greedy_dive(feats, tables, need, excluded)
    if dive is not None:
        best = dive

    while heap:
        bound, _, level, cost, gain, nchanged, choices, gmask = heapq.heappop(heap)
        if best is not None:
            if bound > best[0]:
                break
            # cost ties can only win on the composite order, which starts
            # with the support size; a tie that must grow past the incumbent
            # size is hopeless
            if bound == best[0] and nchanged + (gain < need - FLIP_SLACK) > best[1]:
                continue
        nodes += 1
        if level == d:
            if frozenset(choices_support(feats, choices)) in excluded:
                continue
            cand = _complete_candidate(feats, choices, cost)
            if best is None or cand[:4] < best[:4]:
                best = cand
            continue

        f = feats[level]
        allowed = (
            (f.actions == 0.0)
            if (f.group >= 0 and (gmask >> f.group) & 1)
            else np.ones(f.actions.shape, dtype=bool)
        )
        child_cost = cost + f.costs
        child_gain = gain + f.gains
        child_changed = nchanged + (f.actions != 0.0)
        feasible = child_gain + tables.smax[level + 1] >= need - FLIP_SLACK
        lb = child_cost + tables.bound(level + 1, (need - child_gain) - FLIP_SLACK)
        keep = allowed & feasible & np.isfinite(lb)
        if best is not None:
            keep &= lb <= best[0]
            ties = lb == best[0]
            hopeless = child_changed + (child_gain < need - FLIP_SLACK) > best[1]
            keep &= ~(ties & hopeless)
        for k in np.flatnonzero(keep):
            seq += 1
            child_mask = gmask
            if f.group >= 0 and f.actions[k] != 0.0:
                child_mask |= 1 << f.group
            heapq.heappush(
                heap,
                (
                    float(lb[k]),
                    seq,
                    level + 1,
                    float(child_cost[k]),
                    float(child_gain[k]),
                    int(child_changed[k]),
                    choices + (int(k),),
                    child_mask,
                ),
            )
    return best, nodes


def choices_support(feats: list[_Feat], choices: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(f.index for f, k in zip(feats, choices) if f.actions[k] != 0.0))


def _greedy_dive(
    feats: list[_Feat],
    tables: _BoundTables,
    need: float,
    excluded: frozenset[frozenset[int]],
) -> _Candidate | None:
    d = len(feats)
    cost, gain, gmask = 0.0, 0.0, 0
    choices: tuple[int, ...] = ()
    for level in range(d):
        f = feats[level]
        allowed = (
            (f.actions == 0.0)
            if (f.group >= 0 and (gmask >> f.group) & 1)
            else np.ones(f.actions.shape, dtype=bool)
        )
        child_cost = cost + f.costs
        child_gain = gain + f.gains
        feasible = child_gain + tables.smax[level + 1] >= need - FLIP_SLACK
        lb = child_cost + tables.bound(level + 1, (need - child_gain) - FLIP_SLACK)
        keep = allowed & feasible & np.isfinite(lb)
        if not keep.any():
            return None
        lb = np.where(keep, lb, np.inf)
        k = int(np.argmin(lb))
        cost, gain = float(child_cost[k]), float(child_gain[k])
        if f.group >= 0 and f.actions[k] != 0.0:
            gmask |= 1 << f.group
        choices = choices + (k,)
    if gain < need - FLIP_SLACK:
        return None
    if frozenset(choices_support(feats, choices)) in excluded:
        return None
    return _complete_candidate(feats, choices, cost)


def _exists_selection(
    feats: list[_Feat],
    need: float,
    excluded: frozenset[frozenset[int]],
    allowed_masks: list[np.ndarray],
    counter: list[int],
) -> bool:
    """Depth-first feasibility probe over mask-restricted options.

    Branches on support membership (change / keep) per feature rather than on
    individual options: a changed feature always takes its best allowed
    nonzero gain, which is optimal for pure feasibility, so the tree is at
    most 2^d regardless of grid sizes.
    """
    d = len(feats)
    change_gain: list[float | None] = []
    for f, mask in zip(feats, allowed_masks):
        nz = mask & (f.actions != 0.0)
        change_gain.append(float(f.gains[nz].max()) if nz.any() else None)
    smax = np.zeros(d + 1)
    for i in range(d - 1, -1, -1):
        best = change_gain[i]
        smax[i] = smax[i + 1] + max(best if best is not None else 0.0, 0.0)
    if smax[0] < need - FLIP_SLACK:
        return False

    def walk(level: int, gain: float, gmask: int, changed: tuple[int, ...]) -> bool:
        counter[0] += 1
        if gain + smax[level] < need - FLIP_SLACK:
            return False
        if level == d:
            return gain >= need - FLIP_SLACK and frozenset(changed) not in excluded
        f = feats[level]
        blocked = f.group >= 0 and (gmask >> f.group) & 1
        best = change_gain[level]
        if best is not None and not blocked:
            mask = gmask | (1 << f.group) if f.group >= 0 else gmask
            if walk(level + 1, gain + best, mask, changed + (f.index,)):
                return True
        return walk(level + 1, gain, gmask, changed)

    return walk(0, 0.0, 0, ())


# --- public operations -------------------------------------------------------

def _no_action_needed(problem: RecourseProblem, s0: float) -> bool:
    """The zero action already satisfies the (margin-shifted) demand.

    Requires a genuinely positive prediction so the status invariant holds:
    a point with 0 <= score < margin is positive but still gets solved for a
    margin-reaching action.
    """
    return (
        s0 >= 0.0
        and s0 >= problem.margin - FLIP_SLACK
        and not problem.excluded_supports
    )


def solve(problem: RecourseProblem) -> RecourseSolution:
    """Certified optimum of the recourse problem, or certified infeasibility.

    Deterministic for fixed input; among equal-cost optima, prefers the
    smaller support, then the lexicographically smallest support, then the
    smallest total |a|.
    """
    s0 = problem.score()
    if _no_action_needed(problem, s0):
        return RecourseSolution(status=NO_ACTION_NEEDED, stats=SolveStats(0, True))
    if problem.cost_table is None:
        raise InputError("problem has no cost table; build one or use the exhaustive oracle")

    need = problem.margin - s0
    if problem.objective == "separable_sum":
        feats = _ordered(_prepare(problem, sign_prune=not problem.excluded_supports))
        best, nodes = _branch_and_bound(feats, need, problem.excluded_supports)
        if best is None:
            return RecourseSolution(status=INFEASIBLE, stats=SolveStats(nodes, True))
        return _solution_from_candidate(problem, feats, best, best[0], nodes)
    return _solve_minimax(problem, s0)


def _solution_from_candidate(
    problem: RecourseProblem,
    feats: list[_Feat],
    cand: _Candidate,
    cost: float,
    nodes: int,
) -> RecourseSolution:
    action = np.zeros(problem.model.dim)
    for f, k in zip(feats, cand[4]):
        action[f.index] = f.actions[k]
    return RecourseSolution(
        status=OPTIMAL,
        action=action,
        cost=float(cost),
        support=frozenset(cand[2]),
        stats=SolveStats(nodes, True),
    )


def _region_max_gain(
    feats: list[_Feat], masks: list[np.ndarray], forced: frozenset[int]
) -> float | None:
    """Best achievable total gain under option masks and forced memberships.

    Forced features contribute their best allowed nonzero gain (None when
    they have none, or when two share a linked group); everyone else
    contributes at most one change per linked group.
    """
    total = 0.0
    groups_with_forced: set[int] = set()
    for f, mask in zip(feats, masks):
        if f.index not in forced:
            continue
        nz = mask & (f.actions != 0.0)
        if not nz.any():
            return None
        total += float(f.gains[nz].max())
        if f.group >= 0:
            if f.group in groups_with_forced:
                return None
            groups_with_forced.add(f.group)
    group_best: dict[int, float] = {}
    for f, mask in zip(feats, masks):
        if f.index in forced:
            continue
        best = max(float(f.gains[mask].max(initial=0.0)), 0.0)
        if f.group < 0:
            total += best
        elif f.group not in groups_with_forced:
            group_best[f.group] = max(group_best.get(f.group, 0.0), best)
    return total + sum(group_best.values())


def _minimax_over_feats(
    problem: RecourseProblem,
    feats: list[_Feat],
    need: float,
    forced: frozenset[int],
) -> RecourseSolution:
    """Minimax optimum over membership-restricted options, no exclusions."""
    candidates = np.unique(np.concatenate([f.costs for f in feats] + [np.zeros(1)]))
    probes = [0]

    def feasible(t: float) -> bool:
        probes[0] += 1
        masks = [f.costs <= t for f in feats]
        total = _region_max_gain(feats, masks, forced)
        return total is not None and total >= need - FLIP_SLACK

    if not feasible(float(candidates[-1])):
        return RecourseSolution(status=INFEASIBLE, stats=SolveStats(probes[0], True))
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(float(candidates[mid])):
            hi = mid
        else:
            lo = mid + 1
    t_star = float(candidates[lo])

    restricted = []
    for f in feats:
        keep = f.costs <= t_star
        restricted.append(_Feat(f.index, f.actions[keep], f.gains[keep], f.costs[keep], f.group))
    best, used, nodes = _minimax_selection(restricted, need, forced)
    if best is None:
        raise RuntimeError("threshold search and selection search disagree")
    return _solution_from_candidate(problem, used, best, t_star, probes[0] + nodes)


def _solve_minimax(problem: RecourseProblem, s0: float) -> RecourseSolution:
    need = problem.margin - s0
    feats = _ordered(_prepare(problem, sign_prune=not problem.excluded_supports))
    if not problem.excluded_supports:
        return _minimax_over_feats(problem, feats, need, frozenset())

    candidates = np.unique(np.concatenate([f.costs for f in feats] + [np.zeros(1)]))
    probes = [0]

    def feasible(t: float) -> bool:
        masks = [f.costs <= t for f in feats]
        return _exists_selection(feats, need, problem.excluded_supports, masks, probes)

    if not feasible(float(candidates[-1])):
        return RecourseSolution(status=INFEASIBLE, stats=SolveStats(probes[0], True))
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(float(candidates[mid])):
            hi = mid
        else:
            lo = mid + 1
    t_star = float(candidates[lo])

    # Among the threshold-optimal selections, pick the smallest support
    # (then the usual tie order) with an indicator-cost exact search that
    # honors the exact-set exclusions.
    used = []
    for f in feats:
        keep = f.costs <= t_star
        used.append(
            _Feat(f.index, f.actions[keep], f.gains[keep],
                  (f.actions[keep] != 0.0).astype(float), f.group)
        )
    best, nodes = _branch_and_bound(used, need, problem.excluded_supports)
    if best is None:
        raise RuntimeError("threshold search and selection search disagree")
    return _solution_from_candidate(problem, used, best, t_star, probes[0] + nodes)


def _minimax_selection(
    feats: list[_Feat], need: float, forced: frozenset[int] = frozenset()
) -> tuple[_Candidate | None, list[_Feat], int]:
    """Tie-ordered selection among threshold-optimal minimax candidates.

    Finds the smallest number of changed features able to reach the gain
    requirement (greedy over best per-feature gains is exact, since any k
    changes gain at most the k largest bests), then the lexicographically
    smallest such support via an exact extension oracle, then the smallest
    total |a| within that support. ``forced`` features (by model index) must
    be part of every support; their best gains count even when negative.
    """
    best_gain: dict[int, float] = {}
    forced_pos: list[int] = []
    for pos, f in enumerate(feats):
        nz = f.actions != 0.0
        g = float(f.gains[nz].max()) if nz.any() else -math.inf
        if f.index in forced:
            if math.isinf(g):
                return None, [], 0
            forced_pos.append(pos)
            best_gain[pos] = g
        elif g > 0.0:
            best_gain[pos] = g
    groups_used = [feats[p].group for p in forced_pos if feats[p].group >= 0]
    if len(groups_used) != len(set(groups_used)):
        return None, [], 0

    def extendable(required: list[int], k: int) -> bool:
        base = sum(best_gain[p] for p in required)
        blocked = {feats[p].group for p in required if feats[p].group >= 0}
        per_group: dict[int, float] = {}
        singles: list[float] = []
        for p, g in best_gain.items():
            if p in required or g <= 0.0:
                continue
            grp = feats[p].group
            if grp < 0:
                singles.append(g)
            elif grp not in blocked:
                per_group[grp] = max(per_group.get(grp, 0.0), g)
        pool = sorted(singles + list(per_group.values()), reverse=True)
        slots = k - len(required)
        if slots < 0 or slots > len(pool):
            return False
        return base + sum(pool[:slots]) >= need - FLIP_SLACK

    k_star = None
    for k in range(len(forced_pos), len(best_gain) + 1):
        if extendable(forced_pos, k):
            k_star = k
            break
    if k_star is None:
        return None, [], 0

    by_index = sorted(
        (p for p in best_gain if p not in forced_pos), key=lambda p: feats[p].index
    )
    chosen: list[int] = list(forced_pos)
    for p in by_index:
        if len(chosen) == k_star:
            break
        grp = feats[p].group
        if grp >= 0 and any(feats[q].group == grp for q in chosen):
            continue
        if extendable(chosen + [p], k_star):
            chosen.append(p)
    if len(chosen) != k_star:
        return None, [], 0

    support_feats = _ordered(
        [
            _Feat(f.index, f.actions, f.gains, np.abs(f.actions), f.group)
            for pos, f in enumerate(feats)
            if pos in set(chosen)
        ]
    )
    best, nodes = _branch_and_bound(support_feats, need, frozenset())
    return best, support_feats, nodes


def solve_region(
    problem: RecourseProblem,
    must_change: frozenset[int] = frozenset(),
    must_not_change: frozenset[int] = frozenset(),
) -> RecourseSolution:
    """Certified optimum among selections with constrained support membership.

    Features in ``must_change`` lose their no-action entry; features in
    ``must_not_change`` keep only it. Unlike exact-set support exclusions,
    these constraints restrict the option grids directly, so the search bound
    stays tight; flipset enumeration partitions the support space into
    disjoint regions of this form. Exact-set exclusions on the problem are
    ignored here (the caller partitions around them).
    """
    if problem.cost_table is None:
        raise InputError("problem has no cost table; build one or use the exhaustive oracle")
    actionable = set(problem.grid.feature_indices)
    if not (must_change <= actionable and must_not_change <= actionable):
        raise InputError("membership constraints must name actionable feature indices")
    if must_change & must_not_change:
        raise InputError("a feature cannot be both forced to change and frozen")

    group_of: dict[int, int] = {}
    for gid, members in enumerate(problem.linked_groups):
        for j in members:
            group_of[j] = gid
    forced_groups = [group_of[j] for j in must_change if j in group_of]
    if len(forced_groups) != len(set(forced_groups)):
        # two features of one linked group can never change together
        return RecourseSolution(status=INFEASIBLE, stats=SolveStats(0, True))
    feats = []
    for p, j in enumerate(problem.grid.feature_indices):
        a = problem.grid.values[p]
        g = problem.grid.gains[p]
        c = problem.cost_table.costs[p]
        if j in must_change:
            keep = a != 0.0
        elif j in must_not_change:
            keep = a == 0.0
        else:
            keep = (a == 0.0) | (g > 0.0)
        feats.append(_Feat(j, a[keep], g[keep], c[keep], group_of.get(j, -1)))
    feats = _ordered(feats)
    need = problem.margin - problem.score()

    if problem.objective == "minimax":
        return _minimax_over_feats(problem, feats, need, forced=frozenset(must_change))
    best, nodes = _branch_and_bound(feats, need, frozenset())
    if best is None:
        return RecourseSolution(status=INFEASIBLE, stats=SolveStats(nodes, True))
    return _solution_from_candidate(problem, feats, best, best[0], nodes)


def brute_force_solve(
    problem: RecourseProblem,
    cost_functional: Callable[[np.ndarray], float] | None = None,
    *,
    max_combinations: int = BRUTE_FORCE_CAP,
) -> RecourseSolution:
    """Exhaustive oracle over every grid combination.

    Honors exclusions and linked groups; optimizes the problem's cost table
    objective, or an arbitrary functional of the full action vector when one
    is given (a ``batch`` method on the functional enables vectorized
    evaluation). Refuses instances whose combination count exceeds the cap.
    """
    s0 = problem.score()
    if _no_action_needed(problem, s0):
        return RecourseSolution(status=NO_ACTION_NEEDED, stats=SolveStats(0, True))
    if cost_functional is None and problem.cost_table is None:
        raise InputError("problem has no cost table and no functional was given")

    feats = _prepare(
        problem, sign_prune=False, costs="table" if cost_functional is None else "zero"
    )
    counts = [f.actions.size for f in feats]
    total = math.prod(counts) if counts else 1
    if total > max_combinations:
        raise CombinationCapError(
            f"{total} grid combinations exceed the cap of {max_combinations}; "
            "shrink the instance (fewer actionable features or a coarser grid) "
            "or raise max_combinations"
        )

    strides = [1] * len(counts)
    for p in range(len(counts) - 2, -1, -1):
        strides[p] = strides[p + 1] * counts[p + 1]
    groups: dict[int, list[int]] = {}
    for p, f in enumerate(feats):
        if f.group >= 0:
            groups.setdefault(f.group, []).append(p)
    excluded_patterns = []
    for s in problem.excluded_supports:
        pattern = np.array([f.index in s for f in feats])
        excluded_patterns.append(pattern)

    best: tuple[float, int, tuple[int, ...], float, np.ndarray] | None = None
    chunk = 1 << 17
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        k_per = [((idx // strides[p]) % counts[p]) for p in range(len(counts))]
        gains = np.full(idx.shape, s0)
        actions = np.zeros((idx.size, len(feats)))
        for p, f in enumerate(feats):
            gains = gains + f.gains[k_per[p]]
            actions[:, p] = f.actions[k_per[p]]
        active = actions != 0.0
        ok = gains >= problem.margin - FLIP_SLACK
        for members in groups.values():
            ok &= active[:, members].sum(axis=1) <= 1
        for pattern in excluded_patterns:
            ok &= ~np.all(active == pattern, axis=1)
        if not ok.any():
            continue

        if cost_functional is None:
            stack = [f.costs[k_per[p]] for p, f in enumerate(feats)]
            if problem.objective == "minimax":
                costs = np.maximum.reduce(stack) if stack else np.zeros(idx.shape)
            else:
                costs = np.sum(stack, axis=0) if stack else np.zeros(idx.shape)
        else:
            full = np.zeros((idx.size, problem.model.dim))
            for p, f in enumerate(feats):
                full[:, f.index] = actions[:, p]
            if hasattr(cost_functional, "batch"):
                costs = np.asarray(cost_functional.batch(full), dtype=float)
            else:
                costs = np.array([float(cost_functional(row)) for row in full])

        masked = np.where(ok, costs, np.inf)
        chunk_min = float(masked.min())
        if best is not None and chunk_min > best[0]:
            continue
        for r in np.flatnonzero(masked == chunk_min):
            support = tuple(sorted(feats[p].index for p in np.flatnonzero(active[r])))
            cand = (
                chunk_min,
                len(support),
                support,
                float(np.abs(actions[r]).sum()),
                actions[r],
            )
            if best is None or cand[:4] < best[:4]:
                best = cand

    if best is None:
        return RecourseSolution(status=INFEASIBLE, stats=SolveStats(total, True))
    action = np.zeros(problem.model.dim)
    for p, f in enumerate(feats):
        action[f.index] = best[4][p]
    return RecourseSolution(
        status=OPTIMAL,
        action=action,
        cost=best[0],
        support=frozenset(best[2]),
        stats=SolveStats(total, True),
    )


def endpoint_feasibility(problem: RecourseProblem) -> bool:
    """True when the best-case grid action can clear the margin.

    With endpoint-containing grids, no exclusions, and no binding linked
    groups, this matches the solver's feasibility status exactly; otherwise
    it remains a valid optimistic screen.
    """
    total = problem.score() + problem.grid.max_gain_total()
    return bool(total >= problem.margin - FLIP_SLACK)


def closed_form_cost(
    model: LinearModel,
    x: Sequence[float],
    c_x: float = 1.0,
    actionable: ActionSetSpec | Iterable[str] | None = None,
) -> float:
    """Unconstrained-continuous minimal scaled-norm cost over actionable axes.

    Evaluates c_x * |w_A . x_A| / ||w_A||_2^2 where A is the actionable
    feature set (all features when ``actionable`` is None).
    """
    xv = validate_point(model, x)
    w = model.coefficient_vector()
    ids = _actionable_indices(model, actionable)
    w_a = w[ids]
    norm_sq = float(w_a @ w_a)
    if norm_sq == 0.0:
        raise InputError("all actionable coefficients are zero")
    u = float(w_a @ xv[ids]) / norm_sq
    return float(c_x) * abs(u)


def _actionable_indices(
    model: LinearModel, actionable: ActionSetSpec | Iterable[str] | None
) -> np.ndarray:
    if actionable is None:
        return np.arange(model.dim)
    if isinstance(actionable, ActionSetSpec):
        actionable.validate_for(model)
        names = {f.name for f in actionable if f.actionable}
    else:
        names = set(actionable)
    ids = [j for j, n in enumerate(model.feature_names) if n in names]
    if not ids:
        raise InputError("no actionable features among the model's features")
    return np.asarray(ids, dtype=int)
