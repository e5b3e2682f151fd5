"""Per-grid error budgets and the iterative user-suppression routine.

A grid's error budget combines the worst-case bias of releasing clipped
statistics with the Laplace noise magnitudes the retained counts force:

    E_g = bias_mean + bias_var + 2*d_mean_clip/eps + 2*d_var_clip/eps

using E|Laplace(b)| = b on each of the two half-budget coordinates. The
suppression routine removes whole users from grids, never increasing the
worst budget E = max_g E_g, to shrink the number of grids any single user
still touches (the factor multiplying per-grid epsilon under composition).

clip_user processing order: at each stage, freeze the set of users
touching the most grids; walk them in token order; for each, suppress them
from the grid where the resulting budget is smallest (ties to the smallest
grid token), skipping grids where they are the last retained user; halt
the whole routine the first time a user's best option exceeds E or a user
has no evaluable option.

pseudo_user_optimize then re-clips each grid's retained counts to the best
uniform cap m (suppressed users stay suppressed), which can only lower the
budget since the cap equal to the current largest count changes nothing.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .dataset import Dataset, OccupancyArray
from .errors import (
    InvalidParams,
    InvalidPlan,
    OccupancyMismatch,
    ZeroRetained,
)
from .mechanisms import MechanismOutput, MechanismParams, clip_release
from .rng import RngStream
from .sensitivity import variance_peak_value
from .worst_case_bias import _check_pair, bias_branch_value


@dataclass(frozen=True)
class ErrorBudget:
    """Additive worst-case error of one grid's clipped release."""

    grid: str
    bias_mean: float
    bias_var: float
    noise_mean: float
    noise_var: float
    total: float


@dataclass(frozen=True)
class Suppression:
    """One committed removal: user dropped from grid at the given stage."""

    stage: int
    user: str
    grid: str
    error: float


@dataclass(frozen=True)
class ClipPlan:
    """Retained sample counts per grid and user; 0 means fully suppressed."""

    retained: dict[str, dict[str, int]]

    @staticmethod
    def full(occupancy: OccupancyArray) -> "ClipPlan":
        return ClipPlan({g: dict(occupancy.row(g)) for g in occupancy.grids()})

    def grids(self) -> list[str]:
        return sorted(self.retained)

    def row(self, grid: str) -> dict[str, int]:
        if grid not in self.retained:
            raise OccupancyMismatch(f"plan has no grid {grid}")
        return dict(self.retained[grid])

    def suppressed_pairs(self) -> list[tuple[str, str]]:
        return [
            (g, u)
            for g in self.grids()
            for u, kept in sorted(self.retained[g].items())
            if kept == 0
        ]


@dataclass(frozen=True)
class ClipUserResult:
    plan: ClipPlan
    k_factor: int
    error_cap: float
    initial_errors: dict[str, ErrorBudget]
    per_grid_errors: dict[str, ErrorBudget]
    trace: tuple[Suppression, ...]
    stage_max_errors: tuple[float, ...]


@dataclass(frozen=True)
class PseudoUserResult:
    per_grid_m: dict[str, int]
    per_grid_error: dict[str, ErrorBudget]
    new_error: float


def budget_from_aggregates(
    grid: str,
    sum_m: int,
    sum_gamma: int,
    gamma_star: int,
    bound_u: float,
    epsilon: float,
) -> ErrorBudget:
    """Grid budget from totals alone.

    Valid whenever each user's retained count is either their full count or
    a uniform cap, so the clipped sensitivities depend only on sum_gamma
    and the largest retained count gamma_star.
    """
    bias_mean = bound_u * (sum_m - sum_gamma) / sum_m
    _, bias_var = bias_branch_value(sum_m, sum_gamma, bound_u)
    noise_mean = 2 * (bound_u * gamma_star / sum_gamma) / epsilon
    _, var_sens = variance_peak_value(sum_gamma, gamma_star, bound_u)
    noise_var = 2 * var_sens / epsilon
    return ErrorBudget(
        grid=grid,
        bias_mean=bias_mean,
        bias_var=bias_var,
        noise_mean=noise_mean,
        noise_var=noise_var,
        total=bias_mean + bias_var + noise_mean + noise_var,
    )


def grid_error(
    m_list, gamma_list, bound_u: float, epsilon: float, grid: str = "g"
) -> ErrorBudget:
    """Budget of a grid with counts m_list and retained counts gamma_list."""
    counts, gammas = _check_pair(m_list, gamma_list)
    if not bound_u > 0:
        raise InvalidParams(f"value bound must be positive, got {bound_u}")
    if not epsilon > 0:
        raise InvalidParams(f"epsilon must be positive, got {epsilon}")
    return budget_from_aggregates(
        grid, sum(counts), sum(gammas), max(gammas), bound_u, epsilon
    )


def privacy_loss(occupancy: OccupancyArray, eps_per_grid) -> float:
    """Total privacy cost under parallel-within / sequential-across grids.

    eps_per_grid is a single float (uniform budget) or a mapping from grid
    token to budget covering every grid of the occupancy. The cost is the
    worst per-user sum over the grids that user touches.
    """
    if isinstance(eps_per_grid, (int, float)):
        if eps_per_grid < 0:
            raise InvalidParams(f"epsilon must be >= 0, got {eps_per_grid}")
        return occupancy.max_grids_per_user() * float(eps_per_grid)
    missing = [g for g in occupancy.grids() if g not in eps_per_grid]
    if missing:
        raise OccupancyMismatch(f"no epsilon given for grids {missing}")
    if any(eps_per_grid[g] < 0 for g in occupancy.grids()):
        raise InvalidParams("per-grid epsilon must be >= 0")
    return max(
        sum(float(eps_per_grid[g]) for g in occupancy.grids_of(u))
        for u in occupancy.users()
    )


class _GridState:
    """Mutable per-grid aggregates with a lazy max-heap over retained counts."""

    __slots__ = ("counts", "sum_m", "sum_gamma", "suppressed", "heap")

    def __init__(self, counts: dict[str, int]):
        self.counts = counts
        self.sum_m = sum(counts.values())
        self.sum_gamma = self.sum_m
        self.suppressed: set[str] = set()
        self.heap = [(-c, u) for u, c in counts.items()]
        heapq.heapify(self.heap)

    def retained_users(self) -> int:
        return len(self.counts) - len(self.suppressed)

    def _settle(self) -> None:
        while self.heap and self.heap[0][1] in self.suppressed:
            heapq.heappop(self.heap)

    def peak(self) -> int:
        self._settle()
        return -self.heap[0][0] if self.heap else 0

    def peak_excluding(self, user: str) -> int:
        self._settle()
        if not self.heap or self.heap[0][1] != user:
            return -self.heap[0][0] if self.heap else 0
        top = heapq.heappop(self.heap)
        self._settle()
        second = -self.heap[0][0] if self.heap else 0
        heapq.heappush(self.heap, top)
        return second


def clip_user(
    occupancy: OccupancyArray,
    bound_u: float,
    epsilon: float,
    protect_min_error_grid: bool = False,
) -> ClipUserResult:
    """Suppress users from grids without raising the worst grid budget.

    Returns the retention plan, the resulting composition factor
    k_factor = max over users of grids still occupied, the frozen cap E,
    budgets before and after, the suppression trace, and the max budget
    recorded after every stage (index 0 is the initial state).

    With protect_min_error_grid the grid whose initial budget is smallest
    (ties to the smallest token) is never chosen as a suppression target.
    """
    if not bound_u > 0:
        raise InvalidParams(f"value bound must be positive, got {bound_u}")
    if not epsilon > 0:
        raise InvalidParams(f"epsilon must be positive, got {epsilon}")
    grids = occupancy.grids()
    state = {g: _GridState(occupancy.row(g)) for g in grids}

    def current_budget(g: str) -> ErrorBudget:
        st = state[g]
        return budget_from_aggregates(
            g, st.sum_m, st.sum_gamma, st.peak(), bound_u, epsilon
        )

    initial = {g: current_budget(g) for g in grids}
    error_cap = max(b.total for b in initial.values())
    protected: str | None = None
    if protect_min_error_grid:
        protected = min(grids, key=lambda g: (initial[g].total, g))

    active_grids = {u: set(occupancy.grids_of(u)) for u in occupancy.users()}
    trace: list[Suppression] = []
    stage_max = [error_cap]
    stage = 1
    halted = False
    while not halted:
        gmax = max(len(gs) for gs in active_grids.values())
        if gmax == 0:
            break
        frozen = sorted(u for u, gs in active_grids.items() if len(gs) == gmax)
        for user in frozen:
            best: tuple[float, str, ErrorBudget] | None = None
            for g in sorted(active_grids[user]):
                if g == protected:
                    continue
                st = state[g]
                if st.retained_users() <= 1:
                    continue
                cand = budget_from_aggregates(
                    g,
                    st.sum_m,
                    st.sum_gamma - st.counts[user],
                    st.peak_excluding(user),
                    bound_u,
                    epsilon,
                )
                if best is None or (cand.total, g) < (best[0], best[1]):
                    best = (cand.total, g, cand)
            if best is None or best[0] > error_cap:
                halted = True
                break
            _, g, budget = best
            st = state[g]
            st.suppressed.add(user)
            st.sum_gamma -= st.counts[user]
            active_grids[user].discard(g)
            trace.append(Suppression(stage, user, g, budget.total))
        stage_max.append(max(current_budget(g).total for g in grids))
        stage += 1

    final = {g: current_budget(g) for g in grids}
    plan = ClipPlan(
        {
            g: {
                u: (0 if u in state[g].suppressed else c)
                for u, c in state[g].counts.items()
            }
            for g in grids
        }
    )
    return ClipUserResult(
        plan=plan,
        k_factor=max(len(gs) for gs in active_grids.values()),
        error_cap=error_cap,
        initial_errors=initial,
        per_grid_errors=final,
        trace=tuple(trace),
        stage_max_errors=tuple(stage_max),
    )


def _plan_gammas(occupancy: OccupancyArray, plan: ClipPlan, grid: str) -> list[int]:
    counts = occupancy.row(grid)
    row = plan.row(grid)
    if set(row) != set(counts):
        raise OccupancyMismatch(
            f"plan for grid {grid} does not cover its users exactly"
        )
    gammas = []
    for u in sorted(counts):
        g = int(row[u])
        if not 0 <= g <= counts[u]:
            raise InvalidPlan(
                f"retained count for user {u} in grid {grid} must be in "
                f"[0, {counts[u]}], got {g}"
            )
        gammas.append(g)
    return gammas


def pseudo_user_optimize(
    occupancy: OccupancyArray,
    plan: ClipPlan,
    bound_u: float,
    epsilon: float,
) -> PseudoUserResult:
    """Cap each grid's retained counts at the budget-minimizing integer.

    For each grid, scan caps m from the smallest to the largest positive
    retained count; capping keeps sum(min(gamma_l, m)) samples with peak m.
    Suppressed users stay at zero. Ties take the smallest cap. The cap
    equal to the largest retained count reproduces the incoming budget, so
    the result never exceeds it.
    """
    if not bound_u > 0:
        raise InvalidParams(f"value bound must be positive, got {bound_u}")
    if not epsilon > 0:
        raise InvalidParams(f"epsilon must be positive, got {epsilon}")
    if sorted(plan.grids()) != occupancy.grids():
        raise OccupancyMismatch("plan grids do not match the occupancy grids")
    per_grid_m: dict[str, int] = {}
    per_grid_error: dict[str, ErrorBudget] = {}
    for g in occupancy.grids():
        gammas = _plan_gammas(occupancy, plan, g)
        positives = sorted(x for x in gammas if x > 0)
        if not positives:
            raise ZeroRetained(f"plan suppresses every user of grid {g}")
        sum_m = occupancy.total(g)
        best_m = positives[0]
        best: ErrorBudget | None = None
        idx = 0
        small_sum = 0
        for m in range(positives[0], positives[-1] + 1):
            while idx < len(positives) and positives[idx] < m:
                small_sum += positives[idx]
                idx += 1
            sum_capped = small_sum + m * (len(positives) - idx)
            cand = budget_from_aggregates(g, sum_m, sum_capped, m, bound_u, epsilon)
            if best is None or cand.total < best.total:
                best, best_m = cand, m
        per_grid_m[g] = best_m
        per_grid_error[g] = best
    return PseudoUserResult(
        per_grid_m=per_grid_m,
        per_grid_error=per_grid_error,
        new_error=max(b.total for b in per_grid_error.values()),
    )


def post_release(
    dataset: Dataset,
    plan: ClipPlan,
    epsilon: float,
    rng: RngStream,
) -> dict[str, MechanismOutput]:
    """Apply the plan to the actual samples and release every grid.

    Each grid gets its own child stream split off by token, so draws for
    one grid do not depend on how many other grids exist.
    """
    occupancy = dataset.occupancy()
    if sorted(plan.grids()) != occupancy.grids():
        raise OccupancyMismatch("plan grids do not match the dataset grids")
    params = MechanismParams(bound_u=dataset.bound_u, epsilon=epsilon)
    out: dict[str, MechanismOutput] = {}
    for g in occupancy.grids():
        _plan_gammas(occupancy, plan, g)
        out[g] = clip_release(
            dataset, g, plan.row(g), params, rng.split(f"grid:{g}")
        )
    return out
