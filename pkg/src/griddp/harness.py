"""Monte Carlo evaluation loops and scaling-law verification.

Every loop derives all randomness from a single root seed through labeled
stream splits, so results are reproducible regardless of execution order.
The thread pool (DP_COMPOSER_THREADS, or ExperimentConfig.threads) only
parallelizes independent trials; ordered executor mapping keeps outputs
byte-identical to the sequential run.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .composition import clip_user, pseudo_user_optimize
from .dataset import Dataset, grid_stats
from .errors import InvalidParams
from .grouping import (
    STRATEGY_BEST,
    array_count_k,
    best_fit_count,
    median_mub,
    optimized_mub,
)
from .mechanisms import (
    QUANTILE_FIXED,
    MechanismParams,
    concentration_tau,
    levy_planning_delta,
    release,
)
from .rng import RngStream
from .sensitivity import mean_sensitivity
from .synth import SynthParams, generate_occupancy

THREADS_ENV = "DP_COMPOSER_THREADS"


@dataclass(frozen=True)
class CurvePoint:
    epsilon: float
    value: float
    label: str


@dataclass(frozen=True)
class ExperimentConfig:
    epsilons: tuple[float, ...]
    seed: int
    trials: int = 10
    mechanism: str = "baseline"
    mae_draws: int = 10_000
    protect_min_error_grid: bool = True
    threads: int | None = None

    def __post_init__(self) -> None:
        if not self.epsilons:
            raise InvalidParams("need at least one epsilon")
        if any(not e > 0 for e in self.epsilons):
            raise InvalidParams(f"epsilons must be positive, got {self.epsilons}")
        if self.trials < 1:
            raise InvalidParams(f"trials must be >= 1, got {self.trials}")
        if self.mae_draws < 1:
            raise InvalidParams(f"mae_draws must be >= 1, got {self.mae_draws}")
        if self.threads is not None and self.threads < 1:
            raise InvalidParams(f"threads must be >= 1, got {self.threads}")


def thread_count(config: ExperimentConfig) -> int:
    if config.threads is not None:
        return config.threads
    env = os.environ.get(THREADS_ENV)
    if env is None or not env.strip():
        return 1
    try:
        n = int(env)
    except ValueError:
        raise InvalidParams(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return max(1, n)


def _map(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs)


def _trial_occupancies(params: SynthParams, config: ExperimentConfig, threads: int):
    root = RngStream(config.seed)
    return _map(
        lambda i: generate_occupancy(params, root.split(f"trial:{i}")),
        range(config.trials),
        threads,
    )


def monte_carlo_privacy(
    params: SynthParams, config: ExperimentConfig
) -> list[CurvePoint]:
    """Average privacy cost with and without suppression.

    For each epsilon: "suppressed" is epsilon times the mean post-suppression
    composition factor over the trials, "naive" is epsilon times the mean
    worst per-user grid count of the raw draws.
    """
    threads = thread_count(config)
    occs = _trial_occupancies(params, config, threads)
    naive = _mean(occ.max_grids_per_user() for occ in occs)
    points: list[CurvePoint] = []
    for eps in config.epsilons:
        ks = _map(
            lambda occ: clip_user(
                occ, params.bound_u, eps, config.protect_min_error_grid
            ).k_factor,
            occs,
            threads,
        )
        points.append(CurvePoint(eps, _mean(ks) * eps, "suppressed"))
        points.append(CurvePoint(eps, naive * eps, "naive"))
    return points


def monte_carlo_error(
    params: SynthParams, config: ExperimentConfig
) -> list[CurvePoint]:
    """Average worst grid budget before suppression and after the cap pass."""
    threads = thread_count(config)
    occs = _trial_occupancies(params, config, threads)
    points: list[CurvePoint] = []
    for eps in config.epsilons:

        def one(occ):
            res = clip_user(occ, params.bound_u, eps, config.protect_min_error_grid)
            opt = pseudo_user_optimize(occ, res.plan, params.bound_u, eps)
            return res.error_cap, opt.new_error

        pairs = _map(one, occs, threads)
        points.append(CurvePoint(eps, _mean(p[0] for p in pairs), "initial"))
        points.append(CurvePoint(eps, _mean(p[1] for p in pairs), "optimized"))
    return points


def mae_eval(
    dataset: Dataset,
    grid: str,
    config: ExperimentConfig,
    gamma: float = 0.2,
    strategy: str = STRATEGY_BEST,
    capacity: int | None = None,
    quantile_mode: str = QUANTILE_FIXED,
) -> list[CurvePoint]:
    """Mean absolute error of one grid's released mean across epsilons.

    The baseline is analytic: a full-budget Laplace release of the exact
    mean has MAE equal to its noise scale, sensitivity over epsilon. Every
    other mechanism is simulated with config.mae_draws independent releases.
    """
    true_mean = grid_stats(dataset, grid).mean
    counts = dataset.occupancy().counts_in(grid)
    threads = thread_count(config)
    root = RngStream(config.seed)
    points: list[CurvePoint] = []
    for ei, eps in enumerate(config.epsilons):
        if config.mechanism == "baseline":
            value = mean_sensitivity(counts, dataset.bound_u).value / eps
        else:
            params = MechanismParams(
                bound_u=dataset.bound_u,
                epsilon=eps,
                gamma=gamma,
                strategy=strategy,
                capacity=capacity,
                quantile_mode=quantile_mode,
            )

            def one(i):
                out = release(
                    dataset, grid, config.mechanism, params, root.split(f"mae:{ei}:{i}")
                )
                return abs(out.noisy_mean - true_mean)

            value = _mean(_map(one, range(config.mae_draws), threads))
        points.append(CurvePoint(eps, value, config.mechanism))
    return points


@dataclass(frozen=True)
class ScalingLawCheck:
    law: str
    mode: str
    lam: int
    passed: bool
    detail: str


def _eq_check(law: str, mode: str, lam: int, lhs, rhs) -> ScalingLawCheck:
    return ScalingLawCheck(law, mode, lam, lhs == rhs, f"scaled={lhs} expected={rhs}")


def check_scaling_laws(
    m_list,
    lambdas,
    bound_u: float = 1.0,
    gamma: float = 0.2,
) -> list[ScalingLawCheck]:
    """Test how grouping quantities respond to dataset growth.

    sample mode multiplies every count by lambda: capacities scale by
    lambda, array counts and the mean/array sensitivities are invariant,
    and the planning sensitivity of the projection mechanism shrinks by
    sqrt(lambda) while its concentration bound stays below the value range.
    user mode duplicates every user lambda times: capacities are invariant,
    but the array counts need not scale by lambda; only the floor bounds
    lambda*K <= K' <= lambda*K + lambda - 1 hold, so the equality laws are
    reported as they actually come out.
    """
    counts = [int(m) for m in m_list]
    checks: list[ScalingLawCheck] = []
    base = {"median": median_mub(counts), "optimized": optimized_mub(counts)}
    for lam in lambdas:
        lam = int(lam)
        if lam < 1:
            raise InvalidParams(f"scale factor must be >= 1, got {lam}")
        sampled = [lam * m for m in counts]
        duplicated = counts * lam

        checks.append(
            _eq_check("mub_median", "sample", lam, median_mub(sampled), lam * base["median"])
        )
        checks.append(
            _eq_check(
                "mub_optimized", "sample", lam, optimized_mub(sampled), lam * base["optimized"]
            )
        )
        checks.append(
            _eq_check("mub_median", "user", lam, median_mub(duplicated), base["median"])
        )
        checks.append(
            _eq_check(
                "mub_optimized", "user", lam, optimized_mub(duplicated), base["optimized"]
            )
        )

        for rule, ub in base.items():
            k_wrap = array_count_k(counts, ub)
            k_best = best_fit_count(counts, ub)
            checks.append(
                _eq_check(
                    f"k_wrap_{rule}", "sample", lam, array_count_k(sampled, lam * ub), k_wrap
                )
            )
            checks.append(
                _eq_check(
                    f"k_best_{rule}", "sample", lam, best_fit_count(sampled, lam * ub), k_best
                )
            )
            checks.append(
                _eq_check(
                    f"k_wrap_{rule}", "user", lam, array_count_k(duplicated, ub), lam * k_wrap
                )
            )
            checks.append(
                _eq_check(
                    f"k_best_{rule}", "user", lam, best_fit_count(duplicated, ub), lam * k_best
                )
            )
            k_wrap_dup = array_count_k(duplicated, ub)
            checks.append(
                ScalingLawCheck(
                    f"k_wrap_{rule}_bounds",
                    "user",
                    lam,
                    lam * k_wrap <= k_wrap_dup <= lam * k_wrap + lam - 1,
                    f"scaled={k_wrap_dup} range=[{lam * k_wrap}, {lam * k_wrap + lam - 1}]",
                )
            )

        checks.append(
            _eq_check(
                "delta_mean",
                "sample",
                lam,
                mean_sensitivity(sampled, bound_u).value,
                mean_sensitivity(counts, bound_u).value,
            )
        )

        ub = base["optimized"]
        k_best = best_fit_count(counts, ub)
        tau = concentration_tau(bound_u, k_best, gamma, ub)
        if 3 * tau <= bound_u:
            k_best_s = best_fit_count(sampled, lam * ub)
            tau_s = concentration_tau(bound_u, k_best_s, gamma, lam * ub)
            lhs = levy_planning_delta(bound_u, k_best_s, tau_s)
            rhs = levy_planning_delta(bound_u, k_best, tau) / math.sqrt(lam)
            checks.append(
                ScalingLawCheck(
                    "delta_levy",
                    "sample",
                    lam,
                    math.isclose(lhs, rhs, rel_tol=1e-12),
                    f"scaled={lhs!r} expected={rhs!r}",
                )
            )
    return checks
