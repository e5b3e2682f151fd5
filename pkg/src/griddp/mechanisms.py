"""Private release mechanisms for per-grid mean (and variance) estimates.

Every mechanism takes the same ingredients: a dataset, a grid token, a
MechanismParams bundle, and an RngStream. Randomness is consumed in a fixed
documented order, so a given (inputs, seed) pair always yields the same
release.

Budget layout per mechanism, for a total privacy cost of epsilon:
- baseline / clip: epsilon/2 on the mean, epsilon/2 on the variance, i.e.
  Laplace scale 2*delta/epsilon on each coordinate.
- array averaging: the whole epsilon on the single mean coordinate.
- levy: epsilon/2 on the private interval, epsilon/2 on the noisy mean of
  projected array means.
- quantile: epsilon/4 on each private quantile, epsilon/2 on the noisy mean.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

from .dataset import Dataset, population_stats
from .errors import (
    EmptyGrid,
    EmptyValues,
    InvalidParams,
    InvalidPlan,
    NoBins,
    NonPositiveScale,
    ZeroRetained,
)
from .grouping import (
    STRATEGY_BEST,
    STRATEGY_WRAP,
    array_means,
    best_fit,
    median_mub,
    optimized_mub,
    wrap_around,
)
from .rng import RngStream, laplace_inverse_cdf
from .sensitivity import (
    array_avg_sensitivity,
    clipped_mean_sensitivity,
    clipped_variance_sensitivity,
)

QUANTILE_FIXED = "fixed"
QUANTILE_OPTIMIZED = "optimized"

# Fixed-mode quantile levels for the projection interval.
FIXED_LOW_LEVEL = 0.1
FIXED_HIGH_LEVEL = 0.9


@dataclass(frozen=True)
class MechanismParams:
    """Shared mechanism configuration.

    capacity: array size for the grouping mechanisms; None picks the rule
    default (lower median for plain array averaging, the exact integer
    maximizer of sum(min(m, c))/sqrt(c) for levy and quantile).
    gamma: failure probability of the concentration interval used by levy.
    """

    bound_u: float
    epsilon: float
    gamma: float = 0.2
    strategy: str = STRATEGY_BEST
    capacity: int | None = None
    quantile_mode: str = QUANTILE_FIXED

    def __post_init__(self) -> None:
        if not self.bound_u > 0:
            raise InvalidParams(f"value bound must be positive, got {self.bound_u}")
        if not self.epsilon > 0:
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.gamma < 1:
            raise InvalidParams(f"gamma must be in (0, 1), got {self.gamma}")
        if self.strategy not in (STRATEGY_WRAP, STRATEGY_BEST):
            raise InvalidParams(f"unknown grouping strategy {self.strategy!r}")
        if self.capacity is not None and self.capacity < 1:
            raise InvalidParams(f"capacity must be >= 1, got {self.capacity}")
        if self.quantile_mode not in (QUANTILE_FIXED, QUANTILE_OPTIMIZED):
            raise InvalidParams(f"unknown quantile mode {self.quantile_mode!r}")


@dataclass(frozen=True)
class IntervalEstimate:
    """Privately selected projection interval [a, b] around a bin center."""

    a: float
    b: float
    center: float
    costs: tuple[int, ...]
    midpoints: tuple[float, ...]


@dataclass(frozen=True)
class MechanismOutput:
    mechanism: str
    grid: str
    noisy_mean: float
    noise_scale_mean: float
    noisy_variance: float | None = None
    noise_scale_var: float | None = None
    interval: tuple[float, float] | None = None
    degenerate_ranks: bool = False
    arrays: int | None = None


def sample_laplace(scale: float, rng: RngStream) -> float:
    """One Laplace(scale) draw via the inverse CDF; consumes one uniform."""
    if not scale > 0:
        raise NonPositiveScale(f"laplace scale must be positive, got {scale}")
    return float(laplace_inverse_cdf(rng.random(), scale))


def _noise(scale: float, rng: RngStream) -> float:
    # Zero-sensitivity coordinates get no noise and burn no randomness.
    if scale > 0:
        return sample_laplace(scale, rng)
    return 0.0


def _grid_samples(dataset: Dataset, grid: str) -> dict[str, tuple[float, ...]]:
    return {u: dataset.values(grid, u) for u in dataset.users_in(grid)}


def clip_release(
    dataset: Dataset,
    grid: str,
    retained: dict[str, int],
    params: MechanismParams,
    rng: RngStream,
    label: str = "clip",
) -> MechanismOutput:
    """Release mean and variance of the first-gamma retained samples.

    retained maps user token to the number of samples kept; users absent
    from the mapping keep everything. Noise is calibrated to the retained
    counts only. Draw order: mean noise, then variance noise.
    """
    samples = _grid_samples(dataset, grid)
    unknown = set(retained) - set(samples)
    if unknown:
        raise InvalidPlan(f"plan names users absent from grid {grid}: {sorted(unknown)}")
    gammas: list[int] = []
    kept: list[float] = []
    for user in sorted(samples):
        g = int(retained.get(user, len(samples[user])))
        if not 0 <= g <= len(samples[user]):
            raise InvalidPlan(
                f"retained count for user {user} in grid {grid} must be in "
                f"[0, {len(samples[user])}], got {g}"
            )
        gammas.append(g)
        kept.extend(samples[user][:g])
    if not kept:
        raise ZeroRetained(f"plan suppresses every sample in grid {grid}")
    _, mean, variance = population_stats(kept)
    d_mean = clipped_mean_sensitivity(gammas, params.bound_u).value
    d_var = clipped_variance_sensitivity(gammas, params.bound_u).value
    scale_mean = 2 * d_mean / params.epsilon
    scale_var = 2 * d_var / params.epsilon
    return MechanismOutput(
        mechanism=label,
        grid=grid,
        noisy_mean=mean + _noise(scale_mean, rng),
        noise_scale_mean=scale_mean,
        noisy_variance=variance + _noise(scale_var, rng),
        noise_scale_var=scale_var,
    )


def baseline_release(
    dataset: Dataset, grid: str, params: MechanismParams, rng: RngStream
) -> MechanismOutput:
    """Full-data release: the clip mechanism with nothing clipped."""
    out = clip_release(dataset, grid, {}, params, rng, label="baseline")
    return out


def array_average_release(
    dataset: Dataset, grid: str, params: MechanismParams, rng: RngStream
) -> MechanismOutput:
    """Release the mean of array means with the whole budget on one draw."""
    samples = _grid_samples(dataset, grid)
    counts = [len(samples[u]) for u in sorted(samples)]
    capacity = params.capacity if params.capacity is not None else median_mub(counts)
    if params.strategy == STRATEGY_WRAP:
        groups = wrap_around(samples, capacity)
        if not groups:
            raise EmptyGrid(
                f"grid {grid} fills no array of capacity {capacity}; "
                "wrap-around needs at least one full array"
            )
    else:
        groups = best_fit(samples, capacity)
    means = array_means(groups)
    delta = array_avg_sensitivity(len(groups), params.bound_u, params.strategy).value
    scale = delta / params.epsilon
    return MechanismOutput(
        mechanism=f"array_average_{params.strategy}",
        grid=grid,
        noisy_mean=sum(means) / len(means) + _noise(scale, rng),
        noise_scale_mean=scale,
        arrays=len(groups),
    )


def concentration_tau(bound_u: float, k_bar: int, gamma: float, capacity: int) -> float:
    """Half-width bound: all array means of an iid grid stay within tau of
    the grid mean except with probability gamma."""
    if not bound_u > 0:
        raise InvalidParams(f"value bound must be positive, got {bound_u}")
    if k_bar < 1:
        raise InvalidParams(f"array count must be >= 1, got {k_bar}")
    if not 0 < gamma < 1:
        raise InvalidParams(f"gamma must be in (0, 1), got {gamma}")
    if capacity < 1:
        raise InvalidParams(f"capacity must be >= 1, got {capacity}")
    return bound_u * math.sqrt(math.log(2 * k_bar / gamma) / (2 * capacity))


def levy_planning_delta(bound_u: float, k_bar: int, tau: float) -> float:
    """Planning-time stand-in for the data-dependent projected sensitivity."""
    if k_bar < 1:
        raise InvalidParams(f"array count must be >= 1, got {k_bar}")
    return min(3 * tau, bound_u) / k_bar


def private_interval(
    means, eps_half: float, tau: float, bound_u: float, rng: RngStream
) -> IntervalEstimate:
    """Exponential-mechanism choice of a tau-grid cell covering the means.

    The value range (0, U] is cut into ceil(U/tau) bins of width tau (the
    last one short). Each mean is snapped to the nearest bin midpoint, ties
    to the lower one. A midpoint's cost is the larger of the snapped counts
    strictly below and strictly above it; midpoint T is drawn with weight
    exp(-eps_half * cost / 2) and the interval is
    [max(0, T - 1.5 tau), min(T + 1.5 tau, U)]. Consumes one uniform.
    """
    means = [float(v) for v in means]
    if not means:
        raise EmptyValues("no array means to locate")
    if not eps_half > 0:
        raise InvalidParams(f"interval budget must be positive, got {eps_half}")
    if not bound_u > 0:
        raise InvalidParams(f"value bound must be positive, got {bound_u}")
    if not tau > 0:
        raise NoBins(f"bin width must be positive, got {tau}")
    nbins = max(1, math.ceil(bound_u / tau))
    edges = [i * tau for i in range(nbins)] + [bound_u]
    midpoints = [(edges[i] + edges[i + 1]) / 2 for i in range(nbins)]

    snapped = [0] * nbins
    for v in means:
        pos = bisect_left(midpoints, v)
        if pos == 0:
            idx = 0
        elif pos == nbins:
            idx = nbins - 1
        elif v - midpoints[pos - 1] <= midpoints[pos] - v:
            idx = pos - 1
        else:
            idx = pos
        snapped[idx] += 1

    below = 0
    costs = []
    total_means = len(means)
    for j in range(nbins):
        above = total_means - below - snapped[j]
        costs.append(max(below, above))
        below += snapped[j]

    c_min = min(costs)
    weights = [math.exp(-eps_half * (c - c_min) / 2) for c in costs]
    total_w = sum(weights)
    r = rng.random() * total_w
    acc = 0.0
    chosen = nbins - 1
    for j, w in enumerate(weights):
        acc += w
        if r < acc:
            chosen = j
            break
    center = midpoints[chosen]
    return IntervalEstimate(
        a=max(0.0, center - 1.5 * tau),
        b=min(center + 1.5 * tau, bound_u),
        center=center,
        costs=tuple(costs),
        midpoints=tuple(midpoints),
    )


def levy_release(
    dataset: Dataset, grid: str, params: MechanismParams, rng: RngStream
) -> MechanismOutput:
    """Project best-fit array means onto a private interval, then average.

    Draw order: one uniform for the interval, one for the Laplace noise.
    """
    samples = _grid_samples(dataset, grid)
    counts = [len(samples[u]) for u in sorted(samples)]
    capacity = params.capacity if params.capacity is not None else optimized_mub(counts)
    groups = best_fit(samples, capacity)
    means = array_means(groups)
    k_bar = len(groups)
    tau = concentration_tau(params.bound_u, k_bar, params.gamma, capacity)
    est = private_interval(means, params.epsilon / 2, tau, params.bound_u, rng)
    projected = [min(max(v, est.a), est.b) for v in means]
    delta = (est.b - est.a) / k_bar
    scale = 2 * delta / params.epsilon
    return MechanismOutput(
        mechanism="levy",
        grid=grid,
        noisy_mean=sum(projected) / k_bar + _noise(scale, rng),
        noise_scale_mean=scale,
        interval=(est.a, est.b),
        arrays=k_bar,
    )


def private_quantile(
    values, q_level: float, eps_q: float, bound_u: float, rng: RngStream
) -> float:
    """Exponential-mechanism quantile over [0, U]; consumes two uniforms.

    Sorted values plus sentinels 0 and U cut [0, U] into n+1 intervals;
    interval i gets mass width * exp(-(eps_q/2) * |i - q*n|), then the
    return value is uniform inside the drawn interval.
    """
    xs = sorted(min(max(float(v), 0.0), float(bound_u)) for v in values)
    if not xs:
        raise EmptyValues("no values to take a quantile of")
    if not 0 <= q_level <= 1:
        raise InvalidParams(f"quantile level must be in [0, 1], got {q_level}")
    if not eps_q > 0:
        raise InvalidParams(f"quantile budget must be positive, got {eps_q}")
    if not bound_u > 0:
        raise InvalidParams(f"value bound must be positive, got {bound_u}")
    n = len(xs)
    pts = [0.0] + xs + [float(bound_u)]
    target = q_level * n
    utilities = [-abs(i - target) for i in range(n + 1)]
    shift = max(utilities)
    weights = [
        (pts[i + 1] - pts[i]) * math.exp((eps_q / 2) * (utilities[i] - shift))
        for i in range(n + 1)
    ]
    total_w = sum(weights)
    if total_w <= 0:
        # Every usable interval underflowed; fall back to the widest one.
        chosen = max(range(n + 1), key=lambda i: (pts[i + 1] - pts[i], -i))
    else:
        r = rng.random() * total_w
        acc = 0.0
        chosen = n
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                chosen = i
                break
    return pts[chosen] + rng.random() * (pts[chosen + 1] - pts[chosen])


def quantile_release(
    dataset: Dataset, grid: str, params: MechanismParams, rng: RngStream
) -> MechanismOutput:
    """Project best-fit array means between two private quantiles.

    Fixed mode uses levels 0.1 and 0.9. Optimized mode targets ranks
    floor(2/eps) from the bottom and ceil(2/eps) from the top, clamped to
    floor((k-1)/2) when the grid has too few arrays (flagged as degenerate
    ranks). Draw order: two uniforms per quantile (low then high), then one
    for the Laplace noise.
    """
    samples = _grid_samples(dataset, grid)
    counts = [len(samples[u]) for u in sorted(samples)]
    capacity = params.capacity if params.capacity is not None else optimized_mub(counts)
    groups = best_fit(samples, capacity)
    means = array_means(groups)
    k_bar = len(groups)
    degenerate = False
    if params.quantile_mode == QUANTILE_FIXED:
        q_lo, q_hi = FIXED_LOW_LEVEL, FIXED_HIGH_LEVEL
    else:
        t_hi = math.ceil(2 / params.epsilon)
        t_lo = math.floor(2 / params.epsilon)
        rank_cap = (k_bar - 1) // 2
        degenerate = t_hi > rank_cap or t_lo > rank_cap
        t_hi = min(t_hi, rank_cap)
        t_lo = min(t_lo, rank_cap)
        q_lo = t_lo / k_bar
        q_hi = 1 - t_hi / k_bar
    eps_q = params.epsilon / 4
    a = private_quantile(means, q_lo, eps_q, params.bound_u, rng)
    b = private_quantile(means, q_hi, eps_q, params.bound_u, rng)
    if a > b:
        a, b = b, a
    projected = [min(max(v, a), b) for v in means]
    delta = (b - a) / k_bar
    scale = 2 * delta / params.epsilon
    return MechanismOutput(
        mechanism=f"quantile_{params.quantile_mode}",
        grid=grid,
        noisy_mean=sum(projected) / k_bar + _noise(scale, rng),
        noise_scale_mean=scale,
        interval=(a, b),
        degenerate_ranks=degenerate,
        arrays=k_bar,
    )


_RELEASES = {
    "baseline": baseline_release,
    "array_average": array_average_release,
    "levy": levy_release,
    "quantile": quantile_release,
}


def release(
    dataset: Dataset, grid: str, mechanism: str, params: MechanismParams, rng: RngStream
) -> MechanismOutput:
    """Dispatch by mechanism name; clip releases need a plan, use clip_release."""
    if mechanism == "clip":
        return clip_release(dataset, grid, {}, params, rng)
    if mechanism not in _RELEASES:
        raise InvalidParams(f"unknown mechanism {mechanism!r}")
    return _RELEASES[mechanism](dataset, grid, params, rng)


__all__ = [
    "MechanismParams",
    "IntervalEstimate",
    "MechanismOutput",
    "sample_laplace",
    "clip_release",
    "baseline_release",
    "array_average_release",
    "concentration_tau",
    "levy_planning_delta",
    "private_interval",
    "levy_release",
    "private_quantile",
    "quantile_release",
    "release",
]
