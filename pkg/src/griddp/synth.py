"""Synthetic occupancy and value generation for the evaluation harness.

The structural model: user index l (1-based) belongs to tier
j = floor(log2 l), so tier j holds 2^j users, and the user occupies
G - j uniformly chosen distinct grids. With the defaults (12 grids,
4095 users) the tiers are exactly j = 0..11 and one user touches all
grids while half touch a single one. Per occupied grid the sample count
is geometric on {1, 2, ...}. heavy_gamma > 0 inflates each grid's
largest count (first in token order on ties) to ceil((1 + gamma) * m),
making one user dominate; 0 leaves counts untouched.

Values are a normal distribution projected onto [0, U], which piles the
tail mass onto the endpoints 0 and U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dataset import Dataset, OccupancyArray
from .errors import InvalidParams
from .rng import RngStream


@dataclass(frozen=True)
class SynthParams:
    grids: int = 12
    users: int = 4095
    bound_u: float = 65.0
    geometric_q: float = 0.01
    heavy_gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.grids < 1:
            raise InvalidParams(f"need at least one grid, got {self.grids}")
        if self.users < 1:
            raise InvalidParams(f"need at least one user, got {self.users}")
        if self.users > 2**self.grids - 1:
            raise InvalidParams(
                f"user count {self.users} exceeds 2^{self.grids} - 1; the top "
                "tier would occupy fewer than one grid"
            )
        if not self.bound_u > 0:
            raise InvalidParams(f"value bound must be positive, got {self.bound_u}")
        if not 0 < self.geometric_q < 1:
            raise InvalidParams(
                f"geometric parameter must be in (0, 1), got {self.geometric_q}"
            )
        if self.heavy_gamma < 0:
            raise InvalidParams(
                f"heavy-user inflation must be >= 0, got {self.heavy_gamma}"
            )


@dataclass(frozen=True)
class ValueModel:
    mean: float = 20.66769
    variance: float = 115.135
    bound_u: float = 65.0

    def __post_init__(self) -> None:
        if not self.variance > 0:
            raise InvalidParams(f"variance must be positive, got {self.variance}")
        if not self.bound_u > 0:
            raise InvalidParams(f"value bound must be positive, got {self.bound_u}")


def user_token(index: int, total: int) -> str:
    return f"u{index:0{len(str(total))}d}"


def grid_token(index: int, total: int) -> str:
    return f"g{index:0{len(str(total))}d}"


def generate_occupancy(params: SynthParams, rng: RngStream) -> OccupancyArray:
    """Draw the tiered occupancy structure and geometric counts.

    Draw order: users in index order, each drawing its grid subset and then
    one count per occupied grid in ascending grid order. The heavy-user
    inflation happens after all draws, so two runs with the same seed and
    different heavy_gamma share the underlying counts.
    """
    s = rng.split("occupancy")
    counts: dict[str, dict[str, int]] = {}
    for l in range(1, params.users + 1):
        tier = l.bit_length() - 1
        token = user_token(l, params.users)
        chosen = sorted(s.subset(params.grids, params.grids - tier))
        for g_idx in chosen:
            g = grid_token(g_idx + 1, params.grids)
            counts.setdefault(g, {})[token] = s.geometric(params.geometric_q)
    if params.heavy_gamma > 0:
        for g in counts:
            row = counts[g]
            top = max(sorted(row), key=lambda u: row[u])
            row[top] = math.ceil((1 + params.heavy_gamma) * row[top])
    return OccupancyArray(counts)


def generate_values(
    occupancy: OccupancyArray, model: ValueModel, rng: RngStream
) -> Dataset:
    """Fill an occupancy with values from the projected normal model.

    Draw order: grids in token order, users in token order within a grid,
    count draws per user. Each value is a normal draw pushed to the nearest
    endpoint of [0, U] when it falls outside.
    """
    s = rng.split("values")
    sigma = math.sqrt(model.variance)
    samples: dict[str, dict[str, list[float]]] = {}
    for g in occupancy.grids():
        samples[g] = {}
        for u in occupancy.users_in(g):
            n = occupancy.count(g, u)
            raw = s.normal(model.mean, sigma, size=n)
            samples[g][u] = [min(max(float(v), 0.0), model.bound_u) for v in raw]
    return Dataset(samples, model.bound_u)


SCALE_SAMPLE = "sample"
SCALE_USER = "user"


def scale_occupancy(
    occupancy: OccupancyArray, lam: int, mode: str
) -> OccupancyArray:
    """Grow an occupancy by an integer factor lam.

    sample mode multiplies every count by lam; user mode replaces each user
    with lam clones (token suffixed ~r) carrying identical rows.
    """
    if lam < 1:
        raise InvalidParams(f"scale factor must be >= 1, got {lam}")
    base = occupancy.as_dict()
    if mode == SCALE_SAMPLE:
        return OccupancyArray(
            {g: {u: lam * c for u, c in row.items()} for g, row in base.items()}
        )
    if mode == SCALE_USER:
        width = len(str(lam - 1)) if lam > 1 else 1
        return OccupancyArray(
            {
                g: {
                    f"{u}~{r:0{width}d}": c
                    for u, c in row.items()
                    for r in range(lam)
                }
                for g, row in base.items()
            }
        )
    raise InvalidParams(f"unknown scale mode {mode!r}")
