"""Packing per-user samples into fixed-capacity arrays.

Two strategies over one grid's samples, both clipping each user to their
first min(m_l, capacity) samples and processing users in non-increasing
count order (ties by token):

- wrap_around: fills arrays contiguously, splitting a user's block across
  array boundaries; only completely full arrays are returned, so the count
  equals floor(sum_l min(m_l, capacity) / capacity) and any user touches at
  most two adjacent arrays.
- best_fit: places each user's whole block into the least-indexed most
  filled array with room, so every user touches exactly one array and no
  array is ever split.

Capacity selection rules: the lower median of the counts, or the integer
maximizing sum_l min(m_l, c) / sqrt(c) (compared in exact integer
arithmetic, smallest maximizer on ties).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyValues, InvalidCapacity, NonPositiveCount, ZeroTotal

STRATEGY_WRAP = "wrap"
STRATEGY_BEST = "best"


@dataclass(frozen=True)
class ArrayGroup:
    """One packed array: values plus the user each value came from."""

    index: int
    capacity: int
    values: tuple[float, ...]
    source_users: tuple[str, ...]


def _check_counts(m_list) -> list[int]:
    counts = [int(m) for m in m_list]
    if not counts:
        raise ZeroTotal("count list is empty")
    if any(m < 1 for m in counts):
        raise NonPositiveCount(f"counts must be >= 1, got {counts}")
    return counts


def _check_capacity(capacity: int) -> int:
    if capacity < 1:
        raise InvalidCapacity(f"array capacity must be >= 1, got {capacity}")
    return int(capacity)


def array_count_k(m_list, capacity: int) -> int:
    """Number of full arrays produced by wrap_around."""
    counts = _check_counts(m_list)
    capacity = _check_capacity(capacity)
    return sum(min(m, capacity) for m in counts) // capacity


def median_mub(m_list) -> int:
    """Lower median of the counts (the smaller middle element when even)."""
    counts = sorted(_check_counts(m_list))
    return counts[(len(counts) - 1) // 2]


def optimized_mub(m_list) -> int:
    """Integer c in [min m, max m] maximizing sum_l min(m_l, c) / sqrt(c).

    The comparison S(c1)^2 * c2 > S(c2)^2 * c1 is done in integers, so the
    maximizer (and the smallest-on-tie rule) is exact.
    """
    counts = sorted(_check_counts(m_list))
    lo, hi = counts[0], counts[-1]
    best_c = lo
    best_s = sum(min(m, lo) for m in counts)
    # Walk c upward, maintaining sum(min(m, c)) incrementally.
    idx = 0
    prefix = 0
    while idx < len(counts) and counts[idx] < lo:
        prefix += counts[idx]
        idx += 1
    for c in range(lo, hi + 1):
        while idx < len(counts) and counts[idx] < c:
            prefix += counts[idx]
            idx += 1
        s = prefix + c * (len(counts) - idx)
        if s * s * best_c > best_s * best_s * c:
            best_c, best_s = c, s
    return best_c


def _ordered_users(samples_by_user: dict[str, tuple[float, ...]]) -> list[str]:
    # Non-increasing by count, ties by token.
    return sorted(samples_by_user, key=lambda u: (-len(samples_by_user[u]), u))


def wrap_around(
    samples_by_user: dict[str, tuple[float, ...]], capacity: int
) -> list[ArrayGroup]:
    """Pack one grid's samples contiguously; return only the full arrays."""
    capacity = _check_capacity(capacity)
    if not samples_by_user or all(len(v) == 0 for v in samples_by_user.values()):
        raise ZeroTotal("no samples to group")
    values: list[list[float]] = []
    sources: list[list[str]] = []
    cursor = 0
    for user in _ordered_users(samples_by_user):
        block = samples_by_user[user][: min(len(samples_by_user[user]), capacity)]
        for v in block:
            while cursor >= len(values):
                values.append([])
                sources.append([])
            values[cursor].append(float(v))
            sources[cursor].append(user)
            if len(values[cursor]) == capacity:
                cursor += 1
    full = sum(1 for arr in values if len(arr) == capacity)
    return [
        ArrayGroup(i, capacity, tuple(values[i]), tuple(sources[i]))
        for i in range(full)
    ]


def _assign_best_fit(sizes: list[int], capacity: int) -> list[int]:
    """Array index per block: least-indexed most-filled array with room."""
    fills: list[int] = []
    assignment: list[int] = []
    for r in sizes:
        best = -1
        for idx, w in enumerate(fills):
            if capacity - w >= r and (best < 0 or w > fills[best]):
                best = idx
        if best < 0:
            fills.append(0)
            best = len(fills) - 1
        fills[best] += r
        assignment.append(best)
    return assignment


def best_fit(
    samples_by_user: dict[str, tuple[float, ...]], capacity: int
) -> list[ArrayGroup]:
    """Pack one grid's samples keeping each user inside a single array."""
    capacity = _check_capacity(capacity)
    if not samples_by_user or all(len(v) == 0 for v in samples_by_user.values()):
        raise ZeroTotal("no samples to group")
    users = _ordered_users(samples_by_user)
    sizes = [min(len(samples_by_user[u]), capacity) for u in users]
    assignment = _assign_best_fit(sizes, capacity)
    n_arrays = max(assignment) + 1
    values: list[list[float]] = [[] for _ in range(n_arrays)]
    sources: list[list[str]] = [[] for _ in range(n_arrays)]
    for user, size, idx in zip(users, sizes, assignment):
        values[idx].extend(float(v) for v in samples_by_user[user][:size])
        sources[idx].extend([user] * size)
    return [
        ArrayGroup(i, capacity, tuple(values[i]), tuple(sources[i]))
        for i in range(n_arrays)
    ]


def best_fit_count(m_list, capacity: int) -> int:
    """Number of arrays best_fit opens for the given counts alone."""
    counts = _check_counts(m_list)
    capacity = _check_capacity(capacity)
    order = sorted(range(len(counts)), key=lambda i: (-counts[i], i))
    sizes = [min(counts[i], capacity) for i in order]
    assignment = _assign_best_fit(sizes, capacity)
    return max(assignment) + 1


def array_means(groups: list[ArrayGroup]) -> list[float]:
    """Mean of each array, in array index order."""
    if not groups:
        raise EmptyValues("no arrays to average")
    out = []
    for g in groups:
        if not g.values:
            raise EmptyValues(f"array {g.index} is empty")
        out.append(sum(g.values) / len(g.values))
    return out
