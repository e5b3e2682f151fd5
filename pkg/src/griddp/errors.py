"""Exception types shared across the package.

Every input-validation failure raises a named subclass of GridDPError so
callers (and the CLI) can distinguish bad data from bugs.
"""


class GridDPError(Exception):
    """Base class for all errors raised by this package."""


class MalformedRow(GridDPError):
    """A CSV row does not match the expected header or cannot be parsed."""


class ValueOutOfRange(GridDPError):
    """A sample value lies outside [0, bound_u]."""


class EmptyDataset(GridDPError):
    """No data rows were found."""


class NonPositiveCount(GridDPError):
    """An occupancy count is zero or negative."""


class DuplicateEntry(GridDPError):
    """The same (user, grid) pair appears twice in an occupancy file."""


class UnknownGrid(GridDPError):
    """A grid token is not present in the dataset or occupancy."""


class InvalidCapacity(GridDPError):
    """An array capacity bound is outside [min count, max count] or < 1."""


class ZeroTotal(GridDPError):
    """A sensitivity or bias computation received an empty count list."""


class ZeroRetained(GridDPError):
    """All retained counts are zero; clipped statistics are undefined."""


class InvalidPlan(GridDPError):
    """A clipping plan disagrees with the occupancy it applies to."""


class NonPositiveScale(GridDPError):
    """A Laplace noise scale must be strictly positive."""


class EmptyGrid(GridDPError):
    """A release was requested for a grid with no samples."""


class NoBins(GridDPError):
    """The interval routine needs a strictly positive bin width."""


class EmptyValues(GridDPError):
    """An operation over a value collection received no values."""


class OccupancyMismatch(GridDPError):
    """A dataset and an occupancy/plan disagree about counts or tokens."""


class InvalidParams(GridDPError):
    """A scalar parameter (epsilon, bound, probability, factor) is invalid."""


class TooLarge(GridDPError):
    """A brute-force routine was asked to exceed its enumeration budget."""


class UsageError(GridDPError):
    """The CLI was invoked with an inconsistent set of flags."""


class IoError(GridDPError):
    """A file could not be read or written."""
