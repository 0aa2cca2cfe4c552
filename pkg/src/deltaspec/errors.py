"""Exception hierarchy shared by the solver and the CLI.

Each error class carries the CLI exit code it maps to; anything not listed
here exits 1.
"""

from __future__ import annotations


class DeltaspecError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(DeltaspecError):
    """Invalid configuration, unusable input, or violated precondition."""

    exit_code = 2


class PotentialParseError(ConfigError):
    """The potential description could not be parsed or evaluated."""


class UnsupportedPotentialError(ConfigError):
    """The potential falls outside the regimes the method can handle."""


class NoEigenvalueBelowFloor(DeltaspecError):
    """No eigenvalue exists below the essential-spectrum floor (or the
    configured search ceiling)."""

    exit_code = 3

    def __init__(self, message, *, floor=None, b=None):
        super().__init__(message)
        self.floor = floor
        self.b = b


class BracketFailure(DeltaspecError):
    """No sign change found when bracketing a perturbed eigenvalue."""

    exit_code = 4

    def __init__(self, message, *, t=None, r=None, lam_hi=None, lam_lo=None):
        super().__init__(message)
        self.t = t
        self.r = r
        self.lam_hi = lam_hi
        self.lam_lo = lam_lo


class PoleAtLambda(DeltaspecError):
    """The truncated Weyl function is singular (or vanishes) at this lambda.

    kind is "eigenvalue" when lambda hits a Dirichlet eigenvalue of the
    truncated problem (m blows up) and "m_zero" when m itself vanishes,
    making 1/m and the normalized Weyl solution unusable.
    """

    exit_code = 4

    def __init__(self, message, *, lam=None, b=None, kind="eigenvalue"):
        super().__init__(message)
        self.lam = lam
        self.b = b
        self.kind = kind


class InconsistentTable(DeltaspecError):
    """A sample table violates the structure a first eigenvalue function
    must have (ordering, sign of slopes, missing grid entries)."""

    exit_code = 5


class WindowEmpty(DeltaspecError):
    """No grid points survived the reconstruction validity filters."""

    exit_code = 6


class NonConvergentTruncation(DeltaspecError):
    """Domain truncation did not stabilize before hitting the size cap."""

    def __init__(self, message, *, b=None, delta=None):
        super().__init__(message)
        self.b = b
        self.delta = delta


class OverflowInForbiddenRegion(DeltaspecError):
    """Solution magnitude left the representable range while integrating
    through a classically forbidden region.

    last_finite_x is the rightmost (or leftmost, for backward runs) grid
    point with finite values; restart from there with renormalized data.
    """

    def __init__(self, message, *, last_finite_x=None):
        super().__init__(message)
        self.last_finite_x = last_finite_x
