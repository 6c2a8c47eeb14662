#!/usr/bin/env python3
"""
Exception and warning types shared by every wedgewave module.

Numerical failures derive from NumericalError so the CLI can map them to
exit status 3; configuration failures carry the dotted field path.
"""


class WedgewaveError(Exception):
    """Base class for all wedgewave errors."""


# --- model construction ---------------------------------------------------

class DimensionOverflowError(WedgewaveError):
    """Truncated space exceeds the configured dimension bound."""

    def __init__(self, dim, bound):
        super().__init__(f"truncated dimension {dim} exceeds bound {bound}")
        self.dim = dim
        self.bound = bound


class GridMismatchError(WedgewaveError):
    """A test function was built on a different mode grid."""


class SupportViolationError(WedgewaveError):
    """A generating pair does not sit inside the requested wedge."""

    def __init__(self, wedge, pair_index, reason):
        super().__init__(f"pair {pair_index} violates {wedge}: {reason}")
        self.wedge = wedge
        self.pair_index = pair_index


class WedgeMismatchError(WedgewaveError):
    """Asymptotic field kind requested for an element of the wrong wedge."""


class NotAWaveError(WedgewaveError):
    """Vector does not lie in ran(P+) resp. ran(P-)."""


class ReflectionError(WedgewaveError):
    """Geometric reflection fails one of its defining identities."""


# --- numerics ------------------------------------------------------------

class NumericalError(WedgewaveError):
    """Base class for failures of a numerical procedure."""


class QuadratureBudgetExceeded(NumericalError):
    """Requested accuracy needs more nodes than the configured budget."""

    def __init__(self, needed, budget, what="quadrature"):
        super().__init__(f"{what} needs {needed} nodes, budget is {budget}")
        self.needed = needed
        self.budget = budget


class NonConvergenceError(NumericalError):
    """Residuals along a schedule fail the decrease criterion."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ExtrapolationError(NumericalError):
    """Regulator extrapolation does not settle."""


class ApproximantError(NumericalError):
    """No dictionary combination reproduces the requested vector."""

    def __init__(self, residual, tolerance):
        super().__init__(
            f"best approximant misses target by {residual:.3e} (tolerance {tolerance:.1e})"
        )
        self.residual = residual
        self.tolerance = tolerance


class PathDisagreementError(NumericalError):
    """Two independent computations of the same state disagree."""

    def __init__(self, distance, tolerance):
        super().__init__(f"paths disagree by {distance:.3e} (tolerance {tolerance:.1e})")
        self.distance = distance
        self.tolerance = tolerance


# --- modular theory ------------------------------------------------------

class ModularError(WedgewaveError):
    """Base class for failures of the modular construction."""


class NotCyclicError(ModularError):
    """algebra * Omega does not span the space."""


class NotSeparatingError(ModularError):
    """commutant * Omega does not span the space."""


# --- spectrum cache ------------------------------------------------------

class SpectrumCacheError(WedgewaveError):
    """Base class for spectral cache failures."""


class StaleCacheError(SpectrumCacheError):
    """Cached file belongs to a different model."""


class CacheChecksumError(SpectrumCacheError):
    """Cached file content does not match its checksum."""


# --- configuration -------------------------------------------------------

class ConfigError(WedgewaveError):
    """Invalid configuration value."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# --- warnings ------------------------------------------------------------

class SupportOverlapWarning(UserWarning):
    """Commutator requested for test functions with overlapping supports."""


class RankDeficiencyWarning(UserWarning):
    """Sampled pairs do not span the requested space."""
