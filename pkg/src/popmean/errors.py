"""Typed errors raised across the package.

Every failure mode that callers are expected to branch on gets its own class,
and every message starts with a stable phrase so that harnesses can count
error kinds from text output alone.
"""
from __future__ import annotations

__all__ = [
    "PopmeanError",
    "UnreachableSignalError",
    "CompoundSpaceError",
    "DegenerateReporterError",
    "AmbiguousMatchError",
    "RankDeficientError",
    "HerdingError",
    "DegenerateGroupingError",
    "NoSurpriseError",
    "UndefinedNormalizationError",
    "MisspecOverlapError",
    "UnidentifiableHierarchyError",
    "IncompatibleProfileError",
]


class PopmeanError(ValueError):
    """Base class for all package-specific errors."""


class UnreachableSignalError(PopmeanError):
    """A signal has zero marginal probability under the prior ("unreachable signal")."""


class CompoundSpaceError(PopmeanError):
    """A product lift would exceed the compound-signal cap ("compound space too large")."""


class DegenerateReporterError(PopmeanError):
    """Designated reporters' beliefs do not span the state space ("degenerate reporter pair")."""


class AmbiguousMatchError(PopmeanError):
    """Two state means are within tolerance of the population mean ("ambiguous state match")."""


class RankDeficientError(PopmeanError):
    """The population does not contain enough independent beliefs ("rank-deficient population")."""


class HerdingError(PopmeanError):
    """No two agents voted differently ("herding detected")."""


class DegenerateGroupingError(PopmeanError):
    """A mean-split group is empty, so group averages are undefined ("degenerate grouping")."""


class NoSurpriseError(PopmeanError):
    """Realized mean equals the reporter's expectation ("no surprise")."""


class UndefinedNormalizationError(PopmeanError):
    """A predicted vote share is zero, so a ratio is undefined ("undefined normalization")."""


class MisspecOverlapError(PopmeanError):
    """Noise half-width is large enough to overlap state means ("misspecification overlaps state means")."""


class UnidentifiableHierarchyError(PopmeanError):
    """Two information cells induce identical belief hierarchies ("unidentifiable hierarchy")."""


class IncompatibleProfileError(PopmeanError):
    """A reported cell profile has zero prior probability ("incompatible profile")."""
