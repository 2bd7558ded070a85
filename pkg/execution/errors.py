"""
errors.py — Exception hierarchy for uipt-lab.

Every failure raised by the library derives from UiptLabError, so app.py can
map it to exit code 1. Parameter-domain violations raise UsageError, which
app.py maps to exit code 2 like an argparse error.
"""

from __future__ import annotations


class UiptLabError(Exception):
    """Base class for every error raised by the lab."""


class UsageError(UiptLabError, ValueError):
    """A parameter is outside its documented domain (s ∉ [0,1], Σarcs ≠ q, ...)."""


class SeriesError(UiptLabError):
    """Ring mismatch, truncation overrun, or a non-invertible/non-square term."""


class EnumerationError(UiptLabError):
    """A division by x in the Tutte recurrence was not exact."""


class SkeletonError(UiptLabError):
    """The offspring law or an iterate could not be evaluated."""


class LawsError(UiptLabError):
    """Coefficient extraction failed (insufficient order, underflow, negative mass)."""


class AsymptoticsError(UiptLabError):
    """A quadrature did not converge or a finite-size order is out of reach."""


class SamplerError(UiptLabError):
    """A sampling table was exhausted or reached a zero-probability state."""


class VerifyError(UiptLabError):
    """Degenerate statistical input (empty sample, no degrees of freedom)."""


def require(condition: bool, message: str) -> None:
    """Raise UsageError(message) unless condition holds."""
    if not condition:
        raise UsageError(message)
