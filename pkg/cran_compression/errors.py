"""
Exception hierarchy for the simulator.

Every error also derives from the closest builtin exception so callers can
catch either the library class or the builtin one.
"""

from __future__ import annotations


class CranError(Exception):
    """Base class for all simulator errors."""


class InvalidInputError(CranError, ValueError):
    """A matrix or scalar argument violates its documented precondition."""


class NumericalError(CranError, ArithmeticError):
    """A numerical operation failed (singular or indefinite matrix)."""


class SizeLimitError(CranError, ValueError):
    """An enumeration would exceed its configured combinatorial cap."""


class InfeasibleBoundsError(CranError, ValueError):
    """Uncertainty bounds leave a stream without a positive worst-case level."""


class RobustSolverError(NumericalError):
    """No (mu, pattern) pair reaches the backhaul budget within tolerance."""

    def __init__(self, message: str, nearest_budget: float) -> None:
        super().__init__(message)
        self.nearest_budget = nearest_budget
        """Backhaul usage of the closest candidate found by the search."""


class DuplicateStationError(CranError, ValueError):
    """A base station was pushed twice into the side-information state."""


class ConfigError(CranError, ValueError):
    """An experiment configuration value is invalid."""
