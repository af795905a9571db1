"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class InspectionError(Exception):
    """Base class for all package errors."""


class InvalidParams(InspectionError, ValueError):
    pass


class Infeasible(InspectionError):
    """Raised when no inspection policy can induce work.

    ``report`` carries the :class:`~inspection_timing.model.AssumptionReport`
    that failed, when one is available.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class WrongRegime(InspectionError):
    pass


class NonConvergence(InspectionError):
    pass


class DivergentCost(InspectionError):
    pass


class InfeasibleConstraint(InspectionError):
    pass


class PreconditionViolated(InspectionError, ValueError):
    pass
