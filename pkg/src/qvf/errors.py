"""Exception hierarchy.

``InputError`` subclasses map to CLI exit code 2, ``NumericalFailure``
subclasses to exit code 3.
"""

from __future__ import annotations


class QVFError(Exception):
    """Base class for all package errors."""

    def details(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class InputError(QVFError, ValueError):
    pass


class NumericalFailure(QVFError, ArithmeticError):
    pass


class ZeroImaginaryPart(InputError):
    """The linear coefficient has no rotation, so the origin is not a focus of the assumed form."""


class FormMismatch(InputError):
    pass


class DomainError(InputError):
    pass


class PreconditionViolation(InputError):
    pass


class Degenerate(NumericalFailure):
    """The singular set is not isolated (line of singular points)."""


class SingularCrossing(NumericalFailure):
    def __init__(self, theta: float, denom: float):
        super().__init__(f"|1 + w g| = {denom:.3e} below guard at theta = {theta:.6f}")
        self.theta = theta
        self.denom = denom

    def details(self) -> dict:
        return {**super().details(), "theta": self.theta, "denominator": self.denom}


class Escape(NumericalFailure):
    def __init__(self, theta: float, modulus: float):
        super().__init__(f"|w| = {modulus:.3e} exceeded the escape cap at theta = {theta:.6f}")
        self.theta = theta
        self.modulus = modulus

    def details(self) -> dict:
        return {**super().details(), "theta": self.theta, "modulus": self.modulus}


class StepFailure(NumericalFailure):
    def __init__(self, theta: float, step: float):
        super().__init__(f"step size underflow ({step:.3e}) at theta = {theta:.6f}")
        self.theta = theta
        self.step = step

    def details(self) -> dict:
        return {**super().details(), "theta": self.theta, "step": self.step}


class EmptyArc(QVFError):
    pass


class EmptyRegion(InputError):
    pass


class ZeroPolynomial(InputError):
    pass
