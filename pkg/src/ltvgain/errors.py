"""Exception hierarchy shared by the analysis modules."""


class LtvGainError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LtvGainError, ValueError):
    """A system or spec violates its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class OutOfDomainError(LtvGainError, ValueError):
    """Evaluation requested outside the stored time range."""


class DegenerateSignalError(LtvGainError, ValueError):
    """A signal with zero norm where a direction is required."""


class DivergenceError(LtvGainError, ArithmeticError):
    """A simulation that must not blow up did."""


class NonFiniteDerivativeError(LtvGainError, ArithmeticError):
    """The right-hand side is already non-finite at the initial point."""


class SingularMatrixError(LtvGainError, ArithmeticError):
    pass


class AsymmetricMatrixError(LtvGainError, ValueError):
    pass


class InfeasibleGammaError(LtvGainError, ValueError):
    """R(t) = D_I^T D_I - gamma^2 I is not negative definite somewhere on the grid."""

    def __init__(self, gamma, time):
        self.gamma = gamma
        self.time = time
        super().__init__(
            f"gamma={gamma:g} is infeasible: D_I^T D_I - gamma^2 I is not negative "
            f"definite at t={time:g}"
        )


class UnboundedGainError(LtvGainError, ArithmeticError):
    pass


class ConstructionFailedError(LtvGainError):
    """The disturbance built from an incomplete RDE failed its gain check."""

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)


class UnreachableOutputError(LtvGainError, ValueError):
    pass
