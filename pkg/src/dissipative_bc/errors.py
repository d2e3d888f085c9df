"""Exception types shared across the package."""


class NumericalFailure(ArithmeticError):
    """A decomposition or iteration failed to converge."""


class InfeasibleInput(ValueError):
    """The input violates a precondition that makes the problem unsolvable
    (e.g. a non-Hurwitz matrix passed to a Lyapunov solver)."""


class DimensionError(ValueError):
    pass


class InvalidCase(ValueError):
    """Supply-rate parameters violate their sign constraints."""


class NoStabilizingQSR(RuntimeError):
    pass


class LearnerInfeasible(RuntimeError):
    """The constrained behavior-cloning program has no feasible point.

    ``diagnosis`` maps each sufficient feasibility condition (observer
    Hurwitz, S full rank, R PSD) to whether it holds.
    """

    def __init__(self, message, diagnosis=None):
        super().__init__(message)
        self.diagnosis = dict(diagnosis or {})
