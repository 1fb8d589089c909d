"""Exception hierarchy shared by the solver modules."""


class EconPotentialError(Exception):
    """Base class for all library errors."""


class DomainError(EconPotentialError, ValueError):
    """An argument lies outside the domain where a function is finite."""


class ConstructionError(EconPotentialError, ValueError):
    """Parameters violate the constraints of a model object."""


class TieError(EconPotentialError):
    """Demand is set-valued: several goods attain the best bang per buck."""


class InfeasibleError(EconPotentialError, ValueError):
    """An allocation uses more of some good than the economy holds."""


class ConvergenceError(EconPotentialError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""


class UnsupportedEconomyError(EconPotentialError, NotImplementedError):
    """The requested solve is not implemented for this economy's shape."""


class NoSolutionFound(EconPotentialError, RuntimeError):
    """No multistart run of the weight solver converged.

    The best residual reached is kept on ``best_residual``.
    """

    def __init__(self, message, best_residual=float("nan"), best_alpha=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_alpha = best_alpha


class TieAmbiguityWarning(UserWarning):
    """The welfare maximizer is not unique (utilities are not strictly concave)."""
