"""Exception types raised across the package."""


class RobustDuelError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(RobustDuelError, ValueError):
    pass


class DimensionMismatch(RobustDuelError, ValueError):
    pass


class DomainExceedsLinearRegion(RobustDuelError, ValueError):
    """A piecewise-linear link would be evaluated outside its linear branch."""


class InvalidTheta(RobustDuelError, ValueError):
    pass


class BudgetViolation(RobustDuelError, AssertionError):
    pass


class NoConvergence(RobustDuelError, ArithmeticError):
    pass


class WrongLink(RobustDuelError, ValueError):
    pass


class EmptyInput(RobustDuelError, ValueError):
    pass


class ConfigError(RobustDuelError, ValueError):
    pass


class EpisodeFailure(RobustDuelError):
    """Numerical failure inside an episode, tagged with the 1-based round."""

    def __init__(self, round_index, cause):
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index
        self.cause = cause
