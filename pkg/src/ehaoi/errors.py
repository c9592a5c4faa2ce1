"""Exception hierarchy shared by every ehaoi module."""


class AoIError(Exception):
    """Base class for all ehaoi errors."""


class InvalidParams(AoIError, ValueError):
    pass


class UnstableSystem(InvalidParams):
    pass


class InvalidCapacity(InvalidParams):
    pass


class InvalidRate(InvalidParams):
    pass


class PenaltyDiverges(AoIError, ArithmeticError):
    pass


class MgfDiverges(PenaltyDiverges):
    pass


class UnsupportedPenalty(AoIError, ValueError):
    pass


class NonIntegrable(AoIError, ArithmeticError):
    pass


class QuadratureFailed(AoIError, ArithmeticError):
    pass


class NegativePenalty(AoIError, ArithmeticError):
    pass


class Infeasible(AoIError, ValueError):
    pass


class DegenerateArgument(AoIError, ValueError):
    pass


class NotConverged(AoIError, RuntimeError):
    def __init__(self, message, spectral_radius=float("nan"), iterations=0):
        super().__init__(message)
        self.spectral_radius = spectral_radius
        self.iterations = iterations


class DegenerateNullSpace(AoIError, ArithmeticError):
    pass


class ModeUnsupported(AoIError, ValueError):
    pass
