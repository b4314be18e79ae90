"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and rank shortfalls with 4.
"""


class RpodError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(RpodError, ValueError):
    """Invalid user-supplied configuration or arguments."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DimensionError(ConfigError):
    """Operands with incompatible shapes."""


class CflError(ConfigError):
    """Explicit time step exceeds the stability limit of the operator."""

    def __init__(self, message, max_stable_dt):
        super().__init__(message, field="dt")
        self.max_stable_dt = max_stable_dt


class NumericalError(RpodError, ArithmeticError):
    """A numerical kernel could not deliver its contract."""


class ConvergenceError(NumericalError):
    pass


class SingularMatrixError(NumericalError):
    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class DefectiveMatrixError(NumericalError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DivergenceError(NumericalError):
    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class BreakdownError(NumericalError):
    """Two-sided Gram-Schmidt hit a (near) zero pivot."""

    def __init__(self, message, column):
        super().__init__(message)
        self.column = column


class EmptyIntersectionError(NumericalError):
    """No left/right eigenvalue pair matched within tolerance."""


class RankShortfallError(RpodError):
    """The (sub-)Hankel matrix has lower numerical rank than requested."""

    def __init__(self, message, rank, order):
        super().__init__(message)
        self.rank = rank
        self.order = order
