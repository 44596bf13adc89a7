"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function (e.g. z <= 0 for u)."""


class ArbitrageError(DomainError):
    """The aggregator's marginal price exceeds the wholesale price.

    With p > lambda a prosumer can buy at lambda and resell at p without bound,
    so the query has no finite best response.
    """


class ConfigurationError(ValueError):
    """A scenario does not fit the setting an operation is defined for."""


class ScenarioError(ValueError):
    """A scenario file could not be parsed or failed validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class InfeasibleError(RuntimeError):
    """The dispatch program has no feasible point."""


class ConvergenceError(RuntimeError):
    """A solver hit its iteration cap before meeting the tolerance.

    Attributes:
        residuals: best residuals reached, keyed by name.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class SweepError(RuntimeError):
    """A sweep point failed; carries the capacity at which it happened."""

    def __init__(self, capacity, reason, error_type=""):
        super().__init__(capacity, reason, error_type)
        self.capacity = capacity
        self.reason = reason
        self.error_type = error_type

    def __str__(self):
        return f"sweep failed at capacity {self.capacity:.12g}: {self.reason}"
